//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qevent::em_field::{current_and_continuity, field_tensor, homogeneous_maxwell_residual, GridField, GridGeometry};
use qevent::histories::{flip_consistency, pair_transition_frequency, CandidateLattice, EventHistory, HistorySampler};
use qevent::nonrel::{observed_orders, LimitStudy};
use qevent::poincare::{invariance_report, PoincareElement, DEFAULT_RAPIDITY_CAP};
use qevent::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn packet(x: &[f64], p: &[f64], w: &[f64], amp: Complex64) -> GaussianEventPacket {
    GaussianEventPacket::new(FourVector::natural(x).unwrap(), FourVector::natural(p).unwrap(), w, amp).unwrap()
}

/// Packet centred within ±0.3 of the mass shell of `branch` (+1 / −1) shifted by `a`.
fn random_packet(rng: &mut ChaCha20Rng, d: usize, m: f64, branch: f64, a: &[f64]) -> GaussianEventPacket {
    let x: Vec<f64> = (0..=d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let k: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut p = vec![branch * shell_energy(&k, m) + a[0] + rng.gen_range(-0.3..0.3)];
    p.extend(k.iter().zip(&a[1..]).map(|(k, a)| k + a));
    let w: Vec<f64> = (0..=d).map(|_| rng.gen_range(0.2..0.6)).collect();
    let amp = Complex64::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
    packet(&x, &p, &w, amp)
}

fn free_pair(rng: &mut ChaCha20Rng, d: usize) -> (GaussianEventPacket, GaussianEventPacket) {
    let zero = [0.0; 4];
    let b1 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let b2 = if rng.gen_bool(0.8) { b1 } else { -b1 };
    (random_packet(rng, d, 1.0, b1, &zero), random_packet(rng, d, 1.0, b2, &zero))
}

fn self_tau(psi: &GaussianEventPacket, g: &Propagator, q: &ShellQuadrature) -> f64 {
    transition_amplitude(psi, psi, g, q).unwrap().re
}

/// Pairs are drawn from a pool of random packets per dimension so each self-amplitude is computed once.
/// The library's own P is evaluated on every pair for d = 1, 2 and on every fourth pair for d = 3.
fn probability_axioms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (mut worst_schwarz, mut p_min, mut p_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let pool_size = 100;
    let pairs_per_dim = [420, 360, 240];
    for d in 1..=3 {
        let g = Propagator::free(d + 1, 1.0).unwrap();
        let q = ShellQuadrature::default_for(d);
        let pool: Vec<(GaussianEventPacket, f64)> = (0..pool_size)
            .map(|_| {
                let branch = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let psi = random_packet(&mut rng, d, 1.0, branch, &[0.0; 4]);
                let t = self_tau(&psi, &g, &q);
                (psi, t)
            })
            .collect();
        for i in 0..pairs_per_dim[d - 1] {
            let (a, b) = (rng.gen_range(0..pool_size), rng.gen_range(0..pool_size));
            let ((phi, tpp), (psi, tss)) = (&pool[a], &pool[b]);
            let tau = transition_amplitude(phi, psi, &g, &q).unwrap();
            let ratio = tau.norm_sqr() / (tpp * tss);
            worst_schwarz = worst_schwarz.max(ratio);
            let p = if d < 3 || i % 4 == 0 { transition_probability(phi, psi, &g, &q).unwrap() } else { ratio };
            p_min = p_min.min(p);
            p_max = p_max.max(p);
        }
    }
    let n: usize = pairs_per_dim.iter().sum();
    let elapsed = start.elapsed();
    outcome(
        p_min >= 0.0 && p_max <= 1.0 && worst_schwarz <= 1.0 + 1e-10 && elapsed < Duration::from_secs(120),
        format!(
            "{n} pairs d=1..3: P in [{p_min:.3e}, {p_max:.12}], max |tau|^2/(tau_pp tau_ss) = {worst_schwarz:.12} (<= 1+1e-10), {:.1}s (< 120s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn superselection() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let d = 1 + i % 3;
        // Energy centres near zero with wide spreads so both projections carry weight.
        let make = |rng: &mut ChaCha20Rng| {
            let x: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut p = vec![rng.gen_range(-0.5..0.5)];
            p.extend((0..d).map(|_| rng.gen_range(-0.5..0.5)));
            let mut w = vec![rng.gen_range(1.0..2.0)];
            w.extend((0..d).map(|_| rng.gen_range(0.3..0.8)));
            packet(&x, &p, &w, Complex64::new(1.0, rng.gen_range(-1.0..1.0)))
        };
        let (phi, psi) = (make(&mut rng), make(&mut rng));
        let g = Propagator::free(d + 1, 1.0).unwrap();
        let q = ShellQuadrature::default_for(d);
        let minus = energy_sign_project(&phi, -1).unwrap();
        let plus = energy_sign_project(&psi, 1).unwrap();
        let tau = transition_amplitude(&minus, &plus, &g, &q).unwrap();
        let scale = (self_tau(&phi, &g, &q) * self_tau(&psi, &g, &q)).sqrt();
        worst = worst.max(tau.norm() / scale);
    }
    outcome(worst < 1e-8, format!("100 pairs: max |tau(P-phi, P+psi)| / sqrt(tau_pp tau_ss) = {worst:.3e} (< 1e-8)"))
}

fn poincare_invariance() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (mut worst_t, mut worst_b) = (0.0f64, 0.0f64);
    for d in [1usize, 3] {
        let g = Propagator::free(d + 1, 1.0).unwrap();
        let q = ShellQuadrature::default_for(d);
        for _ in 0..50 {
            let (phi, psi) = free_pair(&mut rng, d);
            let a: Vec<f64> = (0..=d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let e = PoincareElement::translation(FourVector::natural(&a).unwrap());
            let r = invariance_report(&phi, &psi, &g, &e, &q, DEFAULT_RAPIDITY_CAP).unwrap();
            worst_t = worst_t.max(r.relative_error);
        }
        for _ in 0..20 {
            let (phi, psi) = free_pair(&mut rng, d);
            let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let eta = rng.gen_range(0.05..1.0);
            let theta: Vec<f64> = dir.iter().map(|v| eta * v / len).collect();
            let e = PoincareElement::boost(&theta).unwrap();
            let r = invariance_report(&phi, &psi, &g, &e, &q, DEFAULT_RAPIDITY_CAP).unwrap();
            worst_b = worst_b.max(r.relative_error);
        }
    }
    outcome(
        worst_t < 1e-8 && worst_b < 1e-6,
        format!("d=1,3: translations max rel err {worst_t:.3e} (< 1e-8), boosts |eta|<=1 max rel err {worst_b:.3e} (< 1e-6)"),
    )
}

/// Σ_s ∫ dk/(2E) conj(φ)ψ at p = A + (sE, k), estimated by importance sampling from a normal proposal.
fn monte_carlo_shell(
    phi: &GaussianEventPacket,
    psi: &GaussianEventPacket,
    m: f64,
    a: [f64; 2],
    n: usize,
    rng: &mut ChaCha20Rng,
) -> (Complex64, f64) {
    // |φψ| along k is roughly normal with the precision-weighted centre of the two packets.
    let (w1, w2) = (phi.widths_p()[1], psi.widths_p()[1]);
    let (k1, k2) = (1.0 / (w1 * w1), 1.0 / (w2 * w2));
    let centre = (k1 * phi.center_p()[1] + k2 * psi.center_p()[1]) / (k1 + k2) - a[1];
    let sd = 1.5 * (2.0 / (k1 + k2)).sqrt();
    let proposal = Normal::new(centre, sd).unwrap();
    let (mut sum, mut sq_re, mut sq_im) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for _ in 0..n {
        let k: f64 = proposal.sample(rng);
        let density = (-(k - centre).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt());
        let e = (k * k + m * m).sqrt();
        let mut f = Complex64::new(0.0, 0.0);
        for s in [1.0, -1.0] {
            let p = [a[0] + s * e, a[1] + k];
            f += phi.momentum_amplitude(&p).conj() * psi.momentum_amplitude(&p) / (2.0 * e);
        }
        let v = f / density;
        sum += v;
        sq_re += v.re * v.re;
        sq_im += v.im * v.im;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sq_re / nf - mean.re * mean.re) + (sq_im / nf - mean.im * mean.im);
    (mean, (var / nf).sqrt())
}

fn monte_carlo_oracle() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut mc_rng = ChaCha20Rng::seed_from_u64(40);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.gen_range(0.5..2.0);
        let a = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let branch = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let phi = random_packet(&mut rng, 1, m, branch, &a);
        let psi = random_packet(&mut rng, 1, m, branch, &a);
        let g = Propagator::new(m, FourVector::natural(&a).unwrap(), ShellSelector::Both, 1).unwrap();
        let q = ShellQuadrature::default_for(1);
        let lib = transition_amplitude(&phi, &psi, &g, &q).unwrap();
        // The library error estimate is bounded by its tolerance relative to the self-amplitudes.
        let lib_se = q.tolerance * (self_tau(&phi, &g, &q) * self_tau(&psi, &g, &q)).sqrt();
        let (mc, mc_se) = monte_carlo_shell(&phi, &psi, m, a, 200_000, &mut mc_rng);
        let combined = (mc_se * mc_se + lib_se * lib_se).sqrt();
        worst = worst.max((lib - mc).norm() / combined);
    }
    outcome(worst < 3.0, format!("50 cases d=1: max |lib - MC| / combined SE = {worst:.3} (< 3)"))
}

fn maxwell_identities() -> Outcome {
    let start = Instant::now();
    let geom = GridGeometry::new(FourVector::natural(&[0.0; 4]).unwrap(), &[0.05; 4], &[32; 4]).unwrap();
    let k = FourVector::natural(&[2.0, 1.2, -0.7, 0.5]).unwrap();
    let pol = [0.3, 1.0, -0.5, 0.2];
    let a = GridField::<f64>::from_fn(geom, 4, |x, out| {
        let phase = minkowski_dot(&k, &FourVector::natural(x).unwrap()).unwrap().sin();
        for (o, e) in out.iter_mut().zip(&pol) {
            *o = e * phase;
        }
    });
    let f = field_tensor(&a).unwrap();
    let cyclic = homogeneous_maxwell_residual(&f);
    let (_, continuity) = current_and_continuity(&f);
    let elapsed = start.elapsed();
    outcome(
        cyclic.relative() < 1e-12 && continuity.relative() < 1e-12 && elapsed < Duration::from_secs(60),
        format!(
            "32^4 grid d=3: cyclic {:.3e}, continuity {:.3e} relative to field scale (< 1e-12), {:.1}s (< 60s)",
            cyclic.relative(),
            continuity.relative(),
            elapsed.as_secs_f64()
        ),
    )
}

fn gauge_covariance() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let d = 1 + i % 3;
        let (phi, psi) = free_pair(&mut rng, d);
        let b: Vec<f64> = (0..=d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b = FourVector::natural(&b).unwrap();
        let g = Propagator::free(d + 1, 1.0).unwrap();
        let q = ShellQuadrature::default_for(d);
        let p1 = transition_probability(&phi, &psi, &g, &q).unwrap();
        let g2 = g.with_potential(b).unwrap();
        let p2 =
            transition_probability(&phi.gauge_shift(&-b).unwrap(), &psi.gauge_shift(&-b).unwrap(), &g2, &q).unwrap();
        worst = worst.max((p1 - p2).abs());
    }
    outcome(worst < 1e-8, format!("50 configurations: max |P - P_shifted| = {worst:.3e} (< 1e-8)"))
}

fn nonrelativistic_limit() -> Outcome {
    let start = Instant::now();
    let dt = 5.0;
    let study = LimitStudy { velocities: vec![0.2, 0.1, 0.05, 0.01], time_widths: vec![dt], ..LimitStudy::default() };
    let rows = study.run().unwrap();
    let orders = observed_orders(&rows, dt);
    let at_001 = rows.iter().find(|r| r.v == 0.01).unwrap().rel_error;
    let order = orders[0].min(orders[1]);
    let elapsed = start.elapsed();
    outcome(
        at_001 < 1e-3 && order >= 1.5 && elapsed < Duration::from_secs(300),
        format!(
            "d=1 free, time width {dt}: rel dev at v=0.01 {at_001:.3e} (< 1e-3), orders over (0.2, 0.1, 0.05) = {:.2}, {:.2} (>= 1.5), {:.1}s (< 300s)",
            orders[0],
            orders[1],
            elapsed.as_secs_f64()
        ),
    )
}

fn uncertainty_relation() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let mut lowest = f64::INFINITY;
    for i in 0..1000 {
        let d = 1 + i % 3;
        let n = d + 1;
        let mut l = [[0.0; 4]; 4];
        for (r, row) in l.iter_mut().enumerate().take(n) {
            for v in row.iter_mut().take(r + 1) {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let mut k = [[0.0; 4]; 4];
        for r in 0..n {
            for c in 0..n {
                k[r][c] = (0..n).map(|s| l[r][s] * l[c][s]).sum::<f64>();
            }
            k[r][r] += 0.1;
        }
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let psi = GaussianEventPacket::with_precision(
            FourVector::natural(&x).unwrap(),
            FourVector::natural(&p).unwrap(),
            k,
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let (_, de) = observable_center_and_uncertainty(&psi, Observable::Energy).unwrap();
        let (_, dt) = observable_center_and_uncertainty(&psi, Observable::Time).unwrap();
        lowest = lowest.min(de * dt);
    }
    let mut worst_eq = 0.0f64;
    for d in 1..=3 {
        for _ in 0..20 {
            let w: Vec<f64> = (0..=d).map(|_| rng.gen_range(0.1..2.0)).collect();
            let psi = packet(&vec![0.0; d + 1], &vec![0.0; d + 1], &w, Complex64::new(1.0, 0.0));
            let (_, de) = observable_center_and_uncertainty(&psi, Observable::Energy).unwrap();
            let (_, dt) = observable_center_and_uncertainty(&psi, Observable::Time).unwrap();
            worst_eq = worst_eq.max((de * dt - 0.5).abs());
        }
    }
    outcome(
        lowest >= 0.5 - 1e-12 && worst_eq < 1e-10,
        format!("1000 packets: min dE dt = {lowest:.15} (>= 0.5 - 1e-12); axis-aligned max |dE dt - 0.5| = {worst_eq:.3e} (< 1e-10)"),
    )
}

fn pair_sampler() -> (HistorySampler, GaussianEventPacket) {
    let lattice = CandidateLattice::symmetric(2, 1.0, 0.05, &[0.1, 0.1], &[1, -1]).unwrap();
    let g = Propagator::new(1.0, FourVector::natural(&[3.0, 0.0]).unwrap(), ShellSelector::Both, 1).unwrap();
    let start = packet(&[0.0, 0.0], &[0.0, 8f64.sqrt()], &[0.1, 0.1], Complex64::new(1.0, 0.0));
    (HistorySampler::new(lattice, g).unwrap(), start)
}

fn pair_transitions() -> Outcome {
    let lattice = CandidateLattice::symmetric(2, 1.0, 0.05, &[0.1, 0.1], &[1, -1]).unwrap();
    let free = HistorySampler::new(lattice, Propagator::free(2, 1.0).unwrap()).unwrap();
    let start = packet(&[0.0, 0.0], &[3.0, 8f64.sqrt()], &[0.1, 0.1], Complex64::new(1.0, 0.0));
    let free_hist = free.sample_ensemble(&start, 1000, 50, 9).unwrap();
    let free_freq = pair_transition_frequency(&free_hist).unwrap();

    let (sampler, start) = pair_sampler();
    let hist = sampler.sample_ensemble(&start, 200, 50, 2024).unwrap();
    let report = flip_consistency(&hist).unwrap();
    outcome(
        free_freq < 1e-6 && report.empirical > 0.01 && report.z_score.abs() < 4.0,
        format!(
            "free 1000x50: flip frequency {free_freq:.3e} (< 1e-6); A0=3m 200x50: frequency {:.4} (> 0.01) vs per-step {:.4}, z = {:.2} (|z| < 4)",
            report.empirical, report.analytic, report.z_score
        ),
    )
}

fn history_bits(h: &[EventHistory]) -> Vec<u64> {
    h.iter()
        .flat_map(|h| {
            h.steps.iter().flat_map(|s| {
                [s.t, s.energy, s.p_norm, s.p_raw, s.flip_probability]
                    .into_iter()
                    .chain(s.x.iter().copied())
                    .chain(s.p.iter().copied())
                    .map(f64::to_bits)
            })
        })
        .collect()
}

fn determinism() -> Outcome {
    let (sampler, start) = pair_sampler();
    let a = sampler.sample_ensemble(&start, 20, 50, 77).unwrap();
    let b = sampler.sample_ensemble(&start, 20, 50, 77).unwrap();
    let histories_equal = history_bits(&a) == history_bits(&b);

    let config = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/history_pair.ini");
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let code = std::process::Command::new(env!("CARGO_BIN_EXE_qevent"))
            .args(["history", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status
            .code();
        (code, out)
    };
    let (c1, o1) = run("first");
    let (c2, o2) = run("second");
    let files = ["histories.jsonl", "history_summary.csv"];
    let files_equal = c1 == Some(0)
        && c2 == Some(0)
        && files.iter().all(|f| std::fs::read(o1.join(f)).unwrap() == std::fs::read(o2.join(f)).unwrap());
    outcome(
        histories_equal && files_equal,
        format!("20x50 histories bit-identical: {histories_equal}; CLI histories.jsonl and history_summary.csv identical: {files_equal}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("probability axioms", probability_axioms),
        ("superselection", superselection),
        ("Poincare invariance", poincare_invariance),
        ("Monte Carlo shell oracle", monte_carlo_oracle),
        ("Maxwell identities", maxwell_identities),
        ("gauge covariance", gauge_covariance),
        ("nonrelativistic limit", nonrelativistic_limit),
        ("uncertainty relation", uncertainty_relation),
        ("pair transitions", pair_transitions),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
