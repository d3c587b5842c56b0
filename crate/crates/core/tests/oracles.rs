//! Library results against quadratures written here from scratch.

use gauss_quad::GaussHermite;
use num_complex::Complex64;
use qevent::*;

fn packet(x: &[f64], p: &[f64], w: &[f64], amp: Complex64) -> GaussianEventPacket {
    GaussianEventPacket::new(FourVector::natural(x).unwrap(), FourVector::natural(p).unwrap(), w, amp).unwrap()
}

/// ∫ d^D p conj(φ(p)) ψ(p) on a tensor Gauss–Hermite rule centred on the product envelope.
fn hermite_inner(phi: &GaussianEventPacket, psi: &GaussianEventPacket, nodes: usize) -> Complex64 {
    let d = phi.dim();
    let rule: Vec<(f64, f64)> = GaussHermite::new(nodes).unwrap().into_node_weight_pairs();
    let (w1, w2) = (phi.widths_p(), psi.widths_p());
    let mut centre = vec![0.0; d];
    let mut scale = vec![0.0; d];
    for a in 0..d {
        let (k1, k2) = (1.0 / (w1[a] * w1[a]), 1.0 / (w2[a] * w2[a]));
        centre[a] = (k1 * phi.center_p()[a] + k2 * psi.center_p()[a]) / (k1 + k2);
        scale[a] = 2.0 / (k1 + k2).sqrt();
    }
    let total = nodes.pow(d as u32);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut p = vec![0.0; d];
    for flat in 0..total {
        let mut r = flat;
        let mut w = 1.0;
        let mut u2 = 0.0;
        for a in 0..d {
            let (u, wu) = rule[r % nodes];
            r /= nodes;
            p[a] = centre[a] + scale[a] * u;
            w *= wu * scale[a];
            u2 += u * u;
        }
        sum += phi.momentum_amplitude(&p).conj() * psi.momentum_amplitude(&p) * (w * u2.exp());
    }
    sum
}

#[test]
fn inner_product_matches_hermite_rule() {
    let cases = [
        (
            packet(&[0.0, 0.0], &[1.2, 0.3], &[0.3, 0.4], Complex64::new(1.0, 0.0)),
            packet(&[0.5, -0.4], &[1.0, 0.1], &[0.4, 0.25], Complex64::new(0.3, -0.7)),
            60,
        ),
        (
            packet(&[0.2, 0.1, -0.3], &[1.5, 0.2, -0.4], &[0.5, 0.4, 0.6], Complex64::new(1.0, 0.5)),
            packet(&[-0.1, 0.4, 0.2], &[1.4, 0.1, -0.2], &[0.4, 0.5, 0.5], Complex64::new(0.8, 0.0)),
            40,
        ),
        (
            packet(&[0.0, 0.1, 0.2, -0.1], &[2.0, 0.3, 0.2, 0.1], &[0.6, 0.5, 0.5, 0.5], Complex64::new(1.0, 0.0)),
            packet(&[0.3, 0.0, -0.2, 0.1], &[1.8, 0.1, 0.3, -0.1], &[0.5, 0.6, 0.4, 0.5], Complex64::new(0.0, 1.0)),
            24,
        ),
    ];
    for (phi, psi, nodes) in cases {
        let lib = inner_product(&phi, &psi).unwrap();
        let oracle = hermite_inner(&phi, &psi, nodes);
        let scale = (phi.norm_sq() * psi.norm_sq()).sqrt();
        assert!((lib - oracle).norm() < 1e-10 * scale, "{lib} vs {oracle}");
        assert!((phi.norm_sq() - hermite_inner(&phi, &phi, nodes).re).abs() < 1e-10 * phi.norm_sq());
    }
}

/// Σ_s ∫ dk/(2E) conj(φ) ψ on the shell (p − A)² = m² by composite Simpson in d = 1.
fn simpson_shell_1d(
    phi: &GaussianEventPacket,
    psi: &GaussianEventPacket,
    m: f64,
    a: [f64; 2],
    lo: f64,
    hi: f64,
) -> Complex64 {
    let n = 40_000;
    let h = (hi - lo) / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let k = lo + h * i as f64;
        let e = (k * k + m * m).sqrt();
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        for s in [1.0, -1.0] {
            let p = [s * e + a[0], k + a[1]];
            sum += phi.momentum_amplitude(&p).conj() * psi.momentum_amplitude(&p) * (w / (2.0 * e));
        }
    }
    sum * (h / 3.0)
}

#[test]
fn shell_amplitude_matches_simpson_in_one_dimension() {
    let cases = [
        (1.0, [0.0, 0.0], [1.3, 0.8], [1.25, 0.7]),
        (0.5, [0.4, -0.2], [1.1, 0.5], [1.0, 0.7]),
        (2.0, [-0.3, 0.1], [-2.2, 0.6], [-2.1, 0.4]),
    ];
    for (m, a, c1, c2) in cases {
        let phi = packet(&[1.0, 0.6], &c1, &[0.25, 0.3], Complex64::new(1.0, 0.0));
        let psi = packet(&[0.0, 0.0], &c2, &[0.3, 0.25], Complex64::new(0.6, 0.8));
        let g = Propagator::new(m, FourVector::natural(&a).unwrap(), ShellSelector::Both, 1).unwrap();
        let q = ShellQuadrature::default_for(1);
        let lib = transition_amplitude(&phi, &psi, &g, &q).unwrap();
        let oracle = simpson_shell_1d(&phi, &psi, m, a, -12.0, 12.0);
        let abs =
            simpson_shell_1d(&phi, &phi, m, a, -12.0, 12.0).re.max(simpson_shell_1d(&psi, &psi, m, a, -12.0, 12.0).re);
        assert!((lib - oracle).norm() < 1e-9 * abs, "m={m}: {lib} vs {oracle}");
    }
}

#[test]
fn charge_sign_flips_the_potential() {
    let a = FourVector::natural(&[0.3, 0.2]).unwrap();
    let phi = packet(&[0.5, 0.1], &[0.9, 0.4], &[0.3, 0.3], Complex64::new(1.0, 0.0));
    let psi = packet(&[0.0, 0.0], &[1.0, 0.3], &[0.3, 0.3], Complex64::new(1.0, 0.0));
    let q = ShellQuadrature::default_for(1);
    let minus = Propagator::new(1.0, a, ShellSelector::Both, -1).unwrap();
    let plus_neg = Propagator::new(1.0, -a, ShellSelector::Both, 1).unwrap();
    let t1 = transition_amplitude(&phi, &psi, &minus, &q).unwrap();
    let t2 = transition_amplitude(&phi, &psi, &plus_neg, &q).unwrap();
    assert!((t1 - t2).norm() < 1e-14 * t1.norm().max(1e-300));
    let oracle = simpson_shell_1d(&phi, &psi, 1.0, [-0.3, -0.2], -12.0, 12.0);
    assert!((t1 - oracle).norm() < 1e-9 * oracle.norm());
}

/// Moments of |ψ(x)|² and |ψ(p)|² on plain 2-d trapezoid grids.
#[test]
fn observables_match_grid_moments() {
    let psi = packet(&[0.7, -0.4], &[1.3, 0.5], &[0.35, 0.5], Complex64::new(1.0, 0.0));
    let moments = |f: &dyn Fn(&[f64]) -> f64, centre: [f64; 2], half: [f64; 2]| -> ([f64; 2], [f64; 2]) {
        let n = 400;
        let (mut w, mut m1, mut m2) = (0.0, [0.0; 2], [0.0; 2]);
        for i in 0..=n {
            for j in 0..=n {
                let x = [
                    centre[0] - half[0] + 2.0 * half[0] * i as f64 / n as f64,
                    centre[1] - half[1] + 2.0 * half[1] * j as f64 / n as f64,
                ];
                let v = f(&x);
                w += v;
                for a in 0..2 {
                    m1[a] += v * x[a];
                    m2[a] += v * x[a] * x[a];
                }
            }
        }
        let mean = [m1[0] / w, m1[1] / w];
        (mean, [(m2[0] / w - mean[0] * mean[0]).sqrt(), (m2[1] / w - mean[1] * mean[1]).sqrt()])
    };
    let wx = psi.widths_x();
    let (xm, xs) = moments(&|x| psi.spacetime_value(x).norm_sqr(), [0.7, -0.4], [12.0 * wx[0], 12.0 * wx[1]]);
    let (pm, ps) = moments(&|p| psi.momentum_amplitude(p).norm_sqr(), [1.3, 0.5], [12.0 * 0.35, 12.0 * 0.5]);
    let checks = [
        (Observable::Time, xm[0], xs[0]),
        (Observable::Position(1), xm[1], xs[1]),
        (Observable::Energy, pm[0], ps[0]),
        (Observable::Momentum(1), pm[1], ps[1]),
    ];
    for (obs, mean, sd) in checks {
        let (c, u) = observable_center_and_uncertainty(&psi, obs).unwrap();
        assert!((c - mean).abs() < 1e-9 && (u - sd).abs() < 1e-9, "{obs:?}: ({c}, {u}) vs ({mean}, {sd})");
    }
}

#[test]
fn orbit_matches_direct_shell_integral() {
    let psi = packet(&[0.0, 0.0], &[1.25, 0.75], &[0.2, 0.2], Complex64::new(1.0, 0.0));
    let g = Propagator::free(2, 1.0).unwrap();
    let q = ShellQuadrature::default_for(1);
    let points: Vec<FourVector> =
        [[0.0, 0.0], [2.0, 1.0], [-1.0, 0.5]].iter().map(|x| FourVector::natural(x).unwrap()).collect();
    let lib = evaluate_orbit(&psi, &g, &points, &q).unwrap();
    for (x, v) in points.iter().zip(&lib) {
        let n = 40_000;
        let (lo, hi) = (-3.0, 4.5);
        let h = (hi - lo) / n as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let k = lo + h * i as f64;
            let e = (k * k + 1.0f64).sqrt();
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for s in [1.0, -1.0] {
                let p = [s * e, k];
                let phase = -(p[0] * x[0] - p[1] * x[1]);
                sum += Complex64::from_polar(1.0, phase) * psi.momentum_amplitude(&p) * (w / (2.0 * e));
            }
        }
        let oracle = sum * (h / 3.0) / (2.0 * std::f64::consts::PI);
        assert!((v - oracle).norm() < 1e-10 * oracle.norm().max(1e-3), "{v} vs {oracle}");
    }
}
