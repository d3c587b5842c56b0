use num_complex::Complex64;
use qevent::histories::*;
use qevent::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn on_shell(x: &[f64], k: f64, m: f64, branch: f64, a0: f64, w: f64) -> GaussianEventPacket {
    let e = branch * (k * k + m * m).sqrt() + a0;
    GaussianEventPacket::new(
        FourVector::natural(x).unwrap(),
        FourVector::natural(&[e, k]).unwrap(),
        &[w, w],
        Complex64::new(1.0, 0.0),
    )
    .unwrap()
}

/// Widths are momentum-space spreads.
fn free_sampler() -> HistorySampler {
    let lattice = CandidateLattice::symmetric(2, 0.5, 0.1, &[0.3, 0.3], &[1, -1]).unwrap();
    HistorySampler::new(lattice, Propagator::free(2, 1.0).unwrap()).unwrap()
}

/// Constant A⁰ = 3m lowers the negative branch through E = 0 near |k| = √8 m.
fn pair_sampler() -> (HistorySampler, GaussianEventPacket) {
    let lattice = CandidateLattice::symmetric(2, 1.0, 0.05, &[0.1, 0.1], &[1, -1]).unwrap();
    let g = Propagator::new(1.0, FourVector::natural(&[3.0, 0.0]).unwrap(), ShellSelector::Both, 1).unwrap();
    let start = GaussianEventPacket::new(
        FourVector::natural(&[0.0, 0.0]).unwrap(),
        FourVector::natural(&[0.0, 8f64.sqrt()]).unwrap(),
        &[0.1, 0.1],
        Complex64::new(1.0, 0.0),
    )
    .unwrap();
    (HistorySampler::new(lattice, g).unwrap(), start)
}

#[test]
fn step_distribution_matches_direct_probabilities() {
    let sampler = free_sampler();
    let current = on_shell(&[0.0, 0.0], 0.4, 1.0, 1.0, 0.0, 0.3);
    let q = ShellQuadrature::default_for(1);
    for mode in [SelectionMode::Normalize, SelectionMode::BernoulliThinning] {
        let s = sampler.clone().with_mode(mode);
        let cands = s.step_distribution(&current, 1).unwrap();
        let raw: Vec<f64> =
            cands.iter().map(|c| transition_probability(&c.packet, &current, &s.propagator, &q).unwrap()).collect();
        let weights: Vec<f64> = match mode {
            SelectionMode::Normalize => raw.clone(),
            SelectionMode::BernoulliThinning => (0..raw.len())
                .map(|i| {
                    raw[i] * raw.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| 1.0 - r).product::<f64>()
                })
                .collect(),
        };
        let total: f64 = weights.iter().sum();
        for (c, (r, w)) in cands.iter().zip(raw.iter().zip(&weights)) {
            assert!((c.raw_probability - r).abs() < 1e-12);
            assert!((c.probability - w / total).abs() < 1e-12);
        }
    }
}

#[test]
fn first_steps_follow_the_step_distribution() {
    let sampler = free_sampler();
    let start = on_shell(&[0.0, 0.0], 0.2, 1.0, 1.0, 0.0, 0.3);
    let cands = sampler.step_distribution(&start, 1).unwrap();
    let n = 4000;
    let hist = sampler.sample_ensemble(&start, n, 1, 77).unwrap();
    let mut counts = vec![0usize; cands.len()];
    for h in &hist {
        let s = &h.steps[1];
        let i = cands
            .iter()
            .position(|c| {
                (c.packet.center_x()[0] - s.t).abs() < 1e-12
                    && (c.packet.center_x()[1] - s.x[0]).abs() < 1e-12
                    && (c.packet.center_p()[0] - s.energy).abs() < 1e-12
                    && (c.packet.center_p()[1] - s.p[0]).abs() < 1e-12
            })
            .expect("chosen event is a candidate");
        counts[i] += 1;
    }
    // Pearson χ² over candidates with expected count ≥ 5, the rest pooled.
    let (mut chi2, mut dof, mut pooled_e, mut pooled_o) = (0.0, 0usize, 0.0, 0.0);
    for (c, &o) in cands.iter().zip(&counts) {
        let e = c.probability * n as f64;
        if e >= 5.0 {
            chi2 += (o as f64 - e).powi(2) / e;
            dof += 1;
        } else {
            pooled_e += e;
            pooled_o += o as f64;
        }
    }
    if pooled_e >= 5.0 {
        chi2 += (pooled_o - pooled_e).powi(2) / pooled_e;
        dof += 1;
    }
    let crit = ChiSquared::new((dof - 1) as f64).unwrap().inverse_cdf(0.9999);
    assert!(chi2 < crit, "χ² = {chi2} on {} dof (critical {crit})", dof - 1);
}

#[test]
fn identical_seeds_reproduce_histories() {
    let (sampler, start) = pair_sampler();
    let a = sampler.sample_ensemble(&start, 4, 20, 9).unwrap();
    let b = sampler.sample_ensemble(&start, 4, 20, 9).unwrap();
    let c = sampler.sample_ensemble(&start, 4, 20, 10).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[1], c[0]);
    assert_ne!(a[0], c[0]);
    let bits = |h: &[EventHistory]| -> Vec<u64> {
        h.iter()
            .flat_map(|h| h.steps.iter().flat_map(|s| [s.t.to_bits(), s.energy.to_bits(), s.p_norm.to_bits()]))
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn free_histories_never_flip() {
    let lattice = CandidateLattice::symmetric(2, 1.0, 0.05, &[0.1, 0.1], &[1, -1]).unwrap();
    let sampler = HistorySampler::new(lattice, Propagator::free(2, 1.0).unwrap()).unwrap();
    let start = on_shell(&[0.0, 0.0], 0.3, 1.0, 1.0, 0.0, 0.1);
    let hist = sampler.sample_ensemble(&start, 16, 25, 1).unwrap();
    assert_eq!(pair_transition_frequency(&hist).unwrap(), 0.0);
    let report = flip_consistency(&hist).unwrap();
    assert!(report.analytic < 1e-12, "{report:?}");
    assert!(hist.iter().all(|h| h.steps.iter().all(|s| s.energy_sign == 1)));
}

#[test]
fn pair_potential_flips_at_the_recorded_rate() {
    let (sampler, start) = pair_sampler();
    let hist = sampler.sample_ensemble(&start, 20, 50, 2024).unwrap();
    let report = flip_consistency(&hist).unwrap();
    assert!(report.empirical > 0.01);
    assert!(report.z_score.abs() < 4.0, "{report:?}");
}

#[test]
fn two_candidate_frequencies_match_normalized_probabilities() {
    let g = Propagator::free(2, 1.0).unwrap();
    let q = ShellQuadrature::default_for(1);
    let current = on_shell(&[0.0, 0.0], 0.3, 1.0, 1.0, 0.0, 0.4);
    let near = on_shell(&[0.2, 0.1], 0.3, 1.0, 1.0, 0.0, 0.4);
    let far = on_shell(&[0.8, -0.3], 0.4, 1.0, 1.0, 0.0, 0.4);
    let cands = [near, far];
    let report = frequency_consistency_check(&current, &cands, 1, &g, &q, 100_000, 5).unwrap();
    let p: Vec<f64> = cands.iter().map(|c| transition_probability(c, &current, &g, &q).unwrap()).collect();
    assert!((report.analytic - p[1] / (p[0] + p[1])).abs() < 1e-12);
    assert!(report.z_score.abs() < 4.0, "{report:?}");

    let single = frequency_consistency_check(&current, std::slice::from_ref(&current), 0, &g, &q, 1000, 5).unwrap();
    assert_eq!(single.empirical, 1.0);
    assert_eq!(single.analytic, 1.0);
}

#[test]
fn histories_round_trip_through_jsonl() {
    let (sampler, start) = pair_sampler();
    let h = sampler.sample(&start, 10, 3).unwrap();
    let mut buf = Vec::new();
    h.write_jsonl(&mut buf).unwrap();
    let back = EventHistory::read_jsonl(3, buf.as_slice()).unwrap();
    assert_eq!(back, h);
    let first: serde_json::Value = serde_json::from_slice(buf.split(|b| *b == b'\n').next().unwrap()).unwrap();
    for key in ["step", "t", "x", "E", "p", "energy_sign", "p_norm", "p_raw"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn disallowed_start_is_rejected() {
    let sampler = free_sampler();
    // Between the branches with a narrow momentum spread: no weight on either.
    let start = GaussianEventPacket::new(
        FourVector::natural(&[0.0, 0.0]).unwrap(),
        FourVector::natural(&[0.0, 0.0]).unwrap(),
        &[0.05, 0.05],
        Complex64::new(1.0, 0.0),
    )
    .unwrap();
    assert!(matches!(sampler.sample(&start, 3, 0), Err(QevError::PhysicallyDisallowed { .. })));
}
