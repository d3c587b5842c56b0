//! Seeded jump-process sampling of event histories.
//!
//! At every step a finite candidate set is built around the current event, each candidate is
//! weighted by its mass-shell transition probability from the current event and one is drawn.
//! Weighting over a finite candidate set is an interpretation layer: raw probabilities of
//! different candidates are not mutually exclusive, so they are either renormalized or thinned.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QevError, Result};
use crate::mass_shell::{transition_amplitude, Propagator, ShellQuadrature, DEFAULT_ALLOWED_THRESHOLD};
use crate::minkowski::FourVector;
use crate::packet::GaussianEventPacket;
use crate::units::Units;

/// Raw probabilities below this are treated as zero.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Displacements generating the candidates around an event.
///
/// Each candidate combines one spacetime offset, one spatial momentum offset (the time component
/// is ignored) and one shell branch; its energy is re-projected onto that branch of the shell.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLattice {
    pub spacetime_offsets: Vec<FourVector>,
    pub momentum_offsets: Vec<FourVector>,
    pub branches: Vec<i32>,
    /// Momentum-space widths σ_α of every candidate.
    pub widths: Vec<f64>,
}

impl CandidateLattice {
    /// Offsets 0, ±step along every axis (spacetime) and every spatial axis (momentum).
    pub fn symmetric(dim: usize, dx: f64, dp: f64, widths: &[f64], branches: &[i32]) -> Result<Self> {
        let axis_offsets = |step: f64, first_axis: usize| -> Vec<FourVector> {
            let mut out = vec![FourVector::zero(dim, Units::Natural)];
            if step != 0.0 {
                for a in first_axis..dim {
                    for s in [-1.0, 1.0] {
                        out.push(FourVector::unit(dim, a, Units::Natural).scale(s * step));
                    }
                }
            }
            out
        };
        let lattice = CandidateLattice {
            spacetime_offsets: axis_offsets(dx, 0),
            momentum_offsets: axis_offsets(dp, 1),
            branches: branches.to_vec(),
            widths: widths.to_vec(),
        };
        lattice.validate(dim)?;
        Ok(lattice)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.spacetime_offsets.is_empty() || self.momentum_offsets.is_empty() || self.branches.is_empty() {
            return invalid("candidate lattice must be non-empty");
        }
        for v in self.spacetime_offsets.iter().chain(&self.momentum_offsets) {
            if v.dim() != dim {
                return Err(QevError::DimensionMismatch { expected: dim, found: v.dim() });
            }
            if !v.is_finite() {
                return invalid("lattice offsets must be finite");
            }
        }
        if self.widths.len() != dim {
            return Err(QevError::DimensionMismatch { expected: dim, found: self.widths.len() });
        }
        if self.widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("candidate widths must be finite and positive");
        }
        if self.branches.iter().any(|b| *b != 1 && *b != -1) {
            return invalid("branches must be +1 or -1");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.spacetime_offsets.len() * self.momentum_offsets.len() * self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How raw transition probabilities become a distribution over candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionMode {
    /// p_i = P_i / Σ_j P_j.
    Normalize,
    /// Each candidate fires independently with probability P_i; conditioned on exactly one firing.
    BernoulliThinning,
}

impl std::str::FromStr for SelectionMode {
    type Err = QevError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normalize" => Ok(SelectionMode::Normalize),
            "bernoulli" | "bernoulli_thinning" => Ok(SelectionMode::BernoulliThinning),
            other => invalid(format!("unknown selection mode '{other}'")),
        }
    }
}

/// ⟨Ê⟩ sign of a Gaussian packet, +1 at zero.
pub fn energy_sign(packet: &GaussianEventPacket) -> i32 {
    if packet.center_p()[0] < 0.0 {
        -1
    } else {
        1
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub packet: GaussianEventPacket,
    pub raw_probability: f64,
    pub probability: f64,
    /// τ(φ,φ) of the candidate.
    pub self_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryStep {
    pub step: usize,
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(rename = "E")]
    pub energy: f64,
    pub p: Vec<f64>,
    pub energy_sign: i32,
    pub p_norm: f64,
    pub p_raw: f64,
    /// Total selection probability of candidates with the opposite energy sign at this step.
    pub flip_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHistory {
    pub seed: u64,
    pub steps: Vec<HistoryStep>,
}

impl EventHistory {
    pub fn flips(&self) -> usize {
        self.steps.windows(2).filter(|w| w[0].energy_sign != w[1].energy_sign).count()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.steps {
            serde_json::to_writer(&mut w, s).map_err(|e| QevError::Format(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(seed: u64, r: R) -> Result<Self> {
        let mut steps = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            steps.push(serde_json::from_str(&line).map_err(|e| QevError::Format(e.to_string()))?);
        }
        Ok(EventHistory { seed, steps })
    }
}

fn record(step: usize, packet: &GaussianEventPacket, p_norm: f64, p_raw: f64, flip_probability: f64) -> HistoryStep {
    let d = packet.dim();
    HistoryStep {
        step,
        t: packet.center_x()[0],
        x: (1..d).map(|i| packet.center_x()[i]).collect(),
        energy: packet.center_p()[0],
        p: (1..d).map(|i| packet.center_p()[i]).collect(),
        energy_sign: energy_sign(packet),
        p_norm,
        p_raw,
        flip_probability,
    }
}

#[derive(Debug, Clone)]
pub struct HistorySampler {
    pub lattice: CandidateLattice,
    pub propagator: Propagator,
    pub quadrature: ShellQuadrature,
    pub mode: SelectionMode,
    pub allowed_threshold: f64,
}

impl HistorySampler {
    pub fn new(lattice: CandidateLattice, propagator: Propagator) -> Result<Self> {
        lattice.validate(propagator.dim())?;
        let quadrature = ShellQuadrature::default_for(propagator.dim() - 1);
        Ok(HistorySampler {
            lattice,
            propagator,
            quadrature,
            mode: SelectionMode::Normalize,
            allowed_threshold: DEFAULT_ALLOWED_THRESHOLD,
        })
    }

    pub fn with_mode(mut self, mode: SelectionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_quadrature(mut self, q: ShellQuadrature) -> Self {
        self.quadrature = q;
        self
    }

    /// τ(ψ,ψ), failing with PhysicallyDisallowed below the threshold.
    fn self_amplitude(&self, psi: &GaussianEventPacket, which: &'static str) -> Result<f64> {
        let tau = transition_amplitude(psi, psi, &self.propagator, &self.quadrature)?.re;
        let ratio = tau / psi.norm_sq();
        if ratio <= self.allowed_threshold {
            return Err(QevError::PhysicallyDisallowed { which, ratio, threshold: self.allowed_threshold });
        }
        Ok(tau)
    }

    /// Allowed candidate packets around `current` with their τ(φ,φ), in lattice order
    /// (spacetime offset, momentum offset, branch). τ(φ,φ) does not depend on the spacetime
    /// center, so it is computed once per momentum.
    pub fn candidate_packets(&self, current: &GaussianEventPacket) -> Result<Vec<(GaussianEventPacket, f64)>> {
        let d = current.dim();
        let a = self.propagator.effective_potential();
        let k: Vec<f64> = (1..d).map(|i| current.center_p()[i] - a[i]).collect();
        let mut momenta = Vec::with_capacity(self.lattice.momentum_offsets.len() * self.lattice.branches.len());
        for dp in &self.lattice.momentum_offsets {
            let kk: Vec<f64> = k.iter().enumerate().map(|(i, ki)| ki + dp[i + 1]).collect();
            for &branch in &self.lattice.branches {
                let (p, _) = self.propagator.shell_point(&kk, branch as f64);
                let p = FourVector::natural(&p[..d])?;
                let probe =
                    GaussianEventPacket::new(*current.center_x(), p, &self.lattice.widths, Complex64::new(1.0, 0.0))?;
                momenta.push(match self.self_amplitude(&probe, "candidate") {
                    Ok(tau) => Some((p, tau)),
                    Err(QevError::PhysicallyDisallowed { .. }) => None,
                    Err(e) => return Err(e),
                });
            }
        }
        let mut out = Vec::with_capacity(self.lattice.len());
        for dx in &self.lattice.spacetime_offsets {
            let x = *current.center_x() + *dx;
            for (p, tau) in momenta.iter().flatten() {
                out.push((GaussianEventPacket::new(x, *p, &self.lattice.widths, Complex64::new(1.0, 0.0))?, *tau));
            }
        }
        Ok(out)
    }

    /// Candidates with raw and selection probabilities. `step` labels errors.
    pub fn step_distribution(&self, current: &GaussianEventPacket, step: usize) -> Result<Vec<Candidate>> {
        let tss = self.self_amplitude(current, "current")?;
        self.distribution_with(current, tss, step)
    }

    fn distribution_with(&self, current: &GaussianEventPacket, tss: f64, step: usize) -> Result<Vec<Candidate>> {
        let packets = self.candidate_packets(current)?;
        let mut cands = Vec::with_capacity(packets.len());
        for (packet, tpp) in packets {
            let tau = transition_amplitude(&packet, current, &self.propagator, &self.quadrature)?;
            let raw = (tau.norm_sqr() / (tpp * tss)).min(1.0);
            let raw = if raw < PROBABILITY_FLOOR { 0.0 } else { raw };
            cands.push(Candidate { packet, raw_probability: raw, probability: 0.0, self_amplitude: tpp });
        }
        let weights: Vec<f64> = match self.mode {
            SelectionMode::Normalize => cands.iter().map(|c| c.raw_probability).collect(),
            SelectionMode::BernoulliThinning => (0..cands.len())
                .map(|i| {
                    cands.iter().enumerate().fold(cands[i].raw_probability, |acc, (j, c)| {
                        if j == i {
                            acc
                        } else {
                            acc * (1.0 - c.raw_probability)
                        }
                    })
                })
                .collect(),
        };
        let total: f64 = weights.iter().sum();
        if !(total > PROBABILITY_FLOOR) {
            return Err(QevError::AllCandidatesDisallowed { step });
        }
        for (c, w) in cands.iter_mut().zip(&weights) {
            c.probability = w / total;
        }
        Ok(cands)
    }

    /// One history of `n_steps` jumps; the start event is recorded as step 0.
    pub fn sample(&self, start: &GaussianEventPacket, n_steps: usize, seed: u64) -> Result<EventHistory> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut tss = self.self_amplitude(start, "start")?;
        let mut current = start.clone();
        let mut steps = vec![record(0, start, 1.0, 1.0, 0.0)];
        for step in 1..=n_steps {
            let cands = self.distribution_with(&current, tss, step)?;
            let sign = energy_sign(&current);
            let flip: f64 = cands.iter().filter(|c| energy_sign(&c.packet) != sign).map(|c| c.probability).sum();
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = cands.len() - 1;
            for (i, c) in cands.iter().enumerate() {
                acc += c.probability;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            // Rounding can leave the cumulative sum short of 1; fall back to the last positive weight.
            while cands[chosen].probability == 0.0 && chosen > 0 {
                chosen -= 1;
            }
            let c = &cands[chosen];
            steps.push(record(step, &c.packet, c.probability, c.raw_probability, flip));
            tss = c.self_amplitude;
            current = c.packet.clone();
        }
        Ok(EventHistory { seed, steps })
    }

    /// `n_histories` histories in parallel; history i uses seed.wrapping_add(i).
    pub fn sample_ensemble(
        &self,
        start: &GaussianEventPacket,
        n_histories: usize,
        n_steps: usize,
        seed: u64,
    ) -> Result<Vec<EventHistory>> {
        (0..n_histories as u64).into_par_iter().map(|i| self.sample(start, n_steps, seed.wrapping_add(i))).collect()
    }
}

/// Fraction of transitions whose energy sign flips. Zero when no history has a transition.
pub fn pair_transition_frequency(histories: &[EventHistory]) -> Result<f64> {
    if histories.is_empty() {
        return invalid("pair_transition_frequency needs at least one history");
    }
    let transitions: usize = histories.iter().map(|h| h.steps.len().saturating_sub(1)).sum();
    if transitions == 0 {
        return Ok(0.0);
    }
    let flips: usize = histories.iter().map(EventHistory::flips).sum();
    Ok(flips as f64 / transitions as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyReport {
    pub empirical: f64,
    pub analytic: f64,
    pub z_score: f64,
}

/// Observed flip count against the per-step flip probabilities recorded along the histories
/// (Poisson-binomial mean and standard deviation).
pub fn flip_consistency(histories: &[EventHistory]) -> Result<FrequencyReport> {
    let empirical = pair_transition_frequency(histories)?;
    let (mut mean, mut var, mut n) = (0.0, 0.0, 0usize);
    for h in histories {
        for s in h.steps.iter().skip(1) {
            mean += s.flip_probability;
            var += s.flip_probability * (1.0 - s.flip_probability);
            n += 1;
        }
    }
    if n == 0 {
        return invalid("histories contain no transitions");
    }
    let flips: usize = histories.iter().map(EventHistory::flips).sum();
    let z_score = if var > 0.0 {
        (flips as f64 - mean) / var.sqrt()
    } else if flips as f64 == mean {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(FrequencyReport { empirical, analytic: mean / n as f64, z_score })
}

/// Draws one candidate from `candidates` (weighted by P(candidate, current)) `n_trials` times and
/// compares the frequency of `target` with its normalized probability.
pub fn frequency_consistency_check(
    current: &GaussianEventPacket,
    candidates: &[GaussianEventPacket],
    target: usize,
    g: &Propagator,
    q: &ShellQuadrature,
    n_trials: usize,
    seed: u64,
) -> Result<FrequencyReport> {
    if n_trials == 0 {
        return invalid("n_trials must be positive");
    }
    if target >= candidates.len() {
        return invalid(format!("target index {target} outside candidate set of {}", candidates.len()));
    }
    let tss = transition_amplitude(current, current, g, q)?.re;
    let mut raw = Vec::with_capacity(candidates.len());
    for c in candidates {
        let tpp = transition_amplitude(c, c, g, q)?.re;
        let tau = transition_amplitude(c, current, g, q)?;
        raw.push((tau.norm_sqr() / (tpp * tss)).min(1.0));
    }
    let total: f64 = raw.iter().sum();
    if !(total > PROBABILITY_FLOOR) {
        return Err(QevError::AllCandidatesDisallowed { step: 0 });
    }
    let p = raw[target] / total;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_trials {
        let u: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = candidates.len() - 1;
        for (i, r) in raw.iter().enumerate() {
            acc += r;
            if u < acc {
                chosen = i;
                break;
            }
        }
        hits += (chosen == target) as usize;
    }
    let empirical = hits as f64 / n_trials as f64;
    let sd = (p * (1.0 - p) / n_trials as f64).sqrt();
    let z_score = if sd > 0.0 {
        (empirical - p) / sd
    } else if empirical == p {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(FrequencyReport { empirical, analytic: p, z_score })
}
