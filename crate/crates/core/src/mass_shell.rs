//! Mass-shell propagators, transition amplitudes and orbits.
//!
//! With a constant potential A the propagator δ(℘² − m²), ℘ = p − A, reduces to the shell measure
//!   τ(φ, ψ) = Σ_{s=±} ∫ d^d k / (2E_k) φ*(p) ψ(p),   p = (s E_k + A⁰, k + A_spatial),  E_k = √(k² + m²).
//! The d-dimensional integral runs over a box around the product Gaussian envelope and is evaluated
//! by tensor Gauss–Legendre rules of increasing order until two consecutive orders agree.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{ensure_dim, invalid, QevError, Result};
use crate::linalg::{self, Mat, Vec4};
use crate::minkowski::{shell_energy, FourVector, MAX_DIM};
use crate::packet::GaussianEventPacket;
use crate::quadrature::{CompensatedSum, GaussLegendre};
use crate::units::Units;

pub const DEFAULT_ALLOWED_THRESHOLD: f64 = 1e-12;

const NEGLIGIBLE_SCALE: f64 = 1e-250;
const PARALLEL_MIN_NODES: usize = 4096;

/// A momentum-space amplitude bounded by a Gaussian envelope
/// |f(p)| ≤ bound · exp(−¼ (p−c)ᵀ K (p−c)).
pub trait MomentumProfile: Sync {
    fn dim(&self) -> usize;
    fn units(&self) -> Units;
    fn momentum_amplitude(&self, p: &[f64]) -> Complex64;
    fn envelope(&self) -> Envelope;
    /// ∫ |f(p)|² d^D p.
    fn norm_sq(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Envelope {
    pub center: Vec4,
    pub precision: Mat,
    pub bound: f64,
}

impl MomentumProfile for GaussianEventPacket {
    fn dim(&self) -> usize {
        GaussianEventPacket::dim(self)
    }
    fn units(&self) -> Units {
        GaussianEventPacket::units(self)
    }
    #[inline]
    fn momentum_amplitude(&self, p: &[f64]) -> Complex64 {
        GaussianEventPacket::momentum_amplitude(self, p)
    }
    fn envelope(&self) -> Envelope {
        let mut center = [0.0; MAX_DIM];
        center[..self.dim()].copy_from_slice(self.center_p().as_slice());
        Envelope { center, precision: *self.precision(), bound: self.amplitude().norm() }
    }
    fn norm_sq(&self) -> f64 {
        GaussianEventPacket::norm_sq(self)
    }
}

/// θ(±p⁰)ψ(p). The boundary p⁰ = 0 belongs to the positive half so that Π₊ + Π₋ = 1 pointwise.
#[derive(Debug, Clone)]
pub struct EnergyProjected {
    packet: GaussianEventPacket,
    keep_positive: bool,
    keep_negative: bool,
}

impl EnergyProjected {
    pub fn identity(packet: &GaussianEventPacket) -> Self {
        EnergyProjected { packet: packet.clone(), keep_positive: true, keep_negative: true }
    }

    pub fn project(&self, sign: i32) -> Result<Self> {
        let mut out = self.clone();
        match sign {
            1 => out.keep_negative = false,
            -1 => out.keep_positive = false,
            _ => return invalid(format!("energy sign must be +1 or -1, got {sign}")),
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        !(self.keep_positive || self.keep_negative)
    }

    pub fn packet(&self) -> &GaussianEventPacket {
        &self.packet
    }
}

pub fn energy_sign_project(psi: &GaussianEventPacket, sign: i32) -> Result<EnergyProjected> {
    EnergyProjected::identity(psi).project(sign)
}

impl MomentumProfile for EnergyProjected {
    fn dim(&self) -> usize {
        self.packet.dim()
    }
    fn units(&self) -> Units {
        self.packet.units()
    }
    #[inline]
    fn momentum_amplitude(&self, p: &[f64]) -> Complex64 {
        let keep = if p[0] >= 0.0 { self.keep_positive } else { self.keep_negative };
        if keep {
            self.packet.momentum_amplitude(p)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
    fn envelope(&self) -> Envelope {
        let mut e = self.packet.envelope();
        if self.is_zero() {
            e.bound = 0.0;
        }
        e
    }
    fn norm_sq(&self) -> f64 {
        let total = self.packet.norm_sq();
        let mu = self.packet.center_p()[0];
        let sigma = self.packet.covariance()[0][0].sqrt();
        let z = mu / (std::f64::consts::SQRT_2 * sigma);
        let pos = 0.5 * erfc(-z);
        let neg = 0.5 * erfc(z);
        match (self.keep_positive, self.keep_negative) {
            (true, true) => total,
            (true, false) => total * pos,
            (false, true) => total * neg,
            (false, false) => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellSelector {
    Both,
    PositiveOnly,
    NegativeOnly,
}

impl ShellSelector {
    fn branches(&self) -> &'static [f64] {
        match self {
            ShellSelector::Both => &[1.0, -1.0],
            ShellSelector::PositiveOnly => &[1.0],
            ShellSelector::NegativeOnly => &[-1.0],
        }
    }
}

impl FromStr for ShellSelector {
    type Err = QevError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "both" => Ok(ShellSelector::Both),
            "positive_only" | "positive" => Ok(ShellSelector::PositiveOnly),
            "negative_only" | "negative" => Ok(ShellSelector::NegativeOnly),
            other => invalid(format!("unknown shell selector '{other}'")),
        }
    }
}

impl fmt::Display for ShellSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShellSelector::Both => "both",
            ShellSelector::PositiveOnly => "positive_only",
            ShellSelector::NegativeOnly => "negative_only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    mass: f64,
    potential: FourVector,
    selector: ShellSelector,
    charge_sign: f64,
}

impl Propagator {
    pub fn free(dim: usize, mass: f64) -> Result<Self> {
        Self::new(mass, FourVector::zero(dim, Units::Natural), ShellSelector::Both, 1)
    }

    pub fn new(mass: f64, potential: FourVector, selector: ShellSelector, charge_sign: i32) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return invalid(format!("mass must be finite and positive, got {mass}"));
        }
        if !potential.is_finite() {
            return invalid("potential must be finite");
        }
        let charge_sign = match charge_sign {
            1 => 1.0,
            -1 => -1.0,
            other => return invalid(format!("charge sign must be +1 or -1, got {other}")),
        };
        Ok(Propagator { mass, potential, selector, charge_sign })
    }

    pub fn with_potential(mut self, potential: FourVector) -> Result<Self> {
        ensure_dim(self.potential.dim(), potential.dim())?;
        self.potential = potential;
        Ok(self)
    }

    pub fn with_selector(mut self, selector: ShellSelector) -> Self {
        self.selector = selector;
        self
    }

    pub fn with_charge_sign(self, charge_sign: i32) -> Result<Self> {
        Self::new(self.mass, self.potential, self.selector, charge_sign)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn potential(&self) -> &FourVector {
        &self.potential
    }
    pub fn selector(&self) -> ShellSelector {
        self.selector
    }
    pub fn charge_sign(&self) -> i32 {
        self.charge_sign as i32
    }
    pub fn dim(&self) -> usize {
        self.potential.dim()
    }
    pub fn units(&self) -> Units {
        self.potential.units()
    }

    /// The potential actually entering ℘ = p − qA.
    pub fn effective_potential(&self) -> FourVector {
        self.potential.scale(self.charge_sign)
    }

    /// Point on branch `sign` of the shell above kinetic spatial momentum k.
    #[inline]
    pub fn shell_point(&self, k: &[f64], sign: f64) -> (Vec4, f64) {
        let a = self.effective_potential();
        let e = shell_energy(k, self.mass);
        let mut p = [0.0; MAX_DIM];
        p[0] = sign * e + a[0];
        for (i, ki) in k.iter().enumerate() {
            p[i + 1] = ki + a[i + 1];
        }
        (p, e)
    }

    fn check(&self, dim: usize, units: Units) -> Result<()> {
        ensure_dim(self.dim(), dim)?;
        if units != Units::Natural || self.units() != Units::Natural {
            return Err(QevError::UnitMismatch { left: units, right: Units::Natural });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureScheme {
    GaussLegendre { nodes_per_axis: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellQuadrature {
    pub scheme: QuadratureScheme,
    pub truncation_sigmas: f64,
    /// Convergence target relative to ∫|integrand|.
    pub tolerance: f64,
    pub max_nodes_per_axis: usize,
}

impl ShellQuadrature {
    pub fn default_for(dim_space: usize) -> Self {
        let (n, max) = match dim_space {
            1 => (64, 2048),
            2 => (32, 400),
            _ => (24, 128),
        };
        ShellQuadrature {
            scheme: QuadratureScheme::GaussLegendre { nodes_per_axis: n },
            truncation_sigmas: 8.0,
            tolerance: 1e-10,
            max_nodes_per_axis: max,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        ShellQuadrature {
            scheme: QuadratureScheme::MonteCarlo { samples, seed },
            truncation_sigmas: 8.0,
            tolerance: 0.0,
            max_nodes_per_axis: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            QuadratureScheme::GaussLegendre { nodes_per_axis } => {
                if nodes_per_axis < 2 || nodes_per_axis > self.max_nodes_per_axis {
                    return invalid(format!(
                        "nodes_per_axis = {nodes_per_axis} must lie in 2..={}",
                        self.max_nodes_per_axis
                    ));
                }
                if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
                    return invalid("quadrature tolerance must be positive");
                }
            }
            QuadratureScheme::MonteCarlo { samples, .. } => {
                if samples < 2 {
                    return invalid("Monte Carlo needs at least two samples");
                }
            }
        }
        if !(self.truncation_sigmas > 0.0 && self.truncation_sigmas.is_finite()) {
            return invalid("truncation_sigmas must be positive");
        }
        Ok(())
    }

    /// Same rule with the starting and maximal node counts multiplied by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        let mut q = *self;
        if let QuadratureScheme::GaussLegendre { nodes_per_axis } = q.scheme {
            q.scheme =
                QuadratureScheme::GaussLegendre { nodes_per_axis: ((nodes_per_axis as f64) * factor).ceil() as usize };
            q.max_nodes_per_axis = ((q.max_nodes_per_axis as f64) * factor).ceil() as usize;
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeEstimate {
    pub value: Complex64,
    /// ∫ |integrand| over the evaluated branches, the scale against which errors are judged.
    pub abs_scale: f64,
    /// Difference to the previous order (Gauss–Legendre) or combined standard error (Monte Carlo).
    pub error_estimate: f64,
    pub nodes_per_axis: usize,
}

/// Integration box in kinetic momentum k plus a rigorous bound of the integrand on each branch.
struct ShellRegion {
    ds: usize,
    center: [f64; 3],
    half_width: [f64; 3],
    sigma: [f64; 3],
    /// Upper bound of |integrand| · 2E over the whole box on each branch, index 0 for s = +1.
    branch_bound: [f64; 2],
}

impl ShellRegion {
    /// Box for an integrand bounded by exp(−¼ (p−c)ᵀ S (p−c) − ¼ r) · bound.
    fn new(center: &Vec4, s: &Mat, r: f64, bound: f64, g: &Propagator, q: &ShellQuadrature) -> Result<Self> {
        let d = g.dim();
        let ds = d - 1;
        let (s_inv, _) = linalg::spd_inverse(s, d)?;
        let a = g.effective_potential();
        let mut region =
            ShellRegion { ds, center: [0.0; 3], half_width: [0.0; 3], sigma: [0.0; 3], branch_bound: [0.0; 2] };
        for i in 0..ds {
            // |integrand| along axis i decays like a normal density of standard deviation √(2 S⁻¹_ii)
            let sigma = (2.0 * s_inv[i + 1][i + 1]).sqrt();
            region.sigma[i] = sigma;
            region.center[i] = center[i + 1] - a[i + 1];
            region.half_width[i] = q.truncation_sigmas * sigma;
        }
        let var0 = s_inv[0][0];
        for (idx, sign) in [1.0, -1.0].iter().enumerate() {
            // distance from the envelope center to the reachable energy half-line of this branch
            let edge = a[0] + sign * g.mass;
            let dist = if *sign > 0.0 { (edge - center[0]).max(0.0) } else { (center[0] - edge).max(0.0) };
            region.branch_bound[idx] = bound * (-0.25 * r - 0.25 * dist * dist / var0).exp();
        }
        Ok(region)
    }

    fn volume(&self) -> f64 {
        (0..self.ds).map(|i| 2.0 * self.half_width[i]).product()
    }
}

fn pair_region<F, H>(phi: &F, psi: &H, g: &Propagator, q: &ShellQuadrature) -> Result<ShellRegion>
where
    F: MomentumProfile + ?Sized,
    H: MomentumProfile + ?Sized,
{
    let d = g.dim();
    let (e1, e2) = (phi.envelope(), psi.envelope());
    let s = linalg::add(&e1.precision, &e2.precision, d);
    let (s_inv, _) = linalg::spd_inverse(&s, d)?;
    let k1c1 = linalg::mat_vec(&e1.precision, &e1.center, d);
    let k2c2 = linalg::mat_vec(&e2.precision, &e2.center, d);
    let mut rhs = [0.0; MAX_DIM];
    let mut dc = [0.0; MAX_DIM];
    for i in 0..d {
        rhs[i] = k1c1[i] + k2c2[i];
        dc[i] = e1.center[i] - e2.center[i];
    }
    let center = linalg::mat_vec(&s_inv, &rhs, d);
    let t = linalg::mat_vec(&s_inv, &linalg::mat_vec(&e1.precision, &dc, d), d);
    let u = linalg::mat_vec(&e2.precision, &dc, d);
    let r: f64 = (0..d).map(|i| t[i] * u[i]).sum::<f64>().max(0.0);
    ShellRegion::new(&center, &s, r, e1.bound * e2.bound, g, q)
}

/// Σ over branches and nodes of w · f(p, s) / (2E_k).
fn integrate_region<I>(
    region: &ShellRegion,
    g: &Propagator,
    branches: &[f64],
    n: usize,
    integrand: &I,
) -> (Complex64, f64)
where
    I: Fn(&Vec4) -> Complex64 + Sync,
{
    let rule = GaussLegendre::cached(n);
    let ds = region.ds;
    let jac: f64 = region.half_width[..ds].iter().product();
    let inner = n.pow((ds - 1) as u32);
    let row = |i0: usize| {
        let mut sum = CompensatedSum::default();
        let mut abs = CompensatedSum::default();
        let mut k = [0.0; 3];
        k[0] = region.center[0] + region.half_width[0] * rule.nodes[i0];
        let w0 = rule.weights[i0];
        for rest in 0..inner {
            let mut w = w0;
            let mut r = rest;
            for ax in 1..ds {
                let j = r % n;
                r /= n;
                k[ax] = region.center[ax] + region.half_width[ax] * rule.nodes[j];
                w *= rule.weights[j];
            }
            for &s in branches {
                let (p, e) = g.shell_point(&k[..ds], s);
                let v = integrand(&p) * (w / (2.0 * e));
                sum.add(v);
                abs.add(Complex64::new(v.norm(), 0.0));
            }
        }
        (sum, abs)
    };
    // Rows are merged in index order either way, so the result does not depend on threading.
    let partials: Vec<(CompensatedSum, CompensatedSum)> = if n * inner >= PARALLEL_MIN_NODES {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    };
    let mut sum = CompensatedSum::default();
    let mut abs = CompensatedSum::default();
    for (s, a) in &partials {
        sum.merge(s);
        abs.merge(a);
    }
    (sum.value() * jac, abs.value().re * jac)
}

fn adaptive<I>(region: &ShellRegion, g: &Propagator, q: &ShellQuadrature, integrand: &I) -> Result<AmplitudeEstimate>
where
    I: Fn(&Vec4) -> Complex64 + Sync,
{
    if let QuadratureScheme::MonteCarlo { samples, seed } = q.scheme {
        return monte_carlo(region, g, samples, seed, integrand);
    }
    let QuadratureScheme::GaussLegendre { nodes_per_axis } = q.scheme else { unreachable!() };
    let selected = g.selector.branches();
    let bound_of = |s: f64| region.branch_bound[if s > 0.0 { 0 } else { 1 }] * region.volume() / (2.0 * g.mass);
    let mut branches: Vec<f64> = selected.to_vec();
    // Evaluate the dominant branch first so a negligible partner can be dropped against it.
    branches.sort_by(|a, b| bound_of(*b).total_cmp(&bound_of(*a)));
    if branches.iter().all(|&s| bound_of(s) == 0.0) {
        return Ok(AmplitudeEstimate {
            value: Complex64::new(0.0, 0.0),
            abs_scale: 0.0,
            error_estimate: 0.0,
            nodes_per_axis,
        });
    }

    let mut n = nodes_per_axis;
    let mut previous: Option<Complex64> = None;
    let mut previous_change = f64::INFINITY;
    loop {
        let (mut value, mut scale) = integrate_region(region, g, &branches[..1], n, integrand);
        if branches.len() > 1 {
            let partner = branches[1];
            if bound_of(partner) > 1e-17 * scale || scale == 0.0 {
                let (v2, s2) = integrate_region(region, g, &branches[1..], n, integrand);
                value += v2;
                scale += s2;
            }
        }
        if let Some(prev) = previous {
            let change = (value - prev).norm();
            // Gauss–Legendre converges geometrically or faster on these integrands, so once the
            // changes shrink the error of the newest level is about change²/previous change.
            let err = if change < previous_change && previous_change.is_finite() {
                change * (change / previous_change)
            } else {
                change
            };
            // Integrands in the subnormal range only carry rounding noise.
            if err <= q.tolerance * scale || scale < NEGLIGIBLE_SCALE {
                return Ok(AmplitudeEstimate { value, abs_scale: scale, error_estimate: err, nodes_per_axis: n });
            }
            previous_change = change;
        }
        if n >= q.max_nodes_per_axis {
            let err = previous.map(|p| (value - p).norm()).unwrap_or(f64::NAN);
            return Err(QevError::QuadratureFailure(format!(
                "no convergence with {n} nodes per axis: last change {err:e}, scale {scale:e}, tolerance {:e}",
                q.tolerance
            )));
        }
        previous = Some(value);
        n = ((n as f64 * 1.5).ceil() as usize).min(q.max_nodes_per_axis);
    }
}

/// Importance sampling from independent normals covering the box, one stream for both branches.
fn monte_carlo<I>(
    region: &ShellRegion,
    g: &Propagator,
    samples: usize,
    seed: u64,
    integrand: &I,
) -> Result<AmplitudeEstimate>
where
    I: Fn(&Vec4) -> Complex64 + Sync,
{
    let ds = region.ds;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let branches = g.selector.branches();
    let mut sum = CompensatedSum::default();
    let mut sum_sq_re = 0.0;
    let mut sum_sq_im = 0.0;
    let mut abs = 0.0;
    let norm_const: f64 = (0..ds).map(|i| (2.0 * PI).sqrt() * region.sigma[i]).product();
    for _ in 0..samples {
        let mut k = [0.0; 3];
        let mut z2 = 0.0;
        for i in 0..ds {
            let z: f64 = StandardNormal.sample(&mut rng);
            z2 += z * z;
            k[i] = region.center[i] + region.sigma[i] * z;
        }
        let inv_pdf = norm_const * (0.5 * z2).exp();
        let mut v = Complex64::new(0.0, 0.0);
        for &s in branches {
            let (p, e) = g.shell_point(&k[..ds], s);
            v += integrand(&p) / (2.0 * e);
        }
        let v = v * inv_pdf;
        sum.add(v);
        sum_sq_re += v.re * v.re;
        sum_sq_im += v.im * v.im;
        abs += v.norm();
    }
    let nf = samples as f64;
    let mean = sum.value() / nf;
    let var_re = (sum_sq_re / nf - mean.re * mean.re).max(0.0) * nf / (nf - 1.0);
    let var_im = (sum_sq_im / nf - mean.im * mean.im).max(0.0) * nf / (nf - 1.0);
    let se = ((var_re + var_im) / nf).sqrt();
    Ok(AmplitudeEstimate { value: mean, abs_scale: abs / nf, error_estimate: se, nodes_per_axis: 0 })
}

/// τ(φ, ψ) with convergence diagnostics.
pub fn transition_amplitude_detailed<F, H>(
    phi: &F,
    psi: &H,
    g: &Propagator,
    q: &ShellQuadrature,
) -> Result<AmplitudeEstimate>
where
    F: MomentumProfile + ?Sized,
    H: MomentumProfile + ?Sized,
{
    q.validate()?;
    g.check(phi.dim(), phi.units())?;
    g.check(psi.dim(), psi.units())?;
    let region = pair_region(phi, psi, g, q)?;
    adaptive(&region, g, q, &|p: &Vec4| phi.momentum_amplitude(p).conj() * psi.momentum_amplitude(p))
}

/// τ(φ, ψ) = ⟨φ|Ĝ|ψ⟩.
pub fn transition_amplitude<F, H>(phi: &F, psi: &H, g: &Propagator, q: &ShellQuadrature) -> Result<Complex64>
where
    F: MomentumProfile + ?Sized,
    H: MomentumProfile + ?Sized,
{
    Ok(transition_amplitude_detailed(phi, psi, g, q)?.value)
}

fn self_ratio<F: MomentumProfile + ?Sized>(psi: &F, g: &Propagator, q: &ShellQuadrature) -> Result<(f64, f64)> {
    let norm = psi.norm_sq();
    if norm == 0.0 {
        return Err(QevError::ZeroNorm);
    }
    let tau = transition_amplitude(psi, psi, g, q)?.re;
    Ok((tau, tau / norm))
}

pub fn is_physically_allowed<F: MomentumProfile + ?Sized>(
    psi: &F,
    g: &Propagator,
    q: &ShellQuadrature,
    threshold: f64,
) -> Result<bool> {
    Ok(self_ratio(psi, g, q)?.1 > threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityReport {
    pub probability: f64,
    pub tau: Complex64,
    pub tau_phi_phi: f64,
    pub tau_psi_psi: f64,
}

/// P(φ, ψ) = |τ(φ,ψ)|² / (τ(φ,φ) τ(ψ,ψ)) with the default allowed-event threshold.
pub fn transition_probability<F, H>(phi: &F, psi: &H, g: &Propagator, q: &ShellQuadrature) -> Result<f64>
where
    F: MomentumProfile + ?Sized,
    H: MomentumProfile + ?Sized,
{
    Ok(transition_probability_report(phi, psi, g, q, DEFAULT_ALLOWED_THRESHOLD)?.probability)
}

pub fn transition_probability_report<F, H>(
    phi: &F,
    psi: &H,
    g: &Propagator,
    q: &ShellQuadrature,
    threshold: f64,
) -> Result<ProbabilityReport>
where
    F: MomentumProfile + ?Sized,
    H: MomentumProfile + ?Sized,
{
    let (tpp, rp) = self_ratio(phi, g, q)?;
    if rp <= threshold {
        return Err(QevError::PhysicallyDisallowed { which: "phi", ratio: rp, threshold });
    }
    let (tss, rs) = self_ratio(psi, g, q)?;
    if rs <= threshold {
        return Err(QevError::PhysicallyDisallowed { which: "psi", ratio: rs, threshold });
    }
    let tau = transition_amplitude(phi, psi, g, q)?;
    // Rounding in the separately integrated self-amplitudes can leave P a few ulps above 1.
    let probability = (tau.norm_sqr() / (tpp * tss)).min(1.0);
    Ok(ProbabilityReport { probability, tau, tau_phi_phi: tpp, tau_psi_psi: tss })
}

/// Ψ(x) = (2π)^{-D/2} Σ_s ∫ d^d k/(2E_k) e^{−ip·x} ψ(p) at each point.
pub fn evaluate_orbit<F>(psi: &F, g: &Propagator, points: &[FourVector], q: &ShellQuadrature) -> Result<Vec<Complex64>>
where
    F: MomentumProfile + ?Sized,
{
    q.validate()?;
    g.check(psi.dim(), psi.units())?;
    let d = g.dim();
    let env = psi.envelope();
    let region = ShellRegion::new(&env.center, &env.precision, 0.0, env.bound, g, q)?;
    let pref = (2.0 * PI).powf(-(d as f64) / 2.0);
    points
        .iter()
        .map(|x| {
            x.check_compatible(g.potential())?;
            let xs = x.as_slice();
            let integrand = |p: &Vec4| {
                let phase = -crate::minkowski::dot_slices(&p[..d], xs);
                psi.momentum_amplitude(p) * Complex64::from_polar(1.0, phase)
            };
            Ok(adaptive(&region, g, q, &integrand)?.value * pref)
        })
        .collect()
}
