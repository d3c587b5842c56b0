//! Gaussian event packets.
//!
//! Momentum representation:
//!   ψ(p) = A · exp(−¼ (p−c)ᵀ K (p−c)) · exp(i p·X)
//! with c = center_p, X = center_x, p·X the Minkowski dot and K a symmetric positive definite
//! precision matrix (K = diag(1/σ²) for axis-aligned widths σ). |ψ(p)|² is then a normal density
//! shape with covariance K⁻¹. The spacetime representation uses ⟨x|p⟩ = (2π)^{-D/2} e^{−ip·x}.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{ensure_dim, invalid, QevError, Result};
use crate::linalg::{self, Mat, Vec4};
use crate::minkowski::{eta, FourVector, MAX_DIM};
use crate::units::Units;

#[derive(Clone, PartialEq)]
pub struct GaussianEventPacket {
    dim: usize,
    center_x: FourVector,
    center_p: FourVector,
    precision: Mat,
    covariance: Mat,
    det_precision: f64,
    amplitude: Complex64,
}

impl fmt::Debug for GaussianEventPacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianEventPacket")
            .field("center_x", &self.center_x.as_slice())
            .field("center_p", &self.center_p.as_slice())
            .field("widths_p", &self.widths_p())
            .field("amplitude", &self.amplitude)
            .field("units", &self.units())
            .finish()
    }
}

impl GaussianEventPacket {
    /// Axis-aligned packet with momentum standard deviations `widths_p`.
    pub fn new(center_x: FourVector, center_p: FourVector, widths_p: &[f64], amplitude: Complex64) -> Result<Self> {
        ensure_dim(center_x.dim(), widths_p.len())?;
        for (i, w) in widths_p.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return invalid(format!("widths_p[{i}] = {w} must be finite and strictly positive"));
            }
        }
        let k: Vec<f64> = widths_p.iter().map(|w| 1.0 / (w * w)).collect();
        Self::with_precision(center_x, center_p, linalg::diag(&k), amplitude)
    }

    /// Packet with a general precision matrix K (only the leading D×D block is read).
    pub fn with_precision(
        center_x: FourVector,
        center_p: FourVector,
        precision: Mat,
        amplitude: Complex64,
    ) -> Result<Self> {
        center_x.check_compatible(&center_p)?;
        let dim = center_x.dim();
        if !center_x.is_finite() || !center_p.is_finite() {
            return invalid("packet centers must be finite");
        }
        if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
            return invalid("packet amplitude must be finite");
        }
        let precision = linalg::symmetrize(&precision, dim);
        let (covariance, det_precision) = linalg::spd_inverse(&precision, dim)
            .map_err(|_| QevError::InvalidParameter("packet precision must be positive definite".into()))?;
        if !(det_precision.is_finite() && det_precision > 0.0) {
            return invalid("packet precision has a degenerate determinant");
        }
        Ok(GaussianEventPacket { dim, center_x, center_p, precision, covariance, det_precision, amplitude })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_space(&self) -> usize {
        self.dim - 1
    }

    pub fn units(&self) -> Units {
        self.center_x.units()
    }

    pub fn center_x(&self) -> &FourVector {
        &self.center_x
    }

    pub fn center_p(&self) -> &FourVector {
        &self.center_p
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn precision(&self) -> &Mat {
        &self.precision
    }

    pub fn covariance(&self) -> &Mat {
        &self.covariance
    }

    /// Marginal momentum standard deviations √(K⁻¹)_αα.
    pub fn widths_p(&self) -> Vec<f64> {
        (0..self.dim).map(|a| self.covariance[a][a].sqrt()).collect()
    }

    pub fn is_axis_aligned(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.precision[i][j] == 0.0))
    }

    pub fn with_amplitude(&self, amplitude: Complex64) -> Self {
        let mut p = self.clone();
        p.amplitude = amplitude;
        p
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.with_amplitude(self.amplitude * factor)
    }

    pub fn with_units(&self, units: Units) -> Self {
        let mut p = self.clone();
        p.center_x = p.center_x.with_units(units);
        p.center_p = p.center_p.with_units(units);
        p
    }

    /// Complex conjugate of the spacetime wavefunction: ψ*(x).
    pub fn conjugate(&self) -> Self {
        let mut p = self.clone();
        p.center_p = -p.center_p;
        p.amplitude = p.amplitude.conj();
        p
    }

    /// The packet e^{i b·x} ψ(x), i.e. the momentum representation shifted to ψ(p + b).
    pub fn gauge_shift(&self, b: &FourVector) -> Result<Self> {
        self.center_x.check_compatible(b)?;
        let mut p = self.clone();
        p.center_p = p.center_p - *b;
        let phase = crate::minkowski::dot_slices(b.as_slice(), self.center_x.as_slice());
        p.amplitude = self.amplitude * Complex64::from_polar(1.0, phase);
        Ok(p)
    }

    pub(crate) fn with_transformed(&self, center_x: FourVector, center_p: FourVector, precision: Mat) -> Result<Self> {
        Self::with_precision(center_x, center_p, precision, self.amplitude)
    }

    /// ⟨ψ|ψ⟩ in closed form: |A|² (2π)^{D/2} det(K)^{-1/2}.
    pub fn norm_sq(&self) -> f64 {
        self.amplitude.norm_sqr() * (2.0 * PI).powf(self.dim as f64 / 2.0) / self.det_precision.sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// ψ(p) at a momentum given as plain components (length D).
    #[inline]
    pub fn momentum_amplitude(&self, p: &[f64]) -> Complex64 {
        let d = self.dim;
        let c = self.center_p.as_slice();
        let x = self.center_x.as_slice();
        let mut q = [0.0; MAX_DIM];
        for i in 0..d {
            q[i] = p[i] - c[i];
        }
        let quad = linalg::quad_form(&self.precision, &q, d);
        let phase = crate::minkowski::dot_slices(&p[..d], x);
        self.amplitude * Complex64::from_polar((-0.25 * quad).exp(), phase)
    }

    /// ψ(x) = A det(K/2)^{-1/2} e^{−i c·y} exp(−yᵀ G K⁻¹ G y), y = x − X.
    pub fn spacetime_value(&self, x: &[f64]) -> Complex64 {
        self.spacetime_jet(x).value
    }

    /// Value, gradient ∂_μψ and Hessian ∂_μ∂_νψ at a spacetime point.
    pub fn spacetime_jet(&self, x: &[f64]) -> Jet {
        let d = self.dim;
        let cx = self.center_x.as_slice();
        let c = self.center_p.as_slice();
        let mut y = [0.0; MAX_DIM];
        for i in 0..d {
            y[i] = x[i] - cx[i];
        }
        let n = self.metric_covariance();
        let ny = linalg::mat_vec(&n, &y, d);
        let quad: f64 = (0..d).map(|i| y[i] * ny[i]).sum();
        let phase = -crate::minkowski::dot_slices(c, &y[..d]);
        let pref = self.amplitude * (2f64.powi(d as i32) / self.det_precision).sqrt();
        let value = pref * Complex64::from_polar((-quad).exp(), phase);
        // ln ψ = const − i c·y − yᵀNy
        let mut grad_s = [Complex64::new(0.0, 0.0); MAX_DIM];
        for mu in 0..d {
            grad_s[mu] = Complex64::new(-2.0 * ny[mu], -eta(mu) * c[mu]);
        }
        let mut jet = Jet {
            dim: d,
            value,
            grad: [Complex64::new(0.0, 0.0); MAX_DIM],
            hess: [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM],
        };
        for mu in 0..d {
            jet.grad[mu] = value * grad_s[mu];
            for nu in 0..d {
                jet.hess[mu][nu] = value * (grad_s[mu] * grad_s[nu] - 2.0 * n[mu][nu]);
            }
        }
        jet
    }

    /// G K⁻¹ G: the spacetime quadratic form.
    fn metric_covariance(&self) -> Mat {
        let d = self.dim;
        let mut n = linalg::ZERO;
        for i in 0..d {
            for j in 0..d {
                n[i][j] = eta(i) * eta(j) * self.covariance[i][j];
            }
        }
        n
    }

    /// Position-space uncertainties Δx_α = ½√K_αα.
    pub fn widths_x(&self) -> Vec<f64> {
        (0..self.dim).map(|a| 0.5 * self.precision[a][a].sqrt()).collect()
    }
}

/// Local second-order data of a spacetime wavefunction.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub dim: usize,
    pub value: Complex64,
    pub grad: [Complex64; MAX_DIM],
    pub hess: [[Complex64; MAX_DIM]; MAX_DIM],
}

/// ⟨φ|ψ⟩ in closed form.
pub fn inner_product(phi: &GaussianEventPacket, psi: &GaussianEventPacket) -> Result<Complex64> {
    phi.center_x.check_compatible(&psi.center_x)?;
    let d = phi.dim;
    let (k1, k2) = (&phi.precision, &psi.precision);
    let s = linalg::add(k1, k2, d);
    let (s_inv, det_s) = linalg::spd_inverse(&s, d)?;
    let c1 = phi.center_p.as_slice();
    let c2 = psi.center_p.as_slice();
    let mut dc = [0.0; MAX_DIM];
    let mut v = [0.0; MAX_DIM];
    for i in 0..d {
        dc[i] = c1[i] - c2[i];
        v[i] = eta(i) * (psi.center_x[i] - phi.center_x[i]);
    }
    // c̄ = S⁻¹(K1 c1 + K2 c2) = c2 + S⁻¹K1(c1 − c2)
    let k1dc = linalg::mat_vec(k1, &dc, d);
    let shift = linalg::mat_vec(&s_inv, &k1dc, d);
    let mut cbar = [0.0; MAX_DIM];
    for i in 0..d {
        cbar[i] = c2[i] + shift[i];
    }
    // R = Δcᵀ K1 S⁻¹ K2 Δc
    let k2dc = linalg::mat_vec(k2, &dc, d);
    let r: f64 = (0..d).map(|i| shift[i] * k2dc[i]).sum();
    let vsv = linalg::quad_form(&s_inv, &v, d);
    let phase: f64 = (0..d).map(|i| cbar[i] * v[i]).sum();
    let det_half = det_s / 2f64.powi(d as i32);
    let mag = (2.0 * PI).powf(d as f64 / 2.0) / det_half.sqrt() * (-0.25 * r - vsv).exp();
    Ok(phi.amplitude.conj() * psi.amplitude * Complex64::from_polar(mag, phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Time,
    /// Spatial coordinate x^k, k in 1..=d.
    Position(usize),
    Energy,
    /// Spatial momentum p^k, k in 1..=d.
    Momentum(usize),
    /// L_i = ε_ijk x^j p^k.
    AngularMomentum(usize),
    /// K_i = t p^i − x^i E.
    Boost(usize),
}

impl FromStr for Observable {
    type Err = QevError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let idx = |rest: &str| -> Result<usize> {
            rest.parse::<usize>()
                .ok()
                .filter(|k| (1..=3).contains(k))
                .ok_or_else(|| QevError::InvalidParameter(format!("bad observable '{s}'")))
        };
        match s {
            "t" => Ok(Observable::Time),
            "E" => Ok(Observable::Energy),
            _ if s.starts_with('x') => Ok(Observable::Position(idx(&s[1..])?)),
            _ if s.starts_with('p') => Ok(Observable::Momentum(idx(&s[1..])?)),
            _ if s.starts_with('L') => Ok(Observable::AngularMomentum(idx(&s[1..])?)),
            _ if s.starts_with('K') => Ok(Observable::Boost(idx(&s[1..])?)),
            _ => invalid(format!("bad observable '{s}'")),
        }
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1.0,
        (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1.0,
        _ => 0.0,
    }
}

/// (⟨A⟩, ΔA) per the center/uncertainty definitions.
///
/// Every supported observable acts on a Gaussian as multiplication by a polynomial f(p) of degree
/// at most two, so the moments are Gaussian expectations of f and |f − ⟨A⟩|² under |ψ(p)|². These are
/// evaluated exactly by the 3-node Gauss–Hermite rule on whitened coordinates.
pub fn observable_center_and_uncertainty(psi: &GaussianEventPacket, obs: Observable) -> Result<(f64, f64)> {
    if psi.amplitude.norm_sqr() == 0.0 {
        return Err(QevError::ZeroNorm);
    }
    let d = psi.dim;
    let ds = d - 1;
    let check = |k: usize| -> Result<()> {
        if k == 0 || k > ds {
            invalid(format!("spatial index {k} out of range for d = {ds}"))
        } else {
            Ok(())
        }
    };
    match obs {
        Observable::Position(k) | Observable::Momentum(k) | Observable::Boost(k) => check(k)?,
        Observable::AngularMomentum(i) => {
            let (j, k) = ((i % 3) + 1, ((i + 1) % 3) + 1);
            if !(1..=3).contains(&i) {
                return invalid(format!("angular momentum index {i} out of range"));
            }
            check(j)?;
            check(k)?;
        }
        _ => {}
    }
    let x = psi.center_x.as_slice();
    let c = psi.center_p.as_slice();
    let kmat = &psi.precision;
    // x̂^a acts as multiplication by X_a + (iη_a/2)(Kq)_a.
    let f = |q: &Vec4| -> Complex64 {
        let kq = linalg::mat_vec(kmat, q, d);
        let xa = |a: usize| Complex64::new(x[a], 0.5 * eta(a) * kq[a]);
        let pa = |a: usize| c[a] + q[a];
        match obs {
            Observable::Time => xa(0),
            Observable::Position(k) => xa(k),
            Observable::Energy => Complex64::new(pa(0), 0.0),
            Observable::Momentum(k) => Complex64::new(pa(k), 0.0),
            Observable::AngularMomentum(i) => {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 1..=3 {
                    for k in 1..=3 {
                        let e = levi_civita(i, j, k);
                        if e != 0.0 {
                            s += e * pa(k) * xa(j);
                        }
                    }
                }
                s
            }
            Observable::Boost(i) => xa(0) * pa(i) - xa(i) * pa(0),
        }
    };
    let l = linalg::cholesky(&psi.covariance, d)?;
    let nodes = [(-(3f64.sqrt()), 1.0 / 6.0), (0.0, 2.0 / 3.0), (3f64.sqrt(), 1.0 / 6.0)];
    let total = 3usize.pow(d as u32);
    let mut values = Vec::with_capacity(total);
    for idx in 0..total {
        let mut z = [0.0; MAX_DIM];
        let mut w = 1.0;
        let mut r = idx;
        for zi in z.iter_mut().take(d) {
            let (node, weight) = nodes[r % 3];
            *zi = node;
            w *= weight;
            r /= 3;
        }
        let q = linalg::mat_vec(&l, &z, d);
        values.push((w, f(&q)));
    }
    let mean: Complex64 = values.iter().map(|(w, v)| *w * v).sum();
    let var: f64 = values.iter().map(|(w, v)| w * (v - mean).norm_sqr()).sum();
    Ok((mean.re, var.max(0.0).sqrt()))
}
