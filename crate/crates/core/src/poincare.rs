//! Poincaré transformations acting on event packets.
//!
//! An element maps x ↦ L x + a with L = Λ·P·T (Λ the continuous Lorentz part, P parity, T time
//! reflection). On packets it acts by ψ'(p) = e^{i p·a} ψ(L⁻¹p), i.e. Û_T(a)Û_Λ, which keeps the
//! Gaussian family closed: c ↦ Lc, X ↦ LX + a, K ↦ L⁻ᵀ K L⁻¹.

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{ensure_dim, invalid, QevError, Result};
use crate::linalg::{self, Mat};
use crate::mass_shell::{transition_amplitude, Propagator, ShellQuadrature};
use crate::minkowski::{eta, FourVector, MAX_DIM};
use crate::packet::{GaussianEventPacket, Jet};
use crate::units::Units;

pub const DEFAULT_RAPIDITY_CAP: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareElement {
    dim: usize,
    lorentz: Mat,
    translation: FourVector,
    parity: bool,
    time_reversal: bool,
}

impl PoincareElement {
    pub fn new(lorentz: Mat, translation: FourVector, parity: bool, time_reversal: bool) -> Result<Self> {
        let dim = translation.dim();
        let g = PoincareElement { dim, lorentz, translation, parity, time_reversal };
        g.validate()?;
        Ok(g)
    }

    pub fn identity(dim: usize) -> Self {
        PoincareElement {
            dim,
            lorentz: linalg::identity(dim),
            translation: FourVector::zero(dim, Units::Natural),
            parity: false,
            time_reversal: false,
        }
    }

    pub fn translation(a: FourVector) -> Self {
        let mut g = Self::identity(a.dim());
        g.translation = a;
        g
    }

    /// Boost by rapidity vector θ = θ n (passive convention: (1, 0) ↦ (cosh θ, −sinh θ n)).
    pub fn boost(rapidity: &[f64]) -> Result<Self> {
        let ds = rapidity.len();
        if !(1..=3).contains(&ds) {
            return invalid(format!("rapidity needs 1..=3 components, got {ds}"));
        }
        let theta = rapidity.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mut g = Self::identity(ds + 1);
        if theta == 0.0 {
            return Ok(g);
        }
        let (ch, sh) = (theta.cosh(), theta.sinh());
        let n: Vec<f64> = rapidity.iter().map(|t| t / theta).collect();
        let l = &mut g.lorentz;
        l[0][0] = ch;
        for i in 0..ds {
            l[0][i + 1] = -sh * n[i];
            l[i + 1][0] = -sh * n[i];
            for j in 0..ds {
                l[i + 1][j + 1] = if i == j { 1.0 } else { 0.0 } + (ch - 1.0) * n[i] * n[j];
            }
        }
        Ok(g)
    }

    /// Active rotation. d = 3 takes an axis-angle vector, d = 2 a single angle about the normal.
    pub fn rotation(dim_space: usize, angles: &[f64]) -> Result<Self> {
        let mut g = Self::identity(dim_space + 1);
        match (dim_space, angles.len()) {
            (2, 1) => {
                let (s, c) = angles[0].sin_cos();
                g.lorentz[1][1] = c;
                g.lorentz[1][2] = -s;
                g.lorentz[2][1] = s;
                g.lorentz[2][2] = c;
            }
            (3, 3) => {
                let phi = angles.iter().map(|t| t * t).sum::<f64>().sqrt();
                if phi == 0.0 {
                    return Ok(g);
                }
                let n: Vec<f64> = angles.iter().map(|t| t / phi).collect();
                let (s, c) = phi.sin_cos();
                let cross = [[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]];
                for i in 0..3 {
                    for j in 0..3 {
                        let mut sq = 0.0;
                        for k in 0..3 {
                            sq += cross[i][k] * cross[k][j];
                        }
                        let id = if i == j { 1.0 } else { 0.0 };
                        g.lorentz[i + 1][j + 1] = id + s * cross[i][j] + (1.0 - c) * sq;
                    }
                }
            }
            _ => {
                return invalid(format!(
                    "rotations need d = 2 (one angle) or d = 3 (axis-angle vector); got d = {dim_space} with {} values",
                    angles.len()
                ))
            }
        }
        Ok(g)
    }

    pub fn parity(dim: usize) -> Self {
        let mut g = Self::identity(dim);
        g.parity = true;
        g
    }

    pub fn time_reversal(dim: usize) -> Self {
        let mut g = Self::identity(dim);
        g.time_reversal = true;
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lorentz(&self) -> &Mat {
        &self.lorentz
    }

    pub fn translation_vector(&self) -> &FourVector {
        &self.translation
    }

    pub fn flags(&self) -> (bool, bool) {
        (self.parity, self.time_reversal)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if !self.translation.is_finite() {
            return invalid("translation must be finite");
        }
        let l = &self.lorentz;
        let scale = linalg::max_abs(l, d).max(1.0).powi(2);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += l[k][i] * eta(k) * l[k][j];
                }
                let target = if i == j { eta(i) } else { 0.0 };
                if !((s - target).abs() <= 1e-12 * scale) {
                    return invalid(format!("lorentz matrix does not preserve the metric (entry {i},{j}: {s})"));
                }
            }
        }
        Ok(())
    }

    /// L = Λ·P·T.
    pub fn effective_matrix(&self) -> Mat {
        let d = self.dim;
        let mut m = self.lorentz;
        for row in m.iter_mut().take(d) {
            if self.time_reversal {
                row[0] = -row[0];
            }
            if self.parity {
                for v in row.iter_mut().take(d).skip(1) {
                    *v = -*v;
                }
            }
        }
        m
    }

    /// Rapidity of the effective map, arcosh |L⁰₀|.
    pub fn rapidity(&self) -> f64 {
        self.effective_matrix()[0][0].abs().max(1.0).acosh()
    }

    /// self ∘ other: x ↦ L₁(L₂x + a₂) + a₁.
    pub fn compose(&self, other: &PoincareElement) -> Result<PoincareElement> {
        ensure_dim(self.dim, other.dim)?;
        let l1 = self.effective_matrix();
        let l2 = other.effective_matrix();
        let lorentz = linalg::mat_mul(&l1, &l2, self.dim);
        let la = linalg::mat_vec(&l1, other.translation.as_slice(), self.dim);
        let mut a = self.translation;
        for i in 0..self.dim {
            a[i] += la[i];
        }
        Ok(PoincareElement { dim: self.dim, lorentz, translation: a, parity: false, time_reversal: false })
    }

    pub fn inverse(&self) -> PoincareElement {
        let inv = lorentz_inverse(&self.effective_matrix(), self.dim);
        let ia = linalg::mat_vec(&inv, self.translation.as_slice(), self.dim);
        let mut a = FourVector::zero(self.dim, self.translation.units());
        for i in 0..self.dim {
            a[i] = -ia[i];
        }
        PoincareElement { dim: self.dim, lorentz: inv, translation: a, parity: false, time_reversal: false }
    }

    pub fn transform_point(&self, x: &FourVector) -> Result<FourVector> {
        ensure_dim(self.dim, x.dim())?;
        let v = linalg::mat_vec(&self.effective_matrix(), x.as_slice(), self.dim);
        let mut out = *x;
        for i in 0..self.dim {
            out[i] = v[i] + self.translation[i];
        }
        Ok(out)
    }

    /// Constant potentials transform as vectors: A ↦ L A.
    pub fn transform_propagator(&self, g: &Propagator) -> Result<Propagator> {
        ensure_dim(self.dim, g.dim())?;
        let v = linalg::mat_vec(&self.effective_matrix(), g.potential().as_slice(), self.dim);
        let a = FourVector::new(&v[..self.dim], g.units())?;
        g.with_potential(a)
    }
}

/// L⁻¹ = G Lᵀ G for metric-preserving L.
fn lorentz_inverse(l: &Mat, d: usize) -> Mat {
    let mut inv = linalg::ZERO;
    for i in 0..d {
        for j in 0..d {
            inv[i][j] = eta(i) * l[j][i] * eta(j);
        }
    }
    inv
}

pub fn apply(g: &PoincareElement, psi: &GaussianEventPacket) -> Result<GaussianEventPacket> {
    ensure_dim(g.dim, psi.dim())?;
    let d = g.dim;
    let l = g.effective_matrix();
    let inv = lorentz_inverse(&l, d);
    let cp = linalg::mat_vec(&l, psi.center_p().as_slice(), d);
    let cx = linalg::mat_vec(&l, psi.center_x().as_slice(), d);
    let mut center_p = *psi.center_p();
    let mut center_x = *psi.center_x();
    for i in 0..d {
        center_p[i] = cp[i];
        center_x[i] = cx[i] + g.translation[i];
    }
    let k = linalg::mat_mul(&linalg::transpose(&inv, d), &linalg::mat_mul(psi.precision(), &inv, d), d);
    psi.with_transformed(center_x, center_p, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Covariant momentum component p_α generating translations along e_α.
    Translation(usize),
    Rotation(usize),
    Boost(usize),
}

impl FromStr for Generator {
    type Err = QevError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || QevError::InvalidParameter(format!("unknown generator '{s}'"));
        if s.len() < 2 {
            return Err(bad());
        }
        let idx: usize = s[1..].parse().map_err(|_| bad())?;
        match &s[..1] {
            "p" if idx <= 3 => Ok(Generator::Translation(idx)),
            "L" if (1..=3).contains(&idx) => Ok(Generator::Rotation(idx)),
            "K" if (1..=3).contains(&idx) => Ok(Generator::Boost(idx)),
            _ => Err(bad()),
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

/// A first-order differential operator Σ_b (Σ_a C_ab x^a + v_b) ∂_b with complex coefficients.
#[derive(Debug, Clone, Copy)]
struct VectorField {
    dim: usize,
    c: [[Complex64; MAX_DIM]; MAX_DIM],
    v: [Complex64; MAX_DIM],
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO_C: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl VectorField {
    fn zero(dim: usize) -> Self {
        VectorField { dim, c: [[ZERO_C; MAX_DIM]; MAX_DIM], v: [ZERO_C; MAX_DIM] }
    }

    /// Operator form of the Hermitian generators: p^α = iη_α∂_α, L_i = ε_ijk x^j p^k, K_i = t p^i − x^i p^0.
    fn hermitian(gen: Generator, dim: usize) -> Result<Self> {
        let ds = dim - 1;
        let mut op = Self::zero(dim);
        match gen {
            Generator::Translation(a) => {
                if a >= dim {
                    return invalid(format!("translation index {a} out of range"));
                }
                // p_α = η_α p^α = i ∂_α
                op.v[a] = I;
            }
            Generator::Rotation(i) => {
                for j in 1..=3 {
                    for k in 1..=3 {
                        let e = levi_civita(i, j, k);
                        if e != 0.0 {
                            if j > ds || k > ds {
                                return invalid(format!("L{i} needs spatial axes {j} and {k}"));
                            }
                            op.c[j][k] += -I * e;
                        }
                    }
                }
            }
            Generator::Boost(i) => {
                if i == 0 || i > ds {
                    return invalid(format!("boost index {i} out of range"));
                }
                op.c[0][i] += -I;
                op.c[i][0] += -I;
            }
        }
        Ok(op)
    }

    fn scaled(mut self, s: Complex64) -> Self {
        for row in &mut self.c {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        for v in &mut self.v {
            *v *= s;
        }
        self
    }

    fn coefficients(&self, x: &[f64]) -> [Complex64; MAX_DIM] {
        let mut w = self.v;
        for (b, wb) in w.iter_mut().enumerate().take(self.dim) {
            for a in 0..self.dim {
                *wb += self.c[a][b] * x[a];
            }
        }
        w
    }

    fn apply(&self, jet: &Jet, x: &[f64]) -> Complex64 {
        let w = self.coefficients(x);
        (0..self.dim).map(|b| w[b] * jet.grad[b]).sum()
    }

    /// (self ∘ other) ψ.
    fn apply_product(&self, other: &VectorField, jet: &Jet, x: &[f64]) -> Complex64 {
        let w1 = self.coefficients(x);
        let w2 = other.coefficients(x);
        let mut s = ZERO_C;
        for d in 0..self.dim {
            let mut inner = ZERO_C;
            for b in 0..self.dim {
                inner += other.c[d][b] * jet.grad[b] + w2[b] * jet.hess[d][b];
            }
            s += w1[d] * inner;
        }
        s
    }
}

/// Generator whose exponential e^{−iεĜ} matches the element built by [`infinitesimal`].
fn group_generator(gen: Generator, dim: usize) -> Result<VectorField> {
    let h = VectorField::hermitian(gen, dim)?;
    Ok(match gen {
        // Û_T(a) = e^{i a·p}, boosts follow the passive matrix convention: both enter with a sign flip.
        Generator::Translation(_) | Generator::Boost(_) => h.scaled(Complex64::new(-1.0, 0.0)),
        Generator::Rotation(_) => h,
    })
}

fn infinitesimal(gen: Generator, dim: usize, eps: f64) -> Result<PoincareElement> {
    let ds = dim - 1;
    match gen {
        Generator::Translation(a) => {
            let mut v = FourVector::zero(dim, Units::Natural);
            if a >= dim {
                return invalid(format!("translation index {a} out of range"));
            }
            v[a] = eps;
            Ok(PoincareElement::translation(v))
        }
        Generator::Rotation(i) => match ds {
            3 => {
                let mut axis = [0.0; 3];
                axis[i - 1] = eps;
                PoincareElement::rotation(3, &axis)
            }
            2 if i == 3 => PoincareElement::rotation(2, &[eps]),
            _ => invalid(format!("rotation L{i} is not available for d = {ds}")),
        },
        Generator::Boost(i) => {
            if i == 0 || i > ds {
                return invalid(format!("boost index {i} out of range"));
            }
            let mut theta = vec![0.0; ds];
            theta[i - 1] = eps;
            PoincareElement::boost(&theta)
        }
    }
}

/// Sample grid of 4^D spacetime points spanning ±1.5 position widths around the packet center.
fn sample_points(psi: &GaussianEventPacket) -> Vec<[f64; MAX_DIM]> {
    let d = psi.dim();
    let widths = psi.widths_x();
    let offsets = [-1.5, -0.5, 0.5, 1.5];
    let total = 4usize.pow(d as u32);
    (0..total)
        .map(|idx| {
            let mut x = [0.0; MAX_DIM];
            let mut r = idx;
            for a in 0..d {
                x[a] = psi.center_x()[a] + offsets[r % 4] * widths[a];
                r /= 4;
            }
            x
        })
        .collect()
}

/// max |ψ_ε − (1 − iεĜ)ψ| / max |ψ| over the sample grid; O(ε²) when Ĝ generates the action.
pub fn generator_check(psi: &GaussianEventPacket, kind: Generator, epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon != 0.0) {
        return invalid("epsilon must be finite and nonzero");
    }
    let d = psi.dim();
    let op = group_generator(kind, d)?;
    let moved = apply(&infinitesimal(kind, d, epsilon)?, psi)?;
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for x in sample_points(psi) {
        let jet = psi.spacetime_jet(&x);
        let predicted = jet.value - I * epsilon * op.apply(&jet, &x);
        worst = worst.max((moved.spacetime_value(&x) - predicted).norm());
        peak = peak.max(jet.value.norm());
    }
    Ok(worst / peak)
}

/// Structure constants: [L_i,L_j] = iε_ijk L_k, [L_i,K_j] = iε_ijk K_k, [K_i,K_j] = −iε_ijk L_k.
fn expected_commutator(a: Generator, b: Generator) -> Result<Vec<(Complex64, Generator)>> {
    let mut out = Vec::new();
    let (i, j, rot_rot, kind) = match (a, b) {
        (Generator::Rotation(i), Generator::Rotation(j)) => (i, j, 1.0, 0),
        (Generator::Rotation(i), Generator::Boost(j)) | (Generator::Boost(i), Generator::Rotation(j)) => (i, j, 1.0, 1),
        (Generator::Boost(i), Generator::Boost(j)) => (i, j, -1.0, 0),
        _ => return invalid("commutator check supports rotation and boost generators"),
    };
    for k in 1..=3 {
        let e = levi_civita(i, j, k);
        if e != 0.0 {
            let gen = if kind == 0 { Generator::Rotation(k) } else { Generator::Boost(k) };
            out.push((I * (rot_rot * e), gen));
        }
    }
    Ok(out)
}

/// max |[Â,B̂]ψ − (expected)ψ| / max |Âψ| over the sample grid.
pub fn commutator_check(psi: &GaussianEventPacket, a: Generator, b: Generator) -> Result<f64> {
    let d = psi.dim();
    let oa = VectorField::hermitian(a, d)?;
    let ob = VectorField::hermitian(b, d)?;
    let expected = expected_commutator(a, b)?;
    let terms: Vec<(Complex64, VectorField)> =
        expected.into_iter().map(|(c, g)| Ok((c, VectorField::hermitian(g, d)?))).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for x in sample_points(psi) {
        let jet = psi.spacetime_jet(&x);
        let lhs = oa.apply_product(&ob, &jet, &x) - ob.apply_product(&oa, &jet, &x);
        let rhs: Complex64 = terms.iter().map(|(c, op)| c * op.apply(&jet, &x)).sum();
        worst = worst.max((lhs - rhs).norm());
        peak = peak.max(oa.apply(&jet, &x).norm());
    }
    Ok(worst / peak)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub tau_before: Complex64,
    pub tau_after: Complex64,
    pub relative_error: f64,
}

/// τ(φ, ψ) under G against τ(gφ, gψ) under the transformed G. Elements beyond the rapidity cap
/// are integrated with doubled node counts.
pub fn invariance_report(
    phi: &GaussianEventPacket,
    psi: &GaussianEventPacket,
    g_prop: &Propagator,
    g: &PoincareElement,
    q: &ShellQuadrature,
    rapidity_cap: f64,
) -> Result<InvarianceReport> {
    let before = transition_amplitude(phi, psi, g_prop, q)?;
    let q_after = if g.rapidity() > rapidity_cap { q.refined(2.0) } else { *q };
    let after = transition_amplitude(&apply(g, phi)?, &apply(g, psi)?, &g.transform_propagator(g_prop)?, &q_after)?;
    let diff = (after - before).norm();
    let relative_error = if before.norm() > 0.0 { diff / before.norm() } else { diff };
    Ok(InvarianceReport { tau_before: before, tau_after: after, relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::inner_product;

    fn packet(d: usize) -> GaussianEventPacket {
        let cx: Vec<f64> = (0..=d).map(|i| 0.3 * i as f64 - 0.2).collect();
        let mut cp: Vec<f64> = (0..=d).map(|i| 0.1 + 0.2 * i as f64).collect();
        cp[0] = 1.5;
        let w: Vec<f64> = (0..=d).map(|i| 0.4 + 0.1 * i as f64).collect();
        GaussianEventPacket::new(
            FourVector::natural(&cx).unwrap(),
            FourVector::natural(&cp).unwrap(),
            &w,
            Complex64::new(0.8, 0.3),
        )
        .unwrap()
    }

    #[test]
    fn boost_example_matrix() {
        let g = PoincareElement::boost(&[0.6f64.atanh()]).unwrap();
        let l = g.lorentz();
        assert!((l[0][0] - 1.25).abs() < 1e-15);
        assert!((l[0][1] + 0.75).abs() < 1e-15);
        assert!((l[1][0] + 0.75).abs() < 1e-15);
        assert!((l[1][1] - 1.25).abs() < 1e-15);
        let x = g.transform_point(&FourVector::natural(&[1.0, 0.0]).unwrap()).unwrap();
        assert!((x[0] - 1.25).abs() < 1e-15 && (x[1] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_boost_is_identity() {
        let g = PoincareElement::boost(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(g.lorentz(), &linalg::identity(4));
    }

    #[test]
    fn boost_inverse() {
        let t = [0.4, -0.7, 0.2];
        let a = PoincareElement::boost(&t).unwrap();
        let b = PoincareElement::boost(&t.map(|x| -x)).unwrap();
        let c = a.compose(&b).unwrap();
        let id = linalg::identity(4);
        for i in 0..4 {
            for j in 0..4 {
                assert!((c.lorentz()[i][j] - id[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_lorentz_matrix() {
        let mut m = linalg::identity(2);
        m[0][1] = 0.5;
        assert!(PoincareElement::new(m, FourVector::zero(2, Units::Natural), false, false).is_err());
    }

    #[test]
    fn translation_shifts_center_and_keeps_norm() {
        let psi = packet(2);
        let a = FourVector::natural(&[0.5, -1.0, 2.0]).unwrap();
        let moved = apply(&PoincareElement::translation(a), &psi).unwrap();
        for i in 0..3 {
            assert!((moved.center_x()[i] - psi.center_x()[i] - a[i]).abs() < 1e-15);
        }
        assert!((moved.norm_sq() - psi.norm_sq()).abs() < 1e-14 * psi.norm_sq());
        // ψ'(p) = e^{ip·a} ψ(p)
        let p = [1.2, 0.3, -0.4];
        let phase = Complex64::from_polar(1.0, crate::minkowski::dot_slices(&p, a.as_slice()));
        assert!((moved.momentum_amplitude(&p) - phase * psi.momentum_amplitude(&p)).norm() < 1e-14);
    }

    #[test]
    fn parity_and_time_reversal_flags() {
        let psi = packet(3);
        let p = apply(&PoincareElement::parity(4), &psi).unwrap();
        assert_eq!(p.center_p()[0], psi.center_p()[0]);
        for k in 1..4 {
            assert_eq!(p.center_p()[k], -psi.center_p()[k]);
        }
        let t = apply(&PoincareElement::time_reversal(4), &psi).unwrap();
        assert_eq!(t.center_p()[0], -psi.center_p()[0]);
        assert_eq!(t.center_x()[0], -psi.center_x()[0]);
        let pp = apply(&PoincareElement::parity(4), &p).unwrap();
        assert_eq!(pp, psi);
    }

    #[test]
    fn boost_preserves_inner_products() {
        let psi = packet(3);
        let phi =
            apply(&PoincareElement::translation(FourVector::natural(&[0.2, 0.1, 0.0, -0.3]).unwrap()), &psi).unwrap();
        let g = PoincareElement::boost(&[0.3, 0.5, -0.2]).unwrap();
        let before = inner_product(&phi, &psi).unwrap();
        let after = inner_product(&apply(&g, &phi).unwrap(), &apply(&g, &psi).unwrap()).unwrap();
        assert!((before - after).norm() < 1e-10 * before.norm());
    }

    #[test]
    fn generators_match_first_order_action() {
        let psi = packet(3);
        for gen in ["p0", "p1", "p3", "L1", "L3", "K1", "K2"] {
            let g: Generator = gen.parse().unwrap();
            let r1 = generator_check(&psi, g, 1e-3).unwrap();
            let r2 = generator_check(&psi, g, 5e-4).unwrap();
            let order = (r1 / r2).log2();
            assert!((order - 2.0).abs() < 0.1, "{gen}: residuals {r1:e} {r2:e}");
        }
    }

    #[test]
    fn lie_algebra() {
        let psi = packet(3);
        let pairs = [("L1", "L2"), ("L2", "L3"), ("L1", "K2"), ("K3", "L1"), ("K1", "K2")];
        for (a, b) in pairs {
            let r = commutator_check(&psi, a.parse().unwrap(), b.parse().unwrap()).unwrap();
            assert!(r < 1e-12, "[{a},{b}]: {r:e}");
        }
    }

    #[test]
    fn rotation_in_two_dimensions() {
        let psi = packet(2);
        assert!(generator_check(&psi, Generator::Rotation(3), 1e-4).unwrap() < 1e-6);
        assert!(generator_check(&psi, Generator::Rotation(1), 1e-4).is_err());
    }
}
