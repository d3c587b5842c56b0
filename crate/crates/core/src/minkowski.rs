//! Minkowski geometry in 1+d dimensions with metric diag(+1, −1, …, −1).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Neg, Sub};

use crate::error::{ensure_dim, invalid, Result};
use crate::units::Units;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricSignature {
    dim_space: usize,
}

impl MetricSignature {
    pub fn new(dim_space: usize) -> Result<Self> {
        if !(1..=3).contains(&dim_space) {
            return invalid(format!("spatial dimension must be 1, 2 or 3, got {dim_space}"));
        }
        Ok(MetricSignature { dim_space })
    }

    pub fn dim_space(&self) -> usize {
        self.dim_space
    }

    pub fn dim(&self) -> usize {
        self.dim_space + 1
    }

    /// g_{μμ}; also equal to g^{μμ}.
    #[inline]
    pub fn diagonal(&self, mu: usize) -> f64 {
        eta(mu)
    }

    pub fn diagonals(&self) -> Vec<f64> {
        (0..self.dim()).map(eta).collect()
    }
}

#[inline]
pub fn eta(mu: usize) -> f64 {
    if mu == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A point or covector of 1+d dimensional spacetime. Components beyond `dim` are zero.
#[derive(Clone, Copy, PartialEq)]
pub struct FourVector {
    comps: [f64; MAX_DIM],
    dim: usize,
    units: Units,
}

impl fmt::Debug for FourVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FourVector{:?}[{}]", self.as_slice(), self.units)
    }
}

impl FourVector {
    pub fn new(components: &[f64], units: Units) -> Result<Self> {
        let dim = components.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return invalid(format!("a four-vector needs 2..=4 components, got {dim}"));
        }
        let mut comps = [0.0; MAX_DIM];
        comps[..dim].copy_from_slice(components);
        Ok(FourVector { comps, dim, units })
    }

    pub fn natural(components: &[f64]) -> Result<Self> {
        Self::new(components, Units::Natural)
    }

    pub fn zero(dim: usize, units: Units) -> Self {
        debug_assert!((2..=MAX_DIM).contains(&dim));
        FourVector { comps: [0.0; MAX_DIM], dim, units }
    }

    /// Basis vector e_mu.
    pub fn unit(dim: usize, mu: usize, units: Units) -> Self {
        let mut v = Self::zero(dim, units);
        v.comps[mu] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_space(&self) -> usize {
        self.dim - 1
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.comps[..self.dim]
    }

    pub fn spatial(&self) -> &[f64] {
        &self.comps[1..self.dim]
    }

    pub fn time(&self) -> f64 {
        self.comps[0]
    }

    pub fn scale(mut self, s: f64) -> Self {
        for c in &mut self.comps[..self.dim] {
            *c *= s;
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    /// Lowered components x_μ = g_{μν} x^ν.
    pub fn lowered(&self) -> Self {
        let mut v = *self;
        for k in 1..self.dim {
            v.comps[k] = -v.comps[k];
        }
        v
    }

    pub fn check_compatible(&self, other: &FourVector) -> Result<()> {
        ensure_dim(self.dim, other.dim)?;
        if self.units != other.units {
            return Err(crate::QevError::UnitMismatch { left: self.units, right: other.units });
        }
        Ok(())
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for FourVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        let d = self.dim;
        &mut self.comps[..d][i]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(mut self, rhs: FourVector) -> FourVector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.comps[i] += rhs.comps[i];
        }
        self
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(mut self, rhs: FourVector) -> FourVector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.comps[i] -= rhs.comps[i];
        }
        self
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        self.scale(-1.0)
    }
}

/// x⁰y⁰ − Σ_k x^k y^k.
pub fn minkowski_dot(x: &FourVector, y: &FourVector) -> Result<f64> {
    x.check_compatible(y)?;
    Ok(dot_slices(x.as_slice(), y.as_slice()))
}

#[inline]
pub(crate) fn dot_slices(x: &[f64], y: &[f64]) -> f64 {
    let mut s = x[0] * y[0];
    for k in 1..x.len() {
        s -= x[k] * y[k];
    }
    s
}

/// Upper-shell energy √(|p|² + m²).
pub fn shell_energy(p_spatial: &[f64], m: f64) -> f64 {
    let p2: f64 = p_spatial.iter().map(|p| p * p).sum();
    (p2 + m * m).sqrt()
}
