//! Small dense helpers for matrices of size at most 4×4.

use nalgebra::DMatrix;

use crate::error::{QevError, Result};
use crate::minkowski::MAX_DIM;

pub type Mat = [[f64; MAX_DIM]; MAX_DIM];
pub type Vec4 = [f64; MAX_DIM];

pub const ZERO: Mat = [[0.0; MAX_DIM]; MAX_DIM];

pub fn identity(d: usize) -> Mat {
    let mut m = ZERO;
    for (i, row) in m.iter_mut().enumerate().take(d) {
        row[i] = 1.0;
    }
    m
}

pub fn diag(v: &[f64]) -> Mat {
    let mut m = ZERO;
    for (i, x) in v.iter().enumerate() {
        m[i][i] = *x;
    }
    m
}

pub fn to_dmatrix(m: &Mat, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| m[i][j])
}

pub fn from_dmatrix(a: &DMatrix<f64>) -> Mat {
    let mut m = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            m[i][j] = a[(i, j)];
        }
    }
    m
}

#[inline]
pub fn mat_vec(m: &Mat, v: &[f64], d: usize) -> Vec4 {
    let mut out = [0.0; MAX_DIM];
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..d {
            s += m[i][j] * v[j];
        }
        out[i] = s;
    }
    out
}

#[inline]
pub fn quad_form(m: &Mat, v: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        let mut r = 0.0;
        for j in 0..d {
            r += m[i][j] * v[j];
        }
        s += v[i] * r;
    }
    s
}

pub fn mat_mul(a: &Mat, b: &Mat, d: usize) -> Mat {
    let mut out = ZERO;
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &Mat, d: usize) -> Mat {
    let mut out = ZERO;
    for i in 0..d {
        for j in 0..d {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn add(a: &Mat, b: &Mat, d: usize) -> Mat {
    let mut out = ZERO;
    for i in 0..d {
        for j in 0..d {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

pub fn symmetrize(a: &Mat, d: usize) -> Mat {
    let mut out = ZERO;
    for i in 0..d {
        for j in 0..d {
            out[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    out
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &Mat, d: usize) -> Result<Mat> {
    let c = nalgebra::Cholesky::new(to_dmatrix(m, d))
        .ok_or_else(|| QevError::InvalidParameter("matrix is not positive definite".into()))?;
    Ok(from_dmatrix(&c.l()))
}

/// Inverse and determinant of a symmetric positive definite matrix.
pub fn spd_inverse(m: &Mat, d: usize) -> Result<(Mat, f64)> {
    let c = nalgebra::Cholesky::new(to_dmatrix(m, d))
        .ok_or_else(|| QevError::InvalidParameter("matrix is not positive definite".into()))?;
    let det = c.determinant();
    let inv = symmetrize(&from_dmatrix(&c.inverse()), d);
    Ok((inv, det))
}

pub fn determinant(m: &Mat, d: usize) -> f64 {
    to_dmatrix(m, d).determinant()
}

pub fn max_abs(m: &Mat, d: usize) -> f64 {
    let mut s: f64 = 0.0;
    for row in m.iter().take(d) {
        for v in row.iter().take(d) {
            s = s.max(v.abs());
        }
    }
    s
}
