//! Discrete electromagnetic fields on uniform spacetime grids.
//!
//! Conventions: F^{αβ} = ∂^αA^β − ∂^βA^α with ∂^α = g^{αα}∂_α, E^i = F^{i0}, B = ∇×A
//! (B^i = −½ε_ijk F^{jk}), J^α = ∂_βF^{βα}. Derivatives are second-order central differences, so
//! every stencil application invalidates one more boundary layer; invalid samples hold NaN.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_dim, invalid, QevError, Result};
use crate::minkowski::{eta, FourVector, MAX_DIM};

pub const GRID_MAGIC: &[u8; 8] = b"QEVGRID1";
pub const MIN_AXIS_POINTS: usize = 4;

/// Scalar types storable in a grid file.
pub trait GridScalar: Copy + Send + Sync + PartialEq + std::fmt::Debug + 'static {
    const TAG: u8;
    const BYTES: usize;
    fn zero() -> Self;
    fn invalid() -> Self;
    fn write_le(&self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
    fn csv_headers(name: &str) -> Vec<String>;
    fn csv_cells(&self) -> Vec<String>;
    fn magnitude(&self) -> f64;
}

impl GridScalar for f64 {
    const TAG: u8 = 0;
    const BYTES: usize = 8;
    fn zero() -> Self {
        0.0
    }
    fn invalid() -> Self {
        f64::NAN
    }
    fn write_le(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
    fn csv_headers(name: &str) -> Vec<String> {
        vec![name.to_string()]
    }
    fn csv_cells(&self) -> Vec<String> {
        vec![format!("{self:?}")]
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl GridScalar for Complex64 {
    const TAG: u8 = 1;
    const BYTES: usize = 16;
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn invalid() -> Self {
        Complex64::new(f64::NAN, f64::NAN)
    }
    fn write_le(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        Complex64::new(f64::read_le(&bytes[..8]), f64::read_le(&bytes[8..16]))
    }
    fn csv_headers(name: &str) -> Vec<String> {
        vec![format!("{name}_re"), format!("{name}_im")]
    }
    fn csv_cells(&self) -> Vec<String> {
        vec![format!("{:?}", self.re), format!("{:?}", self.im)]
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Uniform lattice with axis order (t, x, y, z), row-major, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    origin: FourVector,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl GridGeometry {
    pub fn new(origin: FourVector, spacing: &[f64], shape: &[usize]) -> Result<Self> {
        let d = origin.dim();
        ensure_dim(d, spacing.len())?;
        ensure_dim(d, shape.len())?;
        for (axis, h) in spacing.iter().enumerate() {
            if !(h.is_finite() && *h > 0.0) {
                return invalid(format!("grid spacing along axis {axis} must be positive, got {h}"));
            }
        }
        for (axis, n) in shape.iter().enumerate() {
            if *n < MIN_AXIS_POINTS {
                return Err(QevError::GridTooSmall { axis, len: *n, min: MIN_AXIS_POINTS });
            }
        }
        let mut strides = vec![1; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(GridGeometry { origin, spacing: spacing.to_vec(), shape: shape.to_vec(), strides })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }
    pub fn origin(&self) -> &FourVector {
        &self.origin
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, point: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut r = point;
        for a in 0..self.dim() {
            idx[a] = r / self.strides[a];
            r %= self.strides[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        (0..self.dim()).map(|a| idx[a] * self.strides[a]).sum()
    }

    pub fn coordinates(&self, point: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(point);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            x[a] = self.origin[a] + self.spacing[a] * idx[a] as f64;
        }
        x
    }

    /// True when the point is at least `margin` cells away from every face.
    pub fn is_interior(&self, point: usize, margin: usize) -> bool {
        let idx = self.multi_index(point);
        (0..self.dim()).all(|a| idx[a] >= margin && idx[a] + margin < self.shape[a])
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn same_as(&self, other: &GridGeometry) -> Result<()> {
        if self != other {
            return Err(QevError::GridMismatch("grids differ in origin, spacing or shape".into()));
        }
        Ok(())
    }
}

/// Multi-component field on a grid. `margin` counts the invalid boundary layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T: GridScalar> {
    geometry: GridGeometry,
    components: usize,
    margin: usize,
    values: Vec<T>,
}

impl<T: GridScalar> GridField<T> {
    pub fn zeros(geometry: GridGeometry, components: usize) -> Self {
        let n = geometry.len() * components;
        GridField { geometry, components, margin: 0, values: vec![T::zero(); n] }
    }

    /// Samples `f(x, out)` at every grid point; `out` has `components` entries.
    pub fn from_fn<F>(geometry: GridGeometry, components: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [T]) + Sync,
    {
        let mut field = Self::zeros(geometry, components);
        if components == 0 {
            return field;
        }
        let geom = &field.geometry;
        let d = geom.dim();
        field.values.par_chunks_mut(components).enumerate().for_each(|(point, out)| {
            let x = geom.coordinates(point);
            f(&x[..d], out);
        });
        field
    }

    pub fn from_values(geometry: GridGeometry, components: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != geometry.len() * components {
            return Err(QevError::GridMismatch(format!(
                "expected {} values, got {}",
                geometry.len() * components,
                values.len()
            )));
        }
        Ok(GridField { geometry, components, margin: 0, values })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }
    pub fn components(&self) -> usize {
        self.components
    }
    pub fn margin(&self) -> usize {
        self.margin
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, point: usize, comp: usize) -> T {
        self.values[point * self.components + comp]
    }

    /// Largest magnitude over valid points.
    pub fn max_abs(&self) -> f64 {
        let m = self.margin;
        (0..self.geometry.len())
            .into_par_iter()
            .filter(|p| self.geometry.is_interior(*p, m))
            .map(|p| (0..self.components).map(|c| self.get(p, c).magnitude()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&self.to_bytes())?;
        out.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.geometry.dim();
        let mut buf = Vec::with_capacity(64 + self.values.len() * T::BYTES);
        buf.extend_from_slice(GRID_MAGIC);
        buf.extend_from_slice(&(d as u32).to_le_bytes());
        buf.extend_from_slice(&(self.components as u32).to_le_bytes());
        buf.push(T::TAG);
        buf.extend_from_slice(&[0u8; 7]);
        for n in &self.geometry.shape {
            buf.extend_from_slice(&(*n as u64).to_le_bytes());
        }
        for h in &self.geometry.spacing {
            buf.extend_from_slice(&h.to_le_bytes());
        }
        for a in 0..d {
            buf.extend_from_slice(&self.geometry.origin[a].to_le_bytes());
        }
        for v in &self.values {
            v.write_le(&mut buf);
        }
        buf
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |m: &str| QevError::Format(m.to_string());
        if bytes.len() < 24 || &bytes[..8] != GRID_MAGIC {
            return Err(fail("missing QEVGRID1 header"));
        }
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let components = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let tag = bytes[16];
        if tag != T::TAG {
            return Err(fail(&format!("scalar type tag {tag} does not match the requested type")));
        }
        if !(2..=MAX_DIM).contains(&d) {
            return Err(fail("unsupported dimension"));
        }
        let header = 24 + d * 24;
        if bytes.len() < header {
            return Err(fail("truncated header"));
        }
        let word = |i: usize| -> [u8; 8] { bytes[24 + 8 * i..32 + 8 * i].try_into().unwrap() };
        let shape: Vec<usize> = (0..d).map(|a| u64::from_le_bytes(word(a)) as usize).collect();
        let spacing: Vec<f64> = (0..d).map(|a| f64::from_le_bytes(word(d + a))).collect();
        let origin: Vec<f64> = (0..d).map(|a| f64::from_le_bytes(word(2 * d + a))).collect();
        let geometry = GridGeometry::new(FourVector::natural(&origin)?, &spacing, &shape)?;
        let count = geometry.len() * components;
        if bytes.len() != header + count * T::BYTES {
            return Err(fail("payload length does not match the header"));
        }
        let values = bytes[header..].chunks_exact(T::BYTES).map(T::read_le).collect();
        Self::from_values(geometry, components, values)
    }

    /// One row per grid point: coordinates then components.
    pub fn write_csv(&self, path: &Path, names: &[&str]) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| QevError::Io(e.to_string()))?;
        let axes = ["t", "x", "y", "z"];
        let mut header: Vec<String> = axes[..self.geometry.dim()].iter().map(|s| s.to_string()).collect();
        for c in 0..self.components {
            let name = names.get(c).map(|s| s.to_string()).unwrap_or_else(|| format!("c{c}"));
            header.extend(T::csv_headers(&name));
        }
        w.write_record(&header).map_err(|e| QevError::Io(e.to_string()))?;
        for p in 0..self.geometry.len() {
            let x = self.geometry.coordinates(p);
            let mut row: Vec<String> = x[..self.geometry.dim()].iter().map(|v| format!("{v:?}")).collect();
            for c in 0..self.components {
                row.extend(self.get(p, c).csv_cells());
            }
            w.write_record(&row).map_err(|e| QevError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

impl GridField<f64> {
    /// Central difference ∂_axis of one component at a point (caller guarantees interior).
    #[inline]
    fn partial(&self, comp: usize, axis: usize, point: usize) -> f64 {
        let s = self.geometry.strides[axis] * self.components;
        let i = point * self.components + comp;
        (self.values[i + s] - self.values[i - s]) / (2.0 * self.geometry.spacing[axis])
    }

    /// Apply a per-point stencil writing `components` outputs, with one more invalid layer.
    fn stencil<F>(&self, components: usize, f: F) -> GridField<f64>
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let margin = self.margin + 1;
        let mut out = GridField::zeros(self.geometry.clone(), components);
        out.margin = margin;
        if components == 0 {
            return out;
        }
        let geom = &self.geometry;
        out.values.par_chunks_mut(components).enumerate().for_each(|(p, o)| {
            if geom.is_interior(p, margin) {
                f(p, o);
            } else {
                o.fill(f64::NAN);
            }
        });
        out
    }
}

/// Ordered pairs (α, β) with α < β, the storage order of antisymmetric tensors.
pub fn antisymmetric_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            v.push((a, b));
        }
    }
    v
}

fn pair_slot(dim: usize, a: usize, b: usize) -> usize {
    antisymmetric_pairs(dim).iter().position(|&p| p == (a, b)).expect("a < b")
}

/// Antisymmetric tensor F^{αβ}; only α < β is stored so antisymmetry is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTensorGrid {
    base: GridField<f64>,
    slots: [[Option<(usize, f64)>; MAX_DIM]; MAX_DIM],
}

impl FieldTensorGrid {
    pub fn from_components(base: GridField<f64>) -> Result<Self> {
        let d = base.geometry.dim();
        if base.components != d * (d - 1) / 2 {
            return Err(QevError::GridMismatch(format!(
                "a field tensor in {d} dimensions has {} components, got {}",
                d * (d - 1) / 2,
                base.components
            )));
        }
        let mut slots = [[None; MAX_DIM]; MAX_DIM];
        for (s, (a, b)) in antisymmetric_pairs(d).into_iter().enumerate() {
            slots[a][b] = Some((s, 1.0));
            slots[b][a] = Some((s, -1.0));
        }
        Ok(FieldTensorGrid { base, slots })
    }

    pub fn base(&self) -> &GridField<f64> {
        &self.base
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.base.geometry
    }

    /// F^{αβ} at a point (zero on the diagonal).
    #[inline]
    pub fn get(&self, point: usize, a: usize, b: usize) -> f64 {
        match self.slots[a][b] {
            Some((s, sign)) => sign * self.base.get(point, s),
            None => 0.0,
        }
    }

    #[inline]
    fn partial(&self, a: usize, b: usize, axis: usize, point: usize) -> f64 {
        match self.slots[a][b] {
            Some((s, sign)) => sign * self.base.partial(s, axis, point),
            None => 0.0,
        }
    }

    /// Largest |F| over valid points.
    pub fn max_abs(&self) -> f64 {
        self.base.max_abs()
    }
}

fn require_vector_field(a: &GridField<f64>) -> Result<usize> {
    let d = a.geometry.dim();
    if a.components != d {
        return Err(QevError::GridMismatch(format!(
            "a four-potential on a {d}-dimensional grid needs {d} components, got {}",
            a.components
        )));
    }
    Ok(d)
}

pub fn field_tensor(a: &GridField<f64>) -> Result<FieldTensorGrid> {
    let d = require_vector_field(a)?;
    let pairs = antisymmetric_pairs(d);
    let base = a.stencil(pairs.len(), |p, out| {
        for (s, &(al, be)) in pairs.iter().enumerate() {
            out[s] = eta(al) * a.partial(be, al, p) - eta(be) * a.partial(al, be, p);
        }
    });
    FieldTensorGrid::from_components(base)
}

/// Cyclic sum ∂^γF^{αβ} + ∂^αF^{βγ} + ∂^βF^{γα} at one interior point.
pub fn cyclic_sum_at(f: &FieldTensorGrid, point: usize, (a, b, c): (usize, usize, usize)) -> f64 {
    eta(c) * f.partial(a, b, c, point) + eta(a) * f.partial(b, c, a, point) + eta(b) * f.partial(c, a, b, point)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Largest absolute residual over valid points.
    pub residual: f64,
    /// Reference magnitude: max|F| / min h for first derivatives, / min h² for second.
    pub scale: f64,
}

impl ResidualReport {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

pub fn homogeneous_maxwell_residual(f: &FieldTensorGrid) -> ResidualReport {
    let geom = f.geometry();
    let d = geom.dim();
    let mut triples = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            for c in b + 1..d {
                triples.push((a, b, c));
            }
        }
    }
    let margin = f.base.margin + 1;
    let residual = (0..geom.len())
        .into_par_iter()
        .filter(|p| geom.is_interior(*p, margin))
        .map(|p| triples.iter().map(|t| cyclic_sum_at(f, p, *t).abs()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    ResidualReport { residual, scale: f.max_abs() / geom.min_spacing() }
}

/// J^α = ∂_βF^{βα} and the largest |∂_αJ^α| over valid points.
pub fn current_and_continuity(f: &FieldTensorGrid) -> (GridField<f64>, ResidualReport) {
    let d = f.geometry().dim();
    let j = f.base.stencil(d, |p, out| {
        for (al, o) in out.iter_mut().enumerate() {
            *o = (0..d).map(|be| f.partial(be, al, be, p)).sum();
        }
    });
    let div = j.stencil(1, |p, out| {
        out[0] = (0..d).map(|al| j.partial(al, al, p)).sum();
    });
    let h = f.geometry().min_spacing();
    let report = ResidualReport { residual: div.max_abs(), scale: f.max_abs() / (h * h) };
    (j, report)
}

/// E^i = F^{i0}; B has 3 components for d = 3, one (B³) for d = 2, none for d = 1.
pub fn extract_eb(f: &FieldTensorGrid) -> (GridField<f64>, GridField<f64>) {
    let geom = f.geometry().clone();
    let d = geom.dim();
    let ds = d - 1;
    let margin = f.base.margin;
    let mut e = GridField::<f64>::from_fn(geom.clone(), ds, |_, _| {});
    let nb = match ds {
        3 => 3,
        2 => 1,
        _ => 0,
    };
    let mut b = GridField::<f64>::from_fn(geom, nb, |_, _| {});
    for p in 0..f.geometry().len() {
        for i in 0..ds {
            e.values[p * ds + i] = f.get(p, i + 1, 0);
        }
        match ds {
            3 => {
                b.values[p * 3] = -f.get(p, 2, 3);
                b.values[p * 3 + 1] = -f.get(p, 3, 1);
                b.values[p * 3 + 2] = -f.get(p, 1, 2);
            }
            2 => b.values[p] = -f.get(p, 1, 2),
            _ => {}
        }
    }
    e.margin = margin;
    b.margin = margin;
    (e, b)
}

/// Inverse of [`extract_eb`].
pub fn rebuild_field_tensor(e: &GridField<f64>, b: &GridField<f64>) -> Result<FieldTensorGrid> {
    e.geometry.same_as(&b.geometry)?;
    let d = e.geometry.dim();
    let ds = d - 1;
    let nb = match ds {
        3 => 3,
        2 => 1,
        _ => 0,
    };
    if e.components != ds || b.components != nb {
        return Err(QevError::GridMismatch("unexpected E/B component counts".into()));
    }
    let pairs = antisymmetric_pairs(d);
    let mut base = GridField::zeros(e.geometry.clone(), pairs.len());
    base.margin = e.margin.max(b.margin);
    for p in 0..e.geometry.len() {
        let out = &mut base.values[p * pairs.len()..(p + 1) * pairs.len()];
        for i in 0..ds {
            // F^{0i} = −F^{i0} = −E^i
            out[pair_slot(d, 0, i + 1)] = -e.get(p, i);
        }
        match ds {
            3 => {
                out[pair_slot(d, 2, 3)] = -b.get(p, 0);
                out[pair_slot(d, 1, 3)] = b.get(p, 1);
                out[pair_slot(d, 1, 2)] = -b.get(p, 2);
            }
            2 => out[pair_slot(d, 1, 2)] = -b.get(p, 0),
            _ => {}
        }
    }
    FieldTensorGrid::from_components(base)
}

/// A'^μ = A^μ − ∂^μχ with central differences of the sampled gauge function.
pub fn gauge_transform(a: &GridField<f64>, chi: &GridField<f64>) -> Result<GridField<f64>> {
    let d = require_vector_field(a)?;
    a.geometry.same_as(&chi.geometry)?;
    if chi.components != 1 {
        return Err(QevError::GridMismatch("gauge function must be a scalar field".into()));
    }
    let mut out = chi.stencil(d, |p, o| {
        for (mu, v) in o.iter_mut().enumerate() {
            *v = a.get(p, mu) - eta(mu) * chi.partial(0, mu, p);
        }
    });
    if a.margin > out.margin {
        out.margin = a.margin;
    }
    Ok(out)
}

/// A'^μ = A^μ − ∂^μχ with the covariant gradient ∂_μχ supplied in closed form.
pub fn gauge_transform_analytic<G>(a: &GridField<f64>, grad_chi: G) -> Result<GridField<f64>>
where
    G: Fn(&[f64]) -> [f64; MAX_DIM] + Sync,
{
    let d = require_vector_field(a)?;
    let geom = &a.geometry;
    let mut out = GridField::zeros(geom.clone(), d);
    out.margin = a.margin;
    out.values.par_chunks_mut(d).enumerate().for_each(|(p, o)| {
        let x = geom.coordinates(p);
        let g = grad_chi(&x[..d]);
        for mu in 0..d {
            o[mu] = a.get(p, mu) - eta(mu) * g[mu];
        }
    });
    Ok(out)
}

/// Largest |F₁ − F₂| over points valid in both.
pub fn field_tensor_difference(f1: &FieldTensorGrid, f2: &FieldTensorGrid) -> Result<f64> {
    f1.geometry().same_as(f2.geometry())?;
    let margin = f1.base.margin.max(f2.base.margin);
    let geom = f1.geometry();
    let n = f1.base.components;
    Ok((0..geom.len())
        .into_par_iter()
        .filter(|p| geom.is_interior(*p, margin))
        .map(|p| (0..n).map(|c| (f1.base.get(p, c) - f2.base.get(p, c)).abs()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max))
}
