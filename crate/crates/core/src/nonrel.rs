//! Nonrelativistic and sharp-time limits.
//!
//! An independent Schrödinger solver on a periodic 1-d grid (split-step Fourier for scalar
//! potentials, Crank–Nicolson with Peierls-phase links when a vector potential is present) and the
//! comparison of its sharp-time probabilities against mass-shell probabilities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{invalid, QevError, Result};
use crate::mass_shell::{transition_probability, Propagator, ShellQuadrature};
use crate::minkowski::{shell_energy, FourVector};
use crate::packet::GaussianEventPacket;

/// Periodic 1-d grid x_j = origin + j·spacing, j = 0..n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub origin: f64,
    pub spacing: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub fn new(origin: f64, spacing: f64, n: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return invalid(format!("grid spacing must be positive, got {spacing}"));
        }
        if n < 4 {
            return Err(QevError::GridTooSmall { axis: 0, len: n, min: 4 });
        }
        if !origin.is_finite() {
            return invalid("grid origin must be finite");
        }
        Ok(SpatialGrid { origin, spacing, n })
    }

    /// Grid covering [lo, hi) with at most `max_spacing` between points and a power-of-two size.
    pub fn covering(lo: f64, hi: f64, max_spacing: f64) -> Result<Self> {
        if !(hi > lo) {
            return invalid("grid interval is empty");
        }
        let n = (((hi - lo) / max_spacing).ceil() as usize).max(16).next_power_of_two();
        Self::new(lo, (hi - lo) / n as f64, n)
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.origin + self.spacing * j as f64
    }

    pub fn length(&self) -> f64 {
        self.spacing * self.n as f64
    }

    /// Angular wavenumbers in FFT order.
    fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.length();
        (0..self.n).map(|j| if j <= self.n / 2 { j as f64 * dk } else { (j as f64 - self.n as f64) * dk }).collect()
    }
}

/// |Ψ_t⟩ on a spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeProjectedState {
    pub time: f64,
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

impl TimeProjectedState {
    pub fn from_fn<F: Fn(f64) -> Complex64>(time: f64, grid: SpatialGrid, f: F) -> Self {
        let values = (0..grid.n).map(|j| f(grid.x(j))).collect();
        TimeProjectedState { time, grid, values }
    }

    /// Gaussian with position width σ_x, momentum k0 and center x0.
    pub fn gaussian(time: f64, grid: SpatialGrid, x0: f64, k0: f64, sigma_x: f64) -> Self {
        Self::from_fn(time, grid, |x| {
            let y = x - x0;
            Complex64::from_polar((-y * y / (4.0 * sigma_x * sigma_x)).exp(), k0 * y)
        })
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.spacing * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &TimeProjectedState) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(QevError::GridMismatch("states live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.spacing)
    }

    pub fn mean_position(&self) -> f64 {
        let w: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (0..self.grid.n).map(|j| self.grid.x(j) * self.values[j].norm_sqr()).sum::<f64>() / w
    }

    pub fn position_variance(&self) -> f64 {
        let w: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let mean = self.mean_position();
        (0..self.grid.n).map(|j| (self.grid.x(j) - mean).powi(2) * self.values[j].norm_sqr()).sum::<f64>() / w
    }
}

/// Ψ_t(x) = ψ(t, x): the time slice of a 1+1 dimensional event packet.
pub fn time_project(psi: &GaussianEventPacket, t: f64, grid: SpatialGrid) -> Result<TimeProjectedState> {
    if psi.dim_space() != 1 {
        return invalid("time projection is implemented for d = 1");
    }
    Ok(TimeProjectedState::from_fn(t, grid, |x| psi.spacetime_value(&[t, x])))
}

/// The spatial state a packet reduces to when its time width shrinks to zero, stamped at its
/// time center: Ψ(x) ∝ e^{ik₀(x−X)} exp(−(x−X)²/K_xx).
pub fn sharp_time_state(psi: &GaussianEventPacket, grid: SpatialGrid) -> Result<TimeProjectedState> {
    if psi.dim_space() != 1 {
        return invalid("sharp-time states are implemented for d = 1");
    }
    let k = psi.precision()[1][1];
    let (x0, k0) = (psi.center_x()[1], psi.center_p()[1]);
    let pref = psi.amplitude() * (4.0 * PI / k).sqrt() / (2.0 * PI).sqrt();
    Ok(TimeProjectedState::from_fn(psi.center_x()[0], grid, |x| {
        let y = x - x0;
        pref * Complex64::from_polar((-y * y / k).exp(), k0 * y)
    }))
}

pub type Sampler = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    SplitStepFourier,
    CrankNicolson,
}

impl std::str::FromStr for Stepper {
    type Err = QevError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "split_step" | "split_step_fourier" => Ok(Stepper::SplitStepFourier),
            "crank_nicolson" => Ok(Stepper::CrankNicolson),
            other => invalid(format!("unknown stepper '{other}'")),
        }
    }
}

/// iΨ̇ = Ĥ(t)Ψ with Ĥ(t) = (p − A(t,x))²/(2m) + U(t,x) on a periodic grid (ħ = 1).
#[derive(Clone)]
pub struct SchrodingerOracle {
    pub grid: SpatialGrid,
    pub mass: f64,
    pub scalar_potential: Option<Sampler>,
    pub vector_potential: Option<Sampler>,
    pub stepper: Stepper,
    pub dt: f64,
}

impl fmt::Debug for SchrodingerOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchrodingerOracle")
            .field("grid", &self.grid)
            .field("mass", &self.mass)
            .field("scalar_potential", &self.scalar_potential.is_some())
            .field("vector_potential", &self.vector_potential.is_some())
            .field("stepper", &self.stepper)
            .field("dt", &self.dt)
            .finish()
    }
}

impl SchrodingerOracle {
    pub fn free(grid: SpatialGrid, mass: f64, dt: f64) -> Self {
        SchrodingerOracle {
            grid,
            mass,
            scalar_potential: None,
            vector_potential: None,
            stepper: Stepper::SplitStepFourier,
            dt,
        }
    }

    pub fn with_scalar_potential(mut self, u: Sampler) -> Self {
        self.scalar_potential = Some(u);
        self
    }

    pub fn with_vector_potential(mut self, a: Sampler) -> Self {
        self.vector_potential = Some(a);
        self.stepper = Stepper::CrankNicolson;
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return invalid("oracle mass must be positive");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return invalid("oracle time step must be positive");
        }
        if self.stepper == Stepper::SplitStepFourier && self.vector_potential.is_some() {
            return invalid("the split-step stepper supports scalar potentials only; use crank_nicolson");
        }
        Ok(())
    }

    fn u_at(&self, t: f64, x: f64) -> f64 {
        self.scalar_potential.as_ref().map_or(0.0, |u| u(t, x))
    }

    fn a_at(&self, t: f64, x: f64) -> f64 {
        self.vector_potential.as_ref().map_or(0.0, |a| a(t, x))
    }

    /// Û(t₁, t₀)Ψ with t₀ = Ψ.time.
    pub fn evolve(&self, psi: &TimeProjectedState, t1: f64) -> Result<TimeProjectedState> {
        self.validate()?;
        if psi.grid != self.grid {
            return Err(QevError::GridMismatch("state and oracle grids differ".into()));
        }
        let t0 = psi.time;
        if !(t1 >= t0) {
            return invalid(format!("evolution runs forward only: t1 = {t1} < t0 = {t0}"));
        }
        let mut out = psi.clone();
        out.time = t1;
        if t1 == t0 {
            return Ok(out);
        }
        let steps = ((t1 - t0) / self.dt).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / steps as f64;
        match self.stepper {
            Stepper::SplitStepFourier => self.split_step(&mut out.values, t0, dt, steps)?,
            Stepper::CrankNicolson => self.crank_nicolson(&mut out.values, t0, dt, steps)?,
        }
        Ok(out)
    }

    fn split_step(&self, psi: &mut [Complex64], t0: f64, dt: f64, steps: usize) -> Result<()> {
        let n = self.grid.n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let kinetic: Vec<Complex64> = self
            .grid
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(1.0 / n as f64, -k * k * dt / (2.0 * self.mass)))
            .collect();
        let mut half_kick = vec![Complex64::new(1.0, 0.0); n];
        for s in 0..steps {
            let tm = t0 + (s as f64 + 0.5) * dt;
            if self.scalar_potential.is_some() {
                for (j, hk) in half_kick.iter_mut().enumerate() {
                    let u = self.u_at(tm, self.grid.x(j));
                    if !(u.abs() * dt <= PI) {
                        return Err(QevError::StabilityViolation(format!(
                            "|U| dt = {:e} exceeds π at x = {}; reduce dt",
                            u.abs() * dt,
                            self.grid.x(j)
                        )));
                    }
                    *hk = Complex64::from_polar(1.0, -0.5 * u * dt);
                }
                psi.iter_mut().zip(&half_kick).for_each(|(v, h)| *v *= h);
            }
            fwd.process(psi);
            psi.iter_mut().zip(&kinetic).for_each(|(v, k)| *v *= k);
            inv.process(psi);
            if self.scalar_potential.is_some() {
                psi.iter_mut().zip(&half_kick).for_each(|(v, h)| *v *= h);
            }
        }
        Ok(())
    }

    /// Tridiagonal coefficients of Ĥ(t) with Peierls links e^{∓ihA(x_{j±½})}.
    fn hamiltonian_bands(&self, t: f64) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let n = self.grid.n;
        let h = self.grid.spacing;
        let kin = 1.0 / (2.0 * self.mass * h * h);
        let mut lower = vec![Complex64::new(0.0, 0.0); n];
        let mut diag = vec![Complex64::new(0.0, 0.0); n];
        let mut upper = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let x = self.grid.x(j);
            let a_plus = self.a_at(t, x + 0.5 * h);
            let a_minus = self.a_at(t, x - 0.5 * h);
            diag[j] = Complex64::new(2.0 * kin + self.u_at(t, x), 0.0);
            upper[j] = -kin * Complex64::from_polar(1.0, -h * a_plus);
            lower[j] = -kin * Complex64::from_polar(1.0, h * a_minus);
        }
        (lower, diag, upper)
    }

    fn apply_bands(bands: &(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>), psi: &[Complex64]) -> Vec<Complex64> {
        let n = psi.len();
        let (lo, d, up) = bands;
        (0..n).map(|j| lo[j] * psi[(j + n - 1) % n] + d[j] * psi[j] + up[j] * psi[(j + 1) % n]).collect()
    }

    fn crank_nicolson(&self, psi: &mut [Complex64], t0: f64, dt: f64, steps: usize) -> Result<()> {
        let half = Complex64::new(0.0, 0.5 * dt);
        for s in 0..steps {
            let tm = t0 + (s as f64 + 0.5) * dt;
            let bands = self.hamiltonian_bands(tm);
            let hpsi = Self::apply_bands(&bands, psi);
            let rhs: Vec<Complex64> = psi.iter().zip(&hpsi).map(|(p, h)| p - half * h).collect();
            let (lo, d, up) = &bands;
            let a: Vec<Complex64> = lo.iter().map(|v| half * v).collect();
            let b: Vec<Complex64> = d.iter().map(|v| Complex64::new(1.0, 0.0) + half * v).collect();
            let c: Vec<Complex64> = up.iter().map(|v| half * v).collect();
            let next = solve_cyclic(&a, &b, &c, &rhs);
            psi.copy_from_slice(&next);
        }
        Ok(())
    }

    /// Ĥ(t)Ψ at the state's own time, spectral kinetic term for split-step, link operator otherwise.
    pub fn apply_hamiltonian(&self, psi: &TimeProjectedState) -> Result<TimeProjectedState> {
        self.validate()?;
        let t = psi.time;
        let values = match self.stepper {
            Stepper::CrankNicolson => Self::apply_bands(&self.hamiltonian_bands(t), &psi.values),
            Stepper::SplitStepFourier => {
                let n = self.grid.n;
                let mut planner = FftPlanner::new();
                let mut buf = psi.values.clone();
                planner.plan_fft_forward(n).process(&mut buf);
                for (v, k) in buf.iter_mut().zip(self.grid.wavenumbers()) {
                    *v *= k * k / (2.0 * self.mass * n as f64);
                }
                planner.plan_fft_inverse(n).process(&mut buf);
                buf.iter().enumerate().map(|(j, v)| v + self.u_at(t, self.grid.x(j)) * psi.values[j]).collect()
            }
        };
        Ok(TimeProjectedState { time: t, grid: psi.grid, values })
    }
}

/// Thomas algorithm for a_j x_{j−1} + b_j x_j + c_j x_{j+1} = r_j (a_0 and c_{n−1} ignored).
fn solve_tridiagonal(a: &[Complex64], b: &[Complex64], c: &[Complex64], r: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut cp = vec![Complex64::new(0.0, 0.0); n];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut denom = b[0];
    cp[0] = c[0] / denom;
    x[0] = r[0] / denom;
    for j in 1..n {
        denom = b[j] - a[j] * cp[j - 1];
        cp[j] = c[j] / denom;
        x[j] = (r[j] - a[j] * x[j - 1]) / denom;
    }
    for j in (0..n - 1).rev() {
        let next = x[j + 1];
        x[j] -= cp[j] * next;
    }
    x
}

/// Periodic tridiagonal solve (corners a_0 and c_{n−1}) by Sherman–Morrison.
fn solve_cyclic(a: &[Complex64], b: &[Complex64], c: &[Complex64], r: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(a, &bb, c, r);
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(a, &bb, c, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (Complex64::new(1.0, 0.0) + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// κ = ħ/(4πm), the constant tying mass-shell amplitudes to Schrödinger matrix elements.
pub fn kappa(mass: f64) -> f64 {
    1.0 / (4.0 * PI * mass)
}

/// κ ⟨Φ|Û(t₁, t₀)|Ψ⟩ with t₀ = Ψ.time and t₁ = Φ.time.
pub fn nonrel_amplitude(
    phi: &TimeProjectedState,
    psi: &TimeProjectedState,
    oracle: &SchrodingerOracle,
) -> Result<Complex64> {
    let evolved = oracle.evolve(psi, phi.time)?;
    Ok(phi.inner(&evolved)? * kappa(oracle.mass))
}

/// |⟨Φ|Û(t₁, t₀)|Ψ⟩|² / (‖Φ‖²‖Ψ‖²).
pub fn sharp_time_probability(
    phi: &TimeProjectedState,
    psi: &TimeProjectedState,
    oracle: &SchrodingerOracle,
) -> Result<f64> {
    let (np, ns) = (phi.norm_sq(), psi.norm_sq());
    if np == 0.0 || ns == 0.0 {
        return Err(QevError::ZeroNorm);
    }
    let evolved = oracle.evolve(psi, phi.time)?;
    Ok(phi.inner(&evolved)?.norm_sqr() / (np * ns))
}

/// Time slices of an event wavefunction on a (t, x) lattice; Ĥ acts slice by slice.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSlices {
    pub times: Vec<f64>,
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

impl EventSlices {
    pub fn sample(psi: &GaussianEventPacket, times: &[f64], grid: SpatialGrid) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len() * grid.n);
        for &t in times {
            values.extend(time_project(psi, t, grid)?.values);
        }
        Ok(EventSlices { times: times.to_vec(), grid, values })
    }

    pub fn slice(&self, i: usize) -> TimeProjectedState {
        let n = self.grid.n;
        TimeProjectedState { time: self.times[i], grid: self.grid, values: self.values[i * n..(i + 1) * n].to_vec() }
    }

    /// Ĥ = ∫dt |t⟩⟨t| ⊗ Ĥ(t).
    pub fn apply_hamiltonian(&self, oracle: &SchrodingerOracle) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.times.len() {
            values.extend(oracle.apply_hamiltonian(&self.slice(i))?.values);
        }
        Ok(EventSlices { times: self.times.clone(), grid: self.grid, values })
    }

    /// ∫dt ⟨Ψ_t|Ψ_t⟩ by the trapezoid rule over the stored times.
    pub fn integrated_norm(&self) -> f64 {
        let norms: Vec<f64> = (0..self.times.len()).map(|i| self.slice(i).norm_sq()).collect();
        (1..norms.len()).map(|i| 0.5 * (norms[i] + norms[i - 1]) * (self.times[i] - self.times[i - 1])).sum()
    }
}

/// Free d = 1 scenario comparing mass-shell and sharp-time probabilities, in units m = 1.
///
/// For each (v, Δt): ψ sits at the origin with momentum v·m on the upper shell, momentum width
/// σ = width_fraction·v·m and energy width 1/(2Δt); φ is the same packet placed at time
/// T = transit·m/σ² and position vT + offset_widths·Δx.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitStudy {
    pub mass: f64,
    pub width_fraction: f64,
    pub transit: f64,
    pub offset_widths: f64,
    pub velocities: Vec<f64>,
    pub time_widths: Vec<f64>,
    pub quadrature: ShellQuadrature,
}

impl Default for LimitStudy {
    fn default() -> Self {
        LimitStudy {
            mass: 1.0,
            width_fraction: 0.5,
            transit: 0.5,
            offset_widths: 0.5,
            velocities: vec![0.2, 0.1, 0.05, 0.025, 0.01],
            time_widths: vec![20.0, 10.0, 5.0],
            quadrature: ShellQuadrature::default_for(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitStudyRow {
    pub v: f64,
    pub dt_width: f64,
    pub p_relativistic: f64,
    pub p_nonrel: f64,
    pub rel_error: f64,
}

impl LimitStudy {
    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return invalid("study mass must be positive");
        }
        for (name, v) in [("width_fraction", self.width_fraction), ("transit", self.transit)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive"));
            }
        }
        if !self.offset_widths.is_finite() {
            return invalid("offset_widths must be finite");
        }
        if self.velocities.is_empty() || self.time_widths.is_empty() {
            return invalid("velocity and time-width sequences must be non-empty");
        }
        for v in &self.velocities {
            if !(*v > 0.0 && *v < 1.0) {
                return invalid(format!("velocity {v} outside (0, 1)"));
            }
        }
        for dt in &self.time_widths {
            if !(*dt > 0.0 && dt.is_finite()) {
                return invalid(format!(
                    "time width {dt} rejected: a sharp time is not a normalizable event (need 0 < dt < inf)"
                ));
            }
        }
        Ok(())
    }

    /// The event pair (φ, ψ) for one study cell.
    pub fn packets(&self, v: f64, dt_width: f64) -> Result<(GaussianEventPacket, GaussianEventPacket)> {
        let m = self.mass;
        let sigma_k = self.width_fraction * v * m;
        let sigma_e = 1.0 / (2.0 * dt_width);
        let k0 = v * m;
        let e0 = shell_energy(&[k0], m);
        let t = self.transit * m / (sigma_k * sigma_k);
        let dx = 1.0 / (2.0 * sigma_k);
        let widths = [sigma_e, sigma_k];
        let p = FourVector::natural(&[e0, k0])?;
        let one = Complex64::new(1.0, 0.0);
        let psi = GaussianEventPacket::new(FourVector::natural(&[0.0, 0.0])?, p, &widths, one)?;
        let phi = GaussianEventPacket::new(
            FourVector::natural(&[t, k0 / m * t + self.offset_widths * dx])?,
            p,
            &widths,
            one,
        )?;
        Ok((phi, psi))
    }

    pub fn run_cell(&self, v: f64, dt_width: f64) -> Result<LimitStudyRow> {
        let (phi, psi) = self.packets(v, dt_width)?;
        let g = Propagator::free(2, self.mass)?;
        let p_rel = transition_probability(&phi, &psi, &g, &self.quadrature)?;

        let sigma_k = psi.widths_p()[1];
        let dx0 = 1.0 / (2.0 * sigma_k);
        let t = phi.center_x()[0];
        let dx_t = dx0 * (1.0 + (t / (2.0 * self.mass * dx0 * dx0)).powi(2)).sqrt();
        let pad = 14.0 * dx_t.max(dx0);
        let (x_lo, x_hi) = (psi.center_x()[1].min(phi.center_x()[1]), psi.center_x()[1].max(phi.center_x()[1]));
        let k_max = psi.center_p()[1].abs() + 12.0 * sigma_k;
        let grid = SpatialGrid::covering(x_lo - pad, x_hi + pad, PI / (1.5 * k_max))?;
        let oracle = SchrodingerOracle::free(grid, self.mass, t / 16.0);
        let psi_state = sharp_time_state(&psi, grid)?;
        let phi_state = sharp_time_state(&phi, grid)?;
        let p_nonrel = sharp_time_probability(&phi_state, &psi_state, &oracle)?;
        Ok(LimitStudyRow {
            v,
            dt_width,
            p_relativistic: p_rel,
            p_nonrel,
            rel_error: (p_rel - p_nonrel).abs() / p_nonrel,
        })
    }

    /// All (v, Δt) cells, v-major in the given order. Cells run in parallel.
    pub fn run(&self) -> Result<Vec<LimitStudyRow>> {
        self.validate()?;
        let cells: Vec<(f64, f64)> =
            self.velocities.iter().flat_map(|v| self.time_widths.iter().map(move |dt| (*v, *dt))).collect();
        cells.par_iter().map(|(v, dt)| self.run_cell(*v, *dt)).collect()
    }
}

/// Observed orders log(e_i/e_{i+1}) / log(v_i/v_{i+1}) along v at the given time width.
pub fn observed_orders(rows: &[LimitStudyRow], dt_width: f64) -> Vec<f64> {
    let series: Vec<&LimitStudyRow> = rows.iter().filter(|r| r.dt_width == dt_width).collect();
    series.windows(2).map(|w| (w[0].rel_error / w[1].rel_error).ln() / (w[0].v / w[1].v).ln()).collect()
}
