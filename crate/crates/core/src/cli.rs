//! The `qevent` command-line front end.
//!
//! Every command reads an INI config, writes a `manifest.ini` (the resolved config plus a
//! [manifest] section, itself a valid config for the same command) and its result files into the
//! output directory, and prints `key=value` lines with round-trip float formatting.
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, VectorKind};
use crate::em_field::{current_and_continuity, field_tensor, homogeneous_maxwell_residual, GridField, GridGeometry};
use crate::error::QevError;
use crate::histories::{
    flip_consistency, frequency_consistency_check, pair_transition_frequency, CandidateLattice, HistorySampler,
    HistoryStep, SelectionMode,
};
use crate::mass_shell::{
    evaluate_orbit, transition_amplitude, transition_amplitude_detailed, transition_probability_report,
};
use crate::minkowski::{minkowski_dot, FourVector};
use crate::nonrel::{observed_orders, LimitStudy};
use crate::poincare::{generator_check, invariance_report, Generator, PoincareElement, DEFAULT_RAPIDITY_CAP};
use crate::units::{Role, Units};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qevent", version, about = "Quantum event transition amplitudes and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// INI configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for results and the manifest.
    #[arg(long, global = true, default_value = "qevent-out")]
    pub out: PathBuf,
    /// Overrides the [run] seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Unit mode of the config values.
    #[arg(long, global = true)]
    pub units: Option<Units>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Transition amplitude between [phi] and [psi].
    Amplitude,
    /// Normalized transition probability.
    Probability,
    /// P from [psi] to targets on a grid of event centres.
    Orbit,
    /// Invariance of P under a Poincaré transformation.
    PoincareCheck,
    /// P before and after a constant gauge shift.
    GaugeCheck,
    /// Discrete Maxwell identities on a periodic lattice.
    MaxwellCheck,
    /// Relativistic P against the Schrödinger oracle as velocity drops.
    LimitStudy,
    /// Seeded event histories on a candidate lattice.
    History,
    /// Empirical candidate frequencies against normalized probabilities.
    FrequencyCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Amplitude => "amplitude",
            Command::Probability => "probability",
            Command::Orbit => "orbit",
            Command::PoincareCheck => "poincare-check",
            Command::GaugeCheck => "gauge-check",
            Command::MaxwellCheck => "maxwell-check",
            Command::LimitStudy => "limit-study",
            Command::History => "history",
            Command::FrequencyCheck => "frequency-check",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(QevError),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<QevError> for CliError {
    fn from(e: QevError) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numerical(QevError::Io(e.to_string()))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(CliError::Numerical(e)) => {
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
    }
}

/// Loads and resolves the config, writes the manifest and runs the command.
pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> CliResult<()> {
    let name = cli.command.name();
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::parse("")?,
    };
    cfg.validate_schema(name)?;
    if let Some(cmd) = cfg.raw("manifest", "command") {
        if cmd != name {
            return Err(CliError::Config(format!("manifest was written by '{cmd}', not '{name}'")));
        }
    }
    if let Some(units) = cli.units {
        cfg.units = units;
    }
    if let Some(seed) = cli.seed {
        cfg.set("run", "seed", seed.to_string());
    }
    let seed = cfg.seed()?;
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => cfg.parse_value::<usize>("run", "threads")?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // The global pool can only be built once per process; later calls keep the first size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        cfg.set("run", "threads", t.to_string());
    }
    cfg.set("run", "seed", seed.to_string());
    cfg.set("run", "units", cfg.units.to_string());

    let plan = Plan::build(cli.command, &cfg)?;

    fs::create_dir_all(&cli.out)?;
    let mut manifest = cfg.clone();
    manifest.set("manifest", "command", name);
    manifest.set("manifest", "version", env!("CARGO_PKG_VERSION"));
    fs::write(cli.out.join("manifest.ini"), manifest.to_ini_string())?;

    writeln!(out, "command={name}")?;
    plan.run(&cli.out, seed, out)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// "lo hi n" sample axis.
fn axis(cfg: &ExperimentConfig, section: &str, key: &str, role: Role) -> CliResult<Option<Vec<f64>>> {
    let Some(v) = cfg.vector(section, key, VectorKind::Plain)? else { return Ok(None) };
    if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
        return Err(CliError::Config(format!("[{section}] {key} must be 'lo hi n' with integer n >= 1")));
    }
    let conv = |x: f64| -> f64 {
        crate::units::convert_units(crate::units::Quantity::new(role, x, cfg.units), Units::Natural).value
    };
    let n = v[2] as usize;
    let (a, b) = (conv(v[0]), conv(v[1]));
    Ok(Some(if n == 1 { vec![a] } else { (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect() }))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

fn lattice(cfg: &ExperimentConfig, dim: usize) -> CliResult<CandidateLattice> {
    let dx = cfg.scalar_or("lattice", "dx", Some(Role::Position), 0.0)?;
    let dp = cfg.scalar_or("lattice", "dp", Some(Role::Momentum), 0.0)?;
    let widths = cfg.required_vector("lattice", "widths", VectorKind::Momentum)?;
    let branches: Vec<i32> = match cfg.raw("lattice", "branches") {
        None => vec![1, -1],
        Some(text) => text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i32>().map_err(|e| CliError::Config(format!("[lattice] branches: '{t}': {e}"))))
            .collect::<CliResult<_>>()?,
    };
    CandidateLattice::symmetric(dim, dx, dp, &widths, &branches).map_err(|e| CliError::Config(e.to_string()))
}

enum Plan {
    Pair {
        probability: bool,
        phi: crate::GaussianEventPacket,
        psi: crate::GaussianEventPacket,
        g: crate::Propagator,
        q: crate::ShellQuadrature,
        threshold: f64,
    },
    Orbit {
        psi: crate::GaussianEventPacket,
        g: crate::Propagator,
        q: crate::ShellQuadrature,
        axes: Vec<Vec<f64>>,
    },
    Poincare {
        phi: crate::GaussianEventPacket,
        psi: crate::GaussianEventPacket,
        g: crate::Propagator,
        q: crate::ShellQuadrature,
        element: PoincareElement,
        cap: f64,
        epsilon: f64,
        generators: Vec<(String, Generator)>,
    },
    Gauge {
        phi: crate::GaussianEventPacket,
        psi: crate::GaussianEventPacket,
        g: crate::Propagator,
        q: crate::ShellQuadrature,
        shift: FourVector,
        threshold: f64,
    },
    Maxwell {
        potential: GridField<f64>,
        tolerance: f64,
    },
    Limit {
        study: LimitStudy,
    },
    History {
        start: crate::GaussianEventPacket,
        sampler: HistorySampler,
        n_histories: usize,
        n_steps: usize,
    },
    Frequency {
        psi: crate::GaussianEventPacket,
        sampler: HistorySampler,
        target: usize,
        n_trials: usize,
    },
}

fn config_err(e: QevError) -> CliError {
    CliError::Config(e.to_string())
}

fn default_generators(dim: usize) -> Vec<(String, Generator)> {
    let ds = dim - 1;
    let mut names: Vec<String> = (0..dim).map(|a| format!("p{a}")).collect();
    for i in 1..=3usize {
        let (j, k) = (i % 3 + 1, (i + 1) % 3 + 1);
        if j <= ds && k <= ds {
            names.push(format!("L{i}"));
        }
    }
    names.extend((1..=ds).map(|i| format!("K{i}")));
    names.into_iter().map(|n| (n.clone(), n.parse().expect("generated names are valid"))).collect()
}

/// Scalar/vector potential families sampled on the grid.
fn potential_grid(cfg: &ExperimentConfig) -> CliResult<GridField<f64>> {
    let origin = cfg.required_vector("grid", "origin", VectorKind::Spacetime)?;
    let spacing = cfg.required_vector("grid", "spacing", VectorKind::Spacetime)?;
    let shape: Vec<usize> = cfg
        .required_vector("grid", "shape", VectorKind::Plain)?
        .iter()
        .map(|v| {
            if *v >= 0.0 && v.fract() == 0.0 {
                Ok(*v as usize)
            } else {
                Err(CliError::Config(format!("[grid] shape entry {v} is not an integer")))
            }
        })
        .collect::<CliResult<_>>()?;
    let geom =
        GridGeometry::new(FourVector::natural(&origin).map_err(config_err)?, &spacing, &shape).map_err(config_err)?;
    let dim = geom.dim();
    let amp = cfg.scalar_or("potential", "amplitude", Some(Role::Potential), 1.0)?;
    let pol = match cfg.vector("potential", "polarization", VectorKind::Plain)? {
        Some(p) if p.len() == dim => p,
        Some(p) => {
            return Err(CliError::Config(format!(
                "[potential] polarization has {} entries, grid has {dim} axes",
                p.len()
            )))
        }
        None => (0..dim).map(|i| 1.0 / (1.0 + i as f64)).collect(),
    };
    let kind: String = cfg.value_or("potential", "kind", "plane_wave".to_string())?;
    match kind.as_str() {
        "plane_wave" => {
            let k = cfg.vector("potential", "wavevector", VectorKind::Momentum)?.unwrap_or_else(|| {
                let mut k = vec![0.0; dim];
                k[0] = 1.0;
                if dim > 1 {
                    k[1] = 0.7;
                }
                k
            });
            if k.len() != dim {
                return Err(CliError::Config("[potential] wavevector length must match the grid".into()));
            }
            let kv = FourVector::natural(&k).map_err(config_err)?;
            Ok(GridField::from_fn(geom, dim, move |x, out| {
                let xv = FourVector::natural(x).expect("grid points have grid dimension");
                let phase = minkowski_dot(&kv, &xv).expect("same dimension").sin();
                for (o, e) in out.iter_mut().zip(&pol) {
                    *o = amp * e * phase;
                }
            }))
        }
        "gaussian" => {
            let c = cfg.vector("potential", "center", VectorKind::Spacetime)?.unwrap_or_else(|| vec![0.0; dim]);
            let w = cfg.scalar_or("potential", "width", Some(Role::Position), 1.0)?;
            if c.len() != dim || !(w > 0.0) {
                return Err(CliError::Config(
                    "[potential] gaussian needs a center of grid dimension and width > 0".into(),
                ));
            }
            Ok(GridField::from_fn(geom, dim, move |x, out| {
                let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                let g = (-r2 / (w * w)).exp();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = amp * pol[i] * g * (1.0 + 0.3 * x[(i + 1) % dim]);
                }
            }))
        }
        other => Err(CliError::Config(format!("[potential] unknown kind '{other}' (plane_wave, gaussian)"))),
    }
}

impl Plan {
    fn build(command: Command, cfg: &ExperimentConfig) -> CliResult<Plan> {
        let pair = |cfg: &ExperimentConfig| -> CliResult<_> {
            let phi = cfg.packet("phi")?;
            let psi = cfg.packet("psi")?;
            if phi.dim() != psi.dim() {
                return Err(CliError::Config("phi and psi have different dimensions".into()));
            }
            let g = cfg.propagator(psi.dim())?;
            let q = cfg.quadrature(psi.dim_space())?;
            Ok((phi, psi, g, q))
        };
        Ok(match command {
            Command::Amplitude | Command::Probability => {
                let (phi, psi, g, q) = pair(cfg)?;
                Plan::Pair {
                    probability: command == Command::Probability,
                    phi,
                    psi,
                    g,
                    q,
                    threshold: cfg.allowed_threshold()?,
                }
            }
            Command::Orbit => {
                let psi = cfg.packet("psi")?;
                let g = cfg.propagator(psi.dim())?;
                let q = cfg.quadrature(psi.dim_space())?;
                let mut axes = vec![axis(cfg, "orbit", "t", Role::Time)?.unwrap_or_else(|| vec![psi.center_x()[0]])];
                for i in 1..psi.dim() {
                    axes.push(
                        axis(cfg, "orbit", &format!("x{i}"), Role::Position)?
                            .unwrap_or_else(|| vec![psi.center_x()[i]]),
                    );
                }
                Plan::Orbit { psi, g, q, axes }
            }
            Command::PoincareCheck => {
                let (phi, psi, g, q) = pair(cfg)?;
                let dim = psi.dim();
                let mut element = PoincareElement::identity(dim);
                if cfg.value_or("poincare", "time_reversal", false)? {
                    element = PoincareElement::time_reversal(dim).compose(&element).map_err(config_err)?;
                }
                if cfg.value_or("poincare", "parity", false)? {
                    element = PoincareElement::parity(dim).compose(&element).map_err(config_err)?;
                }
                if let Some(angles) = cfg.vector("poincare", "rotation", VectorKind::Plain)? {
                    element = PoincareElement::rotation(dim - 1, &angles)
                        .map_err(config_err)?
                        .compose(&element)
                        .map_err(config_err)?;
                }
                if let Some(theta) = cfg.vector("poincare", "rapidity", VectorKind::Plain)? {
                    element =
                        PoincareElement::boost(&theta).map_err(config_err)?.compose(&element).map_err(config_err)?;
                }
                if let Some(a) = cfg.vector("poincare", "translation", VectorKind::Spacetime)? {
                    element = PoincareElement::translation(FourVector::natural(&a).map_err(config_err)?)
                        .compose(&element)
                        .map_err(config_err)?;
                }
                if element.dim() != dim {
                    return Err(CliError::Config("Poincaré parameters do not match the packet dimension".into()));
                }
                let generators = match cfg.raw("poincare", "generators") {
                    None => default_generators(dim),
                    Some(text) => text
                        .split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|t| !t.is_empty())
                        .map(|t| Ok((t.to_string(), t.parse::<Generator>().map_err(config_err)?)))
                        .collect::<CliResult<_>>()?,
                };
                Plan::Poincare {
                    phi,
                    psi,
                    g,
                    q,
                    element,
                    cap: cfg.value_or("poincare", "rapidity_cap", DEFAULT_RAPIDITY_CAP)?,
                    epsilon: cfg.value_or("poincare", "epsilon", 1e-4)?,
                    generators,
                }
            }
            Command::GaugeCheck => {
                let (phi, psi, g, q) = pair(cfg)?;
                let shift = cfg.required_vector("gauge", "shift", VectorKind::Potential)?;
                let shift = FourVector::natural(&shift).map_err(config_err)?;
                if shift.dim() != psi.dim() {
                    return Err(CliError::Config("[gauge] shift dimension does not match the packets".into()));
                }
                Plan::Gauge { phi, psi, g, q, shift, threshold: cfg.allowed_threshold()? }
            }
            Command::MaxwellCheck => {
                let tolerance = cfg.value_or("check", "tolerance", 1e-12)?;
                Plan::Maxwell { potential: potential_grid(cfg)?, tolerance }
            }
            Command::LimitStudy => {
                let d = LimitStudy::default();
                let list = |key: &str, default: Vec<f64>| -> CliResult<Vec<f64>> {
                    Ok(cfg.vector("study", key, VectorKind::Plain)?.unwrap_or(default))
                };
                let study = LimitStudy {
                    mass: cfg.value_or("study", "mass", d.mass)?,
                    width_fraction: cfg.value_or("study", "width_fraction", d.width_fraction)?,
                    transit: cfg.value_or("study", "transit", d.transit)?,
                    offset_widths: cfg.value_or("study", "offset_widths", d.offset_widths)?,
                    velocities: list("velocities", d.velocities.clone())?,
                    time_widths: list("time_widths", d.time_widths.clone())?,
                    quadrature: cfg.quadrature(1)?,
                };
                for dt in &study.time_widths {
                    if !(*dt > 0.0 && dt.is_finite()) {
                        return Err(CliError::Config(format!("[study] time width {dt} must be positive and finite")));
                    }
                }
                for v in &study.velocities {
                    if !(*v > 0.0 && *v < 1.0) {
                        return Err(CliError::Config(format!("[study] velocity {v} must lie in (0, 1)")));
                    }
                }
                Plan::Limit { study }
            }
            Command::History | Command::FrequencyCheck => {
                let section = if command == Command::History { "start" } else { "psi" };
                let psi = cfg.packet(section)?;
                let g = cfg.propagator(psi.dim())?;
                let q = cfg.quadrature(psi.dim_space())?;
                let mut sampler =
                    HistorySampler::new(lattice(cfg, psi.dim())?, g).map_err(config_err)?.with_quadrature(q);
                sampler.allowed_threshold = cfg.allowed_threshold()?;
                if command == Command::History {
                    let mode: SelectionMode =
                        cfg.value_or("history", "mode", SelectionMode::Normalize).map_err(|e| CliError::Config(e.0))?;
                    sampler = sampler.with_mode(mode);
                    let n_histories = cfg.value_or("history", "n_histories", 1usize)?;
                    let n_steps = cfg.value_or("history", "n_steps", 10usize)?;
                    if n_histories == 0 {
                        return Err(CliError::Config("[history] n_histories must be at least 1".into()));
                    }
                    Plan::History { start: psi, sampler, n_histories, n_steps }
                } else {
                    let target = cfg.value_or("frequency", "target", 0usize)?;
                    let n_trials = cfg.value_or("frequency", "n_trials", 100_000usize)?;
                    if n_trials == 0 {
                        return Err(CliError::Config("[frequency] n_trials must be at least 1".into()));
                    }
                    Plan::Frequency { psi, sampler, target, n_trials }
                }
            }
        })
    }

    fn run<W: Write>(self, dir: &Path, seed: u64, out: &mut W) -> CliResult<()> {
        match self {
            Plan::Pair { probability: false, phi, psi, g, q, threshold } => {
                for (which, packet) in [("phi", &phi), ("psi", &psi)] {
                    let ratio = transition_amplitude(packet, packet, &g, &q)?.re / packet.norm_sq();
                    if ratio <= threshold {
                        return Err(QevError::PhysicallyDisallowed { which, ratio, threshold }.into());
                    }
                }
                let est = transition_amplitude_detailed(&phi, &psi, &g, &q)?;
                let mut w = csv_writer(&dir.join("amplitude.csv"))?;
                w.write_record(["tau_re", "tau_im", "abs_scale", "error_estimate", "nodes_per_axis"])?;
                w.write_record([
                    format!("{:?}", est.value.re),
                    format!("{:?}", est.value.im),
                    format!("{:?}", est.abs_scale),
                    format!("{:?}", est.error_estimate),
                    est.nodes_per_axis.to_string(),
                ])?;
                w.flush()?;
                writeln!(
                    out,
                    "tau_re={:?}\ntau_im={:?}\nerror_estimate={:?}",
                    est.value.re, est.value.im, est.error_estimate
                )?;
            }
            Plan::Pair { probability: true, phi, psi, g, q, threshold } => {
                let r = transition_probability_report(&phi, &psi, &g, &q, threshold)?;
                let mut w = csv_writer(&dir.join("probability.csv"))?;
                w.write_record(["P", "tau_re", "tau_im", "tau_phi_phi", "tau_psi_psi"])?;
                w.write_record(
                    [r.probability, r.tau.re, r.tau.im, r.tau_phi_phi, r.tau_psi_psi].map(|v| format!("{v:?}")),
                )?;
                w.flush()?;
                writeln!(out, "P={:?}", r.probability)?;
            }
            Plan::Orbit { psi, g, q, axes } => {
                let total: usize = axes.iter().map(Vec::len).product();
                let mut points = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rest = flat;
                    let mut x = vec![0.0; axes.len()];
                    for (i, a) in axes.iter().enumerate().rev() {
                        x[i] = a[rest % a.len()];
                        rest /= a.len();
                    }
                    points.push(FourVector::natural(&x)?);
                }
                let values = evaluate_orbit(&psi, &g, &points, &q)?;
                let mut w = csv_writer(&dir.join("orbit.csv"))?;
                let mut header: Vec<String> = vec!["t".into()];
                header.extend((1..axes.len()).map(|i| format!("x{i}")));
                header.extend(["re", "im", "abs"].map(String::from));
                w.write_record(&header)?;
                let mut peak = 0.0f64;
                for (x, v) in points.iter().zip(&values) {
                    let mut row: Vec<String> = x.as_slice().iter().map(|c| format!("{c:?}")).collect();
                    row.extend([v.re, v.im, v.norm()].map(|c| format!("{c:?}")));
                    w.write_record(&row)?;
                    peak = peak.max(v.norm());
                }
                w.flush()?;
                writeln!(out, "points={}\nmax_abs={peak:?}", points.len())?;
            }
            Plan::Poincare { phi, psi, g, q, element, cap, epsilon, generators } => {
                let r = invariance_report(&phi, &psi, &g, &element, &q, cap)?;
                let mut w = csv_writer(&dir.join("poincare.csv"))?;
                w.write_record(["check", "value"])?;
                w.write_record(["tau_before_re".to_string(), format!("{:?}", r.tau_before.re)])?;
                w.write_record(["tau_before_im".to_string(), format!("{:?}", r.tau_before.im)])?;
                w.write_record(["tau_after_re".to_string(), format!("{:?}", r.tau_after.re)])?;
                w.write_record(["tau_after_im".to_string(), format!("{:?}", r.tau_after.im)])?;
                w.write_record(["relative_error".to_string(), format!("{:?}", r.relative_error)])?;
                writeln!(out, "rapidity={:?}\nrelative_error={:?}", element.rapidity(), r.relative_error)?;
                for (name, gen) in generators {
                    let res = generator_check(&psi, gen, epsilon)?;
                    w.write_record([format!("generator_{name}"), format!("{res:?}")])?;
                    writeln!(out, "generator_{name}={res:?}")?;
                }
                w.flush()?;
            }
            Plan::Gauge { phi, psi, g, q, shift, threshold } => {
                let before = transition_probability_report(&phi, &psi, &g, &q, threshold)?;
                let g2 = g.with_potential(*g.potential() + shift.scale(g.charge_sign() as f64))?;
                let (phi2, psi2) = (phi.gauge_shift(&-shift)?, psi.gauge_shift(&-shift)?);
                let after = transition_probability_report(&phi2, &psi2, &g2, &q, threshold)?;
                let rel = (after.probability - before.probability).abs() / before.probability.max(f64::MIN_POSITIVE);
                let mut w = csv_writer(&dir.join("gauge.csv"))?;
                w.write_record(["P_before", "P_after", "abs_tau_before", "abs_tau_after", "relative_difference"])?;
                w.write_record(
                    [before.probability, after.probability, before.tau.norm(), after.tau.norm(), rel]
                        .map(|v| format!("{v:?}")),
                )?;
                w.flush()?;
                writeln!(
                    out,
                    "P_before={:?}\nP_after={:?}\nrelative_difference={rel:?}",
                    before.probability, after.probability
                )?;
            }
            Plan::Maxwell { potential, tolerance } => {
                let f = field_tensor(&potential)?;
                let cyclic = homogeneous_maxwell_residual(&f);
                let (j, continuity) = current_and_continuity(&f);
                potential.write_binary(&dir.join("potential.qev"))?;
                f.base().write_binary(&dir.join("field_tensor.qev"))?;
                j.write_binary(&dir.join("current.qev"))?;
                let mut w = csv_writer(&dir.join("residuals.csv"))?;
                w.write_record(["identity", "residual", "scale", "relative"])?;
                for (name, r) in [("cyclic", cyclic), ("continuity", continuity)] {
                    w.write_record([
                        name.to_string(),
                        format!("{:?}", r.residual),
                        format!("{:?}", r.scale),
                        format!("{:?}", r.relative()),
                    ])?;
                    writeln!(out, "{name}_relative={:?}", r.relative())?;
                }
                w.flush()?;
                for (name, r) in [("cyclic", cyclic), ("continuity", continuity)] {
                    if !(r.relative() < tolerance) {
                        return Err(QevError::StabilityViolation(format!(
                            "{name} residual {:e} exceeds {tolerance:e} times the field scale",
                            r.relative()
                        ))
                        .into());
                    }
                }
            }
            Plan::Limit { study } => {
                let rows = study.run()?;
                let mut w = csv_writer(&dir.join("limit_study.csv"))?;
                w.write_record(["v", "dt_width", "P_relativistic", "P_nonrel", "rel_error"])?;
                for r in &rows {
                    w.write_record(
                        [r.v, r.dt_width, r.p_relativistic, r.p_nonrel, r.rel_error].map(|v| format!("{v:?}")),
                    )?;
                }
                w.flush()?;
                let mut w = csv_writer(&dir.join("orders.csv"))?;
                w.write_record(["dt_width", "v_from", "v_to", "order"])?;
                for dt in &study.time_widths {
                    let orders = observed_orders(&rows, *dt);
                    for (i, o) in orders.iter().enumerate() {
                        w.write_record(
                            [*dt, study.velocities[i], study.velocities[i + 1], *o].map(|v| format!("{v:?}")),
                        )?;
                    }
                    writeln!(out, "orders_dt_{dt:?}={}", fmt_vec(&orders))?;
                }
                w.flush()?;
                writeln!(out, "rows={}", rows.len())?;
            }
            Plan::History { start, sampler, n_histories, n_steps } => {
                let histories = sampler.sample_ensemble(&start, n_histories, n_steps, seed)?;
                #[derive(Serialize)]
                struct Line<'a> {
                    history: usize,
                    #[serde(flatten)]
                    step: &'a HistoryStep,
                }
                let mut w = BufWriter::new(fs::File::create(dir.join("histories.jsonl"))?);
                for (i, h) in histories.iter().enumerate() {
                    for s in &h.steps {
                        serde_json::to_writer(&mut w, &Line { history: i, step: s })
                            .map_err(|e| QevError::Format(e.to_string()))?;
                        w.write_all(b"\n")?;
                    }
                }
                w.flush()?;
                let freq = pair_transition_frequency(&histories)?;
                let report = flip_consistency(&histories)?;
                let mut w = csv_writer(&dir.join("history_summary.csv"))?;
                w.write_record(["n_histories", "n_steps", "flip_frequency", "expected_flip_frequency", "z_score"])?;
                w.write_record([
                    n_histories.to_string(),
                    n_steps.to_string(),
                    format!("{freq:?}"),
                    format!("{:?}", report.analytic),
                    format!("{:?}", report.z_score),
                ])?;
                w.flush()?;
                writeln!(
                    out,
                    "flip_frequency={freq:?}\nexpected_flip_frequency={:?}\nz_score={:?}",
                    report.analytic, report.z_score
                )?;
            }
            Plan::Frequency { psi, sampler, target, n_trials } => {
                let candidates: Vec<_> = sampler.candidate_packets(&psi)?.into_iter().map(|(c, _)| c).collect();
                let r = frequency_consistency_check(
                    &psi,
                    &candidates,
                    target,
                    &sampler.propagator,
                    &sampler.quadrature,
                    n_trials,
                    seed,
                )?;
                let mut w = csv_writer(&dir.join("frequency.csv"))?;
                w.write_record(["candidates", "target", "n_trials", "empirical", "analytic", "z_score"])?;
                w.write_record([
                    candidates.len().to_string(),
                    target.to_string(),
                    n_trials.to_string(),
                    format!("{:?}", r.empirical),
                    format!("{:?}", r.analytic),
                    format!("{:?}", r.z_score),
                ])?;
                w.flush()?;
                writeln!(out, "empirical={:?}\nanalytic={:?}\nz_score={:?}", r.empirical, r.analytic, r.z_score)?;
            }
        }
        Ok(())
    }
}
