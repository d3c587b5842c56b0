//! Flat INI experiment configuration with per-command key schemas.
//!
//! Values are read in the configured unit mode and converted to natural units on access.
//! Vectors are whitespace-separated; the time component comes first.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use num_complex::Complex64;

use crate::mass_shell::{Propagator, QuadratureScheme, ShellQuadrature, ShellSelector, DEFAULT_ALLOWED_THRESHOLD};
use crate::minkowski::FourVector;
use crate::packet::GaussianEventPacket;
use crate::units::{convert_units, Quantity, Role, Units};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<crate::error::QevError> for ConfigError {
    fn from(e: crate::error::QevError) -> Self {
        ConfigError(e.to_string())
    }
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError(msg.into()))
}

pub const PACKET_KEYS: &[&str] = &["x", "p", "widths", "amplitude"];
pub const PROPAGATOR_KEYS: &[&str] = &["mass", "potential", "selector", "charge"];
pub const QUADRATURE_KEYS: &[&str] =
    &["scheme", "nodes", "samples", "truncation_sigmas", "tolerance", "max_nodes", "allowed_threshold"];
pub const RUN_KEYS: &[&str] = &["units", "seed", "threads"];
pub const MANIFEST_KEYS: &[&str] = &["command", "version"];
pub const LATTICE_KEYS: &[&str] = &["dx", "dp", "widths", "branches"];

/// Sections and keys accepted by a command, besides [run] and [manifest].
pub fn schema(command: &str) -> ConfigResult<Vec<(&'static str, &'static [&'static str])>> {
    let pair = vec![
        ("phi", PACKET_KEYS),
        ("psi", PACKET_KEYS),
        ("propagator", PROPAGATOR_KEYS),
        ("quadrature", QUADRATURE_KEYS),
    ];
    let mut s = match command {
        "amplitude" | "probability" => pair,
        "orbit" => vec![
            ("psi", PACKET_KEYS),
            ("propagator", PROPAGATOR_KEYS),
            ("quadrature", QUADRATURE_KEYS),
            ("orbit", &["t", "x1", "x2", "x3"][..]),
        ],
        "poincare-check" => {
            let mut v = pair;
            v.push((
                "poincare",
                &[
                    "translation",
                    "rapidity",
                    "rotation",
                    "parity",
                    "time_reversal",
                    "rapidity_cap",
                    "epsilon",
                    "generators",
                ][..],
            ));
            v
        }
        "gauge-check" => {
            let mut v = pair;
            v.push(("gauge", &["shift"][..]));
            v
        }
        "maxwell-check" => vec![
            ("grid", &["origin", "spacing", "shape"][..]),
            ("potential", &["kind", "amplitude", "wavevector", "polarization", "center", "width"][..]),
            ("check", &["tolerance"][..]),
        ],
        "limit-study" => vec![
            ("study", &["mass", "width_fraction", "transit", "offset_widths", "velocities", "time_widths"][..]),
            ("quadrature", QUADRATURE_KEYS),
        ],
        "history" => vec![
            ("start", PACKET_KEYS),
            ("propagator", PROPAGATOR_KEYS),
            ("quadrature", QUADRATURE_KEYS),
            ("lattice", LATTICE_KEYS),
            ("history", &["n_histories", "n_steps", "mode"][..]),
        ],
        "frequency-check" => vec![
            ("psi", PACKET_KEYS),
            ("propagator", PROPAGATOR_KEYS),
            ("quadrature", QUADRATURE_KEYS),
            ("lattice", LATTICE_KEYS),
            ("frequency", &["target", "n_trials"][..]),
        ],
        other => return err(format!("unknown command '{other}'")),
    };
    s.push(("run", RUN_KEYS));
    s.push(("manifest", MANIFEST_KEYS));
    Ok(s)
}

/// Role of vector component `i` for spacetime-like and momentum-like vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorKind {
    Spacetime,
    Momentum,
    Potential,
    Plain,
}

impl VectorKind {
    fn role(self, i: usize) -> Option<Role> {
        match (self, i) {
            (VectorKind::Spacetime, 0) => Some(Role::Time),
            (VectorKind::Spacetime, _) => Some(Role::Position),
            (VectorKind::Momentum, 0) => Some(Role::Energy),
            (VectorKind::Momentum, _) => Some(Role::Momentum),
            (VectorKind::Potential, _) => Some(Role::Potential),
            (VectorKind::Plain, _) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    pub units: Units,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let ini = Ini::load_from_file(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_ini(&ini)
    }

    pub fn parse(text: &str) -> ConfigResult<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        Self::from_ini(&ini)
    }

    fn from_ini(ini: &Ini) -> ConfigResult<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return err("keys outside any section are not allowed");
                }
                continue;
            };
            let entry = sections.entry(name.to_string()).or_default();
            for (k, v) in props.iter() {
                if entry.insert(k.to_string(), v.trim().to_string()).is_some() {
                    return err(format!("duplicate key [{name}] {k}"));
                }
            }
        }
        let mut cfg = ExperimentConfig { sections, units: Units::Natural };
        if let Some(u) = cfg.raw("run", "units") {
            cfg.units = u.parse().map_err(|e: crate::error::QevError| ConfigError(e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Rejects sections and keys the command does not know.
    pub fn validate_schema(&self, command: &str) -> ConfigResult<()> {
        let schema = schema(command)?;
        for (section, keys) in &self.sections {
            let Some((_, allowed)) = schema.iter().find(|(s, _)| s == section) else {
                return err(format!("unknown section [{section}] for command {command}"));
            };
            for key in keys.keys() {
                if !allowed.contains(&key.as_str()) {
                    return err(format!(
                        "unknown key '{key}' in section [{section}] (allowed: {})",
                        allowed.join(", ")
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.into());
    }

    /// The resolved configuration as INI text, sections and keys sorted.
    pub fn to_ini_string(&self) -> String {
        let mut out = String::new();
        for (name, props) in &self.sections {
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in props {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }

    fn required(&self, section: &str, key: &str) -> ConfigResult<&str> {
        self.raw(section, key)
            .ok_or_else(|| ConfigError(format!("missing required key '{key}' in section [{section}]")))
    }

    pub fn parse_value<T: FromStr>(&self, section: &str, key: &str) -> ConfigResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| ConfigError(format!("[{section}] {key} = '{v}': {e}"))),
        }
    }

    pub fn value_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> ConfigResult<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse_value(section, key)?.unwrap_or(default))
    }

    fn convert(&self, value: f64, role: Option<Role>) -> f64 {
        match role {
            Some(role) => convert_units(Quantity::new(role, value, self.units), Units::Natural).value,
            None => value,
        }
    }

    pub fn scalar(&self, section: &str, key: &str, role: Option<Role>) -> ConfigResult<Option<f64>> {
        Ok(self.parse_value::<f64>(section, key)?.map(|v| self.convert(v, role)))
    }

    pub fn scalar_or(&self, section: &str, key: &str, role: Option<Role>, default: f64) -> ConfigResult<f64> {
        Ok(self.scalar(section, key, role)?.unwrap_or(default))
    }

    pub fn vector(&self, section: &str, key: &str, kind: VectorKind) -> ConfigResult<Option<Vec<f64>>> {
        let Some(text) = self.raw(section, key) else { return Ok(None) };
        let mut out = Vec::new();
        for (i, tok) in text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).enumerate() {
            let v: f64 = tok.parse().map_err(|e| ConfigError(format!("[{section}] {key}: '{tok}': {e}")))?;
            out.push(self.convert(v, kind.role(i)));
        }
        if out.is_empty() {
            return err(format!("[{section}] {key} is empty"));
        }
        Ok(Some(out))
    }

    pub fn required_vector(&self, section: &str, key: &str, kind: VectorKind) -> ConfigResult<Vec<f64>> {
        self.required(section, key)?;
        Ok(self.vector(section, key, kind)?.unwrap_or_default())
    }

    pub fn seed(&self) -> ConfigResult<u64> {
        self.value_or("run", "seed", 0u64)
    }

    /// Gaussian packet from a [section] with keys x, p, widths and optional amplitude "re im".
    pub fn packet(&self, section: &str) -> ConfigResult<GaussianEventPacket> {
        if !self.has_section(section) {
            return err(format!("missing section [{section}]"));
        }
        let x = self.required_vector(section, "x", VectorKind::Spacetime)?;
        let p = self.required_vector(section, "p", VectorKind::Momentum)?;
        let w = self.required_vector(section, "widths", VectorKind::Momentum)?;
        let amp = match self.vector(section, "amplitude", VectorKind::Plain)? {
            None => Complex64::new(1.0, 0.0),
            Some(a) if a.len() == 1 => Complex64::new(a[0], 0.0),
            Some(a) if a.len() == 2 => Complex64::new(a[0], a[1]),
            Some(_) => return err(format!("[{section}] amplitude takes 're' or 're im'")),
        };
        if x.len() != p.len() || x.len() != w.len() {
            return err(format!("[{section}] x, p and widths must have the same length"));
        }
        Ok(GaussianEventPacket::new(FourVector::natural(&x)?, FourVector::natural(&p)?, &w, amp)?)
    }

    pub fn propagator(&self, dim: usize) -> ConfigResult<Propagator> {
        let mass = self
            .scalar("propagator", "mass", Some(Role::Mass))?
            .ok_or_else(|| ConfigError("missing required key 'mass' in section [propagator]".into()))?;
        let potential = match self.vector("propagator", "potential", VectorKind::Potential)? {
            Some(a) => {
                if a.len() != dim {
                    return err(format!("[propagator] potential has {} components, packets have {dim}", a.len()));
                }
                FourVector::natural(&a)?
            }
            None => FourVector::zero(dim, Units::Natural),
        };
        let selector: ShellSelector = self.value_or("propagator", "selector", ShellSelector::Both)?;
        let charge: i32 = self.value_or("propagator", "charge", 1)?;
        Ok(Propagator::new(mass, potential, selector, charge)?)
    }

    pub fn quadrature(&self, dim_space: usize) -> ConfigResult<ShellQuadrature> {
        let mut q = ShellQuadrature::default_for(dim_space);
        let scheme: String = self.value_or("quadrature", "scheme", "gauss_legendre".to_string())?;
        match scheme.as_str() {
            "gauss_legendre" => {
                if let Some(n) = self.parse_value::<usize>("quadrature", "nodes")? {
                    q.scheme = QuadratureScheme::GaussLegendre { nodes_per_axis: n };
                }
                if let Some(n) = self.parse_value::<usize>("quadrature", "max_nodes")? {
                    q.max_nodes_per_axis = n;
                }
                if let Some(t) = self.parse_value::<f64>("quadrature", "tolerance")? {
                    q.tolerance = t;
                }
            }
            "monte_carlo" => {
                let samples: usize = self.value_or("quadrature", "samples", 100_000)?;
                q = ShellQuadrature::monte_carlo(samples, self.seed()?);
            }
            other => return err(format!("[quadrature] unknown scheme '{other}'")),
        }
        if let Some(t) = self.parse_value::<f64>("quadrature", "truncation_sigmas")? {
            q.truncation_sigmas = t;
        }
        q.validate()?;
        Ok(q)
    }

    pub fn allowed_threshold(&self) -> ConfigResult<f64> {
        let t = self.value_or("quadrature", "allowed_threshold", DEFAULT_ALLOWED_THRESHOLD)?;
        if !(t.is_finite() && t >= 0.0) {
            return err("[quadrature] allowed_threshold must be finite and non-negative");
        }
        Ok(t)
    }
}
