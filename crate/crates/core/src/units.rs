//! Natural (c = ħ = 1, lengths in meters) and SI unit handling.

use std::fmt;
use std::str::FromStr;

use crate::error::{QevError, Result};

pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;
pub const ELEMENTARY_CHARGE: f64 = 1.60217646e-19;
pub const HBAR: f64 = 1.05457148e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Units {
    Natural,
    Si,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Units::Natural => write!(f, "natural"),
            Units::Si => write!(f, "si"),
        }
    }
}

impl FromStr for Units {
    type Err = QevError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(Units::Natural),
            "si" => Ok(Units::Si),
            other => Err(QevError::InvalidParameter(format!("unknown unit system '{other}'"))),
        }
    }
}

/// Constants of a unit system. In natural mode c = ħ = 1 and e is absorbed into the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub mode: Units,
    pub c: f64,
    pub e_charge: f64,
    pub hbar: f64,
}

impl UnitSystem {
    pub const NATURAL: UnitSystem = UnitSystem { mode: Units::Natural, c: 1.0, e_charge: 1.0, hbar: 1.0 };
    pub const SI: UnitSystem =
        UnitSystem { mode: Units::Si, c: SPEED_OF_LIGHT, e_charge: ELEMENTARY_CHARGE, hbar: HBAR };

    pub fn of(mode: Units) -> UnitSystem {
        match mode {
            Units::Natural => Self::NATURAL,
            Units::Si => Self::SI,
        }
    }

    /// Prefactor in front of δ(℘² − m²): 1 in natural units, ħ² in SI.
    pub fn propagator_prefactor(&self) -> f64 {
        self.hbar * self.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Time,
    Position,
    Energy,
    Momentum,
    Potential,
    Mass,
}

impl FromStr for Role {
    type Err = QevError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "time" => Role::Time,
            "position" => Role::Position,
            "energy" => Role::Energy,
            "momentum" => Role::Momentum,
            "potential" => Role::Potential,
            "mass" => Role::Mass,
            other => return Err(QevError::InvalidParameter(format!("unknown role tag '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub role: Role,
    pub value: f64,
    pub units: Units,
}

impl Quantity {
    pub fn new(role: Role, value: f64, units: Units) -> Self {
        Quantity { role, value, units }
    }
}

/// Factor f with natural = f · SI for the given role.
fn si_to_natural_factor(role: Role) -> f64 {
    let (c, e, hbar) = (SPEED_OF_LIGHT, ELEMENTARY_CHARGE, HBAR);
    match role {
        Role::Time => c,
        Role::Position => 1.0,
        Role::Energy => 1.0 / (c * hbar),
        Role::Momentum => 1.0 / hbar,
        Role::Potential => e / (c * hbar),
        Role::Mass => c / hbar,
    }
}

pub fn convert_units(q: Quantity, to: Units) -> Quantity {
    let value = match (q.units, to) {
        (a, b) if a == b => q.value,
        (Units::Si, Units::Natural) => q.value * si_to_natural_factor(q.role),
        (Units::Natural, Units::Si) => q.value / si_to_natural_factor(q.role),
        _ => unreachable!(),
    };
    Quantity { role: q.role, value, units: to }
}

/// Convenience for untagged values with a role given as text (config files).
pub fn convert_tagged(role: &str, value: f64, from: Units, to: Units) -> Result<f64> {
    let role: Role = role.parse()?;
    Ok(convert_units(Quantity::new(role, value, from), to).value)
}
