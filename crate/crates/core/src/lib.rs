//! Numerics for quantum events on Minkowski spacetime: Gaussian event packets, mass-shell
//! transition amplitudes, Poincaré and gauge actions, discrete Maxwell identities, a Schrödinger
//! oracle for the nonrelativistic limit and seeded event-history sampling.

// `!(x > 0.0)` is how NaN inputs get rejected; index loops mirror the tensor notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod em_field;
pub mod error;
pub mod histories;
pub mod linalg;
pub mod mass_shell;
pub mod minkowski;
pub mod nonrel;
pub mod packet;
pub mod poincare;
pub mod quadrature;
pub mod units;

pub use error::{QevError, Result};
pub use mass_shell::{
    energy_sign_project, evaluate_orbit, is_physically_allowed, transition_amplitude, transition_probability,
    EnergyProjected, MomentumProfile, Propagator, QuadratureScheme, ShellQuadrature, ShellSelector,
};
pub use minkowski::{minkowski_dot, shell_energy, FourVector, MetricSignature};
pub use packet::{inner_product, observable_center_and_uncertainty, GaussianEventPacket, Observable};
pub use units::{convert_units, Quantity, Role, UnitSystem, Units};
