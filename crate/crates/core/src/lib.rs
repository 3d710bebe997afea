//! Numerical optics for a four-level EIT medium with incoherent pumping.
//!
//! The crate follows the chain from atomic physics to beam propagation:
//!
//! * [`atom`]: parameters, Stark-shifted detunings, the Bloch equations and
//!   their direct steady-state solution.
//! * [`perturbation`]: zeroth-, first- and third-order solutions of the
//!   Maxwell-Bloch system, the linear dispersion `K` and the cross-phase and
//!   Stark coefficients of the envelope potential.
//! * [`potential`]: field profiles, the dimensionless complex potential,
//!   PT diagnostics and gain balancing.
//! * [`propagate`]: split-step integration of the paraxial envelope equation
//!   and a nonperturbative Maxwell-Bloch co-propagation check.
//! * [`spectrum`]: Floquet-Bloch bands and the PT-breaking threshold.
//! * [`presets`] and [`io`]: built-in parameter sets and tabular file formats.

pub mod atom;
pub mod constants;
pub mod error;
pub mod io;
pub mod perturbation;
pub mod potential;
pub mod presets;
pub mod propagate;
pub mod spectrum;

pub use error::{EitError, Result};
pub use num_complex::Complex64 as C64;
