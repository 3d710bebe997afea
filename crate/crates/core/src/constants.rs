//! Physical constants in the unit system used throughout the crate
//! (seconds, centimetres, volts, joules).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light, cm/s.
pub const C_CM: f64 = 2.997_924_58e10;
