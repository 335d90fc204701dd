//! Physical constants (SI). These are fixed and not exposed to configuration.

/// Standard gravity, m/s².
pub const G: f64 = 9.80665;
/// Vacuum permeability, T·m/A.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380649e-23;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054572e-34;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602177e-19;
/// One Torr in pascal.
pub const TORR: f64 = 101_325.0 / 760.0;
/// Mass of an N₂ molecule, kg.
pub const N2_MASS: f64 = 28.0134 * 1.660_539_066_60e-27;
/// Kinetic diameter of N₂, m (used for the mean free path).
pub const N2_DIAMETER: f64 = 3.7e-10;
