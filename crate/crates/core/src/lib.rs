//! Numerical laboratory for a silica microsphere levitated in a
//! magneto-gravitational trap.
//!
//! - [`fieldmodel`]: solid-harmonic field model, trap potential, equilibrium,
//!   trap frequencies and coefficient calibration.
//! - [`dynamics`]: BAOAB Langevin integration with gas damping, thermal
//!   noise, electric drive and feedback forces.
//! - [`sensing`]: quadrant-detector emulation, the band-pass/phase-shift
//!   feedback controller, the radiation-pressure actuator and a lock-in.
//! - [`analysis`]: Welch PSD, damped-oscillator fits, effective temperature,
//!   mass extraction, phonon occupation, damping bounds, charge steps.
//! - [`scenario`]: configuration schema and the fixed experiment pipelines
//!   driven by the `maglev` binary.
//!
//! Runnable walkthroughs live under `examples/`.

// `!(x > 0.0)` is used on purpose so NaN fails the check too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod dsp;
pub mod dynamics;
pub mod fieldmodel;
pub mod particle;
pub mod rng;
pub mod scenario;
pub mod sensing;

pub use particle::Particle;
