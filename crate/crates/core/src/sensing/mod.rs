//! Detection chain and feedback controller.
//!
//! Positions are read out by an emulated quadrant photodiode, band-pass
//! filtered and phase shifted per axis so the signal tracks velocity, and
//! summed into the amplitude command of a single radiation-pressure beam.

pub mod controller;
pub mod detector;
pub mod lockin;

pub use controller::{
    actuate, closed_loop_damping, closed_loop_pole, gain_for_damping, velocity_phase_deg, ActuatorCommand, AxisChannel,
    Controller, ControllerConfig, FeedbackLoop, LoopResponse, Plant,
};
pub use detector::{Detection, Detector, DetectorConfig};
pub use lockin::{lock_in, LockInConfig, LockInOutput};

use crate::dsp::FilterError;

#[derive(Debug, thiserror::Error)]
pub enum SensingError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("record of {duration} s is shorter than 5 lock-in time constants ({needed} s)")]
    RecordTooShort { duration: f64, needed: f64 },
}
