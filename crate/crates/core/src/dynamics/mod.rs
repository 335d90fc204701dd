//! Stochastic equations of motion for the trapped sphere.

pub mod environment;
pub mod integrator;
pub mod simulate;
pub mod trajectory;

pub use environment::{damping_from_pressure, Accommodation, Environment};
pub use integrator::{sample_boltzmann_init, Langevin, SimState, TrapModel};
pub use simulate::{
    electric_drive_force, simulate, ChargeEvent, DriveConfig, FeedbackHook, InitialCondition, SimulationConfig,
};
pub use trajectory::{Trajectory, TrajectoryMeta};

use crate::fieldmodel::FieldError;

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error(
        "Knudsen number {knudsen:.3} is below {min}: free-molecular drag does not apply, supply the damping rate directly"
    )]
    Regime { knudsen: f64, min: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integration produced a non-finite state at t = {t} s (position {position:?}, velocity {velocity:?})")]
    NonFinite { t: f64, position: [f64; 3], velocity: [f64; 3] },
    #[error("amplitude guard tripped at t = {t} s: displacement {displacement:e} m on axis {axis}")]
    AmplitudeGuard { t: f64, axis: usize, displacement: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}
