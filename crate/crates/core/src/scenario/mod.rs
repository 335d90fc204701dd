//! Experiment configuration and the fixed pipelines behind the CLI.

pub mod config;
pub mod run;

pub use config::{Diagnostic, ExperimentConfig, ScenarioKind};
pub use run::{charge_schedule, execute, load_config, run_scenario, sweep, write_outputs, Outcome, RunResult};

use crate::analysis::{AnalysisError, ReportError};
use crate::dynamics::DynamicsError;
use crate::fieldmodel::FieldError;
use crate::sensing::SensingError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read config: {0}")]
    ConfigIo(String),
    #[error("invalid config:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<Diagnostic>),
    #[error("physics error: {0}")]
    Physics(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("cannot write output: {0}")]
    OutputIo(String),
    #[error("report error: {0}")]
    Report(#[from] ReportError),
}

impl ScenarioError {
    /// Process exit status for the CLI. 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigIo(_) => 3,
            Self::Validation(_) => 4,
            Self::Physics(_) => 5,
            Self::Fit(_) => 6,
            Self::OutputIo(_) => 7,
            Self::Report(_) => 8,
        }
    }
}

impl From<FieldError> for ScenarioError {
    fn from(e: FieldError) -> Self {
        Self::Physics(e.to_string())
    }
}

impl From<DynamicsError> for ScenarioError {
    fn from(e: DynamicsError) -> Self {
        Self::Physics(e.to_string())
    }
}

impl From<SensingError> for ScenarioError {
    fn from(e: SensingError) -> Self {
        Self::Physics(e.to_string())
    }
}

impl From<AnalysisError> for ScenarioError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::NonConvergence { .. } => Self::Fit(e.to_string()),
            other => Self::Physics(other.to_string()),
        }
    }
}
