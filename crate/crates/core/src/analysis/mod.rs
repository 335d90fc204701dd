//! Measurement chain: spectra, resonance fits, effective temperature,
//! thermal mass extraction, phonon occupation, damping bounds and
//! charge-step detection. Everything here is a pure function of its inputs.

pub mod charge;
pub mod fit;
pub mod mass;
pub mod psd;
pub mod report;

pub use charge::{detect_charge_steps, ChargeStep, ChargeSteps, StepOptions};
pub use fit::{fit_psd, lorentzian_psd, FitOptions, InitialGuess, PsdFit};
pub use mass::{extract_mass, histogram_variance, AxisMass, AxisSamples, MassEstimate};
pub use psd::{mean_square_from_band, welch_psd, zero_crossing_frequency, PsdEstimate};
pub use report::{
    AnalysisReport, AxisReport, CalibrationReport, ChargeReport, FitSummary, MassReport, ReportError, SCHEMA_VERSION,
};

use crate::constants::{HBAR, KB};
use crate::dsp::FilterError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("fit did not converge after {iterations} iterations (final cost {:.6e})", trace.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { iterations: usize, trace: Vec<f64> },
}

/// `T′ = m·ω²·⟨x²⟩/k_B`, K.
pub fn effective_temperature(mass: f64, omega: f64, mean_square: f64) -> f64 {
    mass * omega * omega * mean_square / KB
}

/// `n̄ = k_B·T′/(ħ·ω)`.
pub fn phonon_occupation(temperature: f64, omega: f64) -> f64 {
    KB * temperature / (HBAR * omega)
}

/// Upper bound on the natural damping rate, `Γ ≤ Γ′·T′/T`. Same units as
/// `cooled_damping`.
pub fn damping_bound(effective_temperature: f64, bath_temperature: f64, cooled_damping: f64) -> f64 {
    cooled_damping * effective_temperature / bath_temperature
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let p = digits - 1 - x.abs().log10().floor() as i32;
    if p >= 0 {
        let s = 10f64.powi(p);
        (x * s).round() / s
    } else {
        let s = 10f64.powi(-p);
        (x / s).round() * s
    }
}
