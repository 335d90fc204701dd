use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::charge::ChargeSteps;
use super::fit::PsdFit;
use super::mass::MassEstimate;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot read report: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed report: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("report schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub gamma_hz: f64,
    pub sigma_frequency_hz: f64,
    pub sigma_gamma_hz: f64,
    pub covariance: [[f64; 3]; 3],
    pub reduced_chi2: f64,
    pub at_bound: bool,
}

impl From<&PsdFit> for FitSummary {
    fn from(f: &PsdFit) -> Self {
        Self {
            amplitude: f.amplitude,
            frequency_hz: f.frequency,
            gamma_hz: f.gamma,
            sigma_frequency_hz: f.sigma_frequency(),
            sigma_gamma_hz: f.sigma_gamma(),
            covariance: f.covariance,
            reduced_chi2: f.reduced_chi2,
            at_bound: f.at_bound,
        }
    }
}

/// Per-axis results. Any field may be absent when the scenario does not
/// measure it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisReport {
    pub frequency_hz: Option<f64>,
    pub fit: Option<FitSummary>,
    /// ⟨x²⟩ entering the effective temperature.
    pub mean_square_m2: Option<f64>,
    /// ⟨x²⟩ from the fitted spectrum.
    pub mean_square_fit_m2: Option<f64>,
    /// ⟨x²⟩ from the band-filtered record.
    pub mean_square_band_m2: Option<f64>,
    pub effective_temperature_k: Option<f64>,
    pub phonon_occupation: Option<f64>,
    /// Γ′ read from the fitted linewidth.
    pub cooled_damping_rad_s: Option<f64>,
    /// Γ + g_eff predicted from the loop settings.
    pub predicted_damping_rad_s: Option<f64>,
    pub damping_bound_rad_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassReport {
    pub mass_kg: f64,
    pub uncertainty_kg: f64,
    pub y_kg: f64,
    pub y_uncertainty_kg: f64,
    pub z_kg: f64,
    pub z_uncertainty_kg: f64,
    pub histogram_y_kg: f64,
    pub histogram_z_kg: f64,
    pub samples_per_axis: usize,
    pub inconsistent: bool,
}

impl From<&MassEstimate> for MassReport {
    fn from(m: &MassEstimate) -> Self {
        Self {
            mass_kg: m.mass,
            uncertainty_kg: m.uncertainty,
            y_kg: m.y.mass,
            y_uncertainty_kg: m.y.uncertainty,
            z_kg: m.z.mass,
            z_uncertainty_kg: m.z.uncertainty,
            histogram_y_kg: m.y.histogram_mass,
            histogram_z_kg: m.z.histogram_mass,
            samples_per_axis: m.y.samples.min(m.z.samples),
            inconsistent: m.inconsistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepReport {
    pub t_s: f64,
    pub before: f64,
    pub after: f64,
    pub quanta: i64,
    pub irregular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeReport {
    pub steps: Vec<StepReport>,
    pub ambiguous: usize,
    pub quantum: Option<f64>,
    pub final_level: f64,
    pub reached_zero: bool,
    pub zero_time_s: Option<f64>,
    pub injected_steps: usize,
}

impl ChargeReport {
    pub fn new(c: &ChargeSteps, injected_steps: usize) -> Self {
        Self {
            steps: c
                .steps
                .iter()
                .map(|s| StepReport {
                    t_s: s.t,
                    before: s.before,
                    after: s.after,
                    quanta: s.quanta,
                    irregular: s.irregular,
                })
                .collect(),
            ambiguous: c.ambiguous.len(),
            quantum: c.quantum,
            final_level: c.final_level,
            reached_zero: c.reached_zero,
            zero_time_s: c.zero_time,
            injected_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationReport {
    /// `degree/order/parity` → coefficient.
    pub coefficients: BTreeMap<String, f64>,
    pub target_hz: [f64; 3],
    pub achieved_hz: [f64; 3],
    pub equilibrium_m: [f64; 3],
    pub gradient_t_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of input files by name.
    pub inputs: BTreeMap<String, String>,
    pub bath_temperature_k: f64,
    pub axes: BTreeMap<String, AxisReport>,
    pub mass: Option<MassReport>,
    pub charge: Option<ChargeReport>,
    pub calibration: Option<CalibrationReport>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn new(scenario: &str, config_hash: &str, seed: u64, bath_temperature_k: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.into(),
            config_hash: config_hash.into(),
            seed,
            inputs: BTreeMap::new(),
            bath_temperature_k,
            axes: BTreeMap::new(),
            mass: None,
            charge: None,
            calibration: None,
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parses a report, rejecting other schema versions before anything else.
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_str(text)?;
        if v.schema_version != SCHEMA_VERSION {
            return Err(ReportError::SchemaVersion { found: v.schema_version, expected: SCHEMA_VERSION });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, ReportError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        const NM: &str = "not measured";
        let mut s = String::new();
        let _ = writeln!(s, "scenario {}  seed {}  config {}", self.scenario, self.seed, short(&self.config_hash));
        let _ = writeln!(s, "bath temperature {} K", self.bath_temperature_k);
        for axis in ["x", "y", "z"] {
            let a = self.axes.get(axis).cloned().unwrap_or_default();
            let opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map(f).unwrap_or_else(|| NM.into());
            let freq = match (&a.fit, a.frequency_hz) {
                (Some(fit), _) => format!("{:.3} ± {:.3} Hz", fit.frequency_hz, fit.sigma_frequency_hz),
                (None, Some(f)) => format!("{f:.3} Hz"),
                _ => NM.into(),
            };
            let _ = writeln!(s, "[{axis}] f = {freq}");
            let _ = writeln!(s, "  T'_{axis} = {}", opt(a.effective_temperature_k, &|t| format_temperature(t)));
            let _ = writeln!(s, "  n'_{axis} = {}", opt(a.phonon_occupation, &|n| format!("{n:.2e}")));
            let gamma = match &a.fit {
                Some(fit) => format!("{:.4} ± {:.4} Hz", fit.gamma_hz, fit.sigma_gamma_hz),
                None => NM.into(),
            };
            let _ = writeln!(s, "  Gamma'_{axis}/2pi = {gamma}");
            let _ = writeln!(
                s,
                "  Gamma_{axis}/2pi <= {}",
                opt(a.damping_bound_rad_s, &|g| format!("{:.2e} Hz", g / (2.0 * std::f64::consts::PI)))
            );
        }
        match &self.mass {
            Some(m) => {
                let _ = writeln!(
                    s,
                    "mass = ({:.4} ± {:.4})e-15 kg  [y {:.4}, z {:.4}]{}",
                    m.mass_kg * 1e15,
                    m.uncertainty_kg * 1e15,
                    m.y_kg * 1e15,
                    m.z_kg * 1e15,
                    if m.inconsistent { "  AXES DISAGREE" } else { "" }
                );
            }
            None => {
                let _ = writeln!(s, "mass = {NM}");
            }
        }
        match &self.charge {
            Some(c) => {
                let _ = writeln!(
                    s,
                    "charge steps = {} (injected {}), ambiguous {}, final level {:.3e}{}",
                    c.steps.len(),
                    c.injected_steps,
                    c.ambiguous,
                    c.final_level,
                    if c.reached_zero { ", reached zero" } else { "" }
                );
            }
            None => {
                let _ = writeln!(s, "charge steps = {NM}");
            }
        }
        if let Some(c) = &self.calibration {
            let _ = writeln!(
                s,
                "field calibration: ({:.3}, {:.3}, {:.3}) Hz, |dB/dr| = {:.3e} T/m, equilibrium y = {:.3e} m",
                c.achieved_hz[0], c.achieved_hz[1], c.achieved_hz[2], c.gradient_t_per_m, c.equilibrium_m[1]
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn short(h: &str) -> &str {
    &h[..h.len().min(12)]
}

fn format_temperature(t: f64) -> String {
    if t < 1.0 {
        format!("{:.3} mK", t * 1e3)
    } else {
        format!("{t:.2} K")
    }
}
