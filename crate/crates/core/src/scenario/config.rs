//! Experiment configuration. Every physical quantity carries its unit in
//! the key name.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use crate::constants::TORR;
use crate::dynamics::{damping_from_pressure, Accommodation, Environment};
use crate::fieldmodel::{TermSpec, TrapFrequencies, DEFAULT_TERMS};
use crate::particle::Particle;
use crate::sensing::{AxisChannel, ControllerConfig, LockInConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Thermalize,
    CalibrateMass,
    Cool,
    ChargeSim,
    CalibrateField,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Thermalize => "thermalize",
            Self::CalibrateMass => "calibrate-mass",
            Self::Cool => "cool",
            Self::ChargeSim => "charge-sim",
            Self::CalibrateField => "calibrate-field",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub particle: ParticleSettings,
    #[serde(default)]
    pub trap: TrapSettings,
    pub environment: EnvironmentSettings,
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub detector: DetectorSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<ChargeSettings>,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSettings {
    pub mass_kg: f64,
    #[serde(default = "default_density")]
    pub density_kg_m3: f64,
    #[serde(default = "default_chi")]
    pub susceptibility: f64,
    #[serde(default)]
    pub charge_e: i64,
}

fn default_density() -> f64 {
    crate::particle::SILICA_DENSITY
}
fn default_chi() -> f64 {
    crate::particle::SILICA_CHI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrapMode {
    /// Three independent harmonic oscillators at `frequencies_hz`.
    Harmonic,
    /// Full multipole field, calibrated to `frequencies_hz` unless
    /// coefficients are given.
    Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSettings {
    pub mode: TrapMode,
    pub frequencies_hz: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
    /// Coefficients in T·m^(1−degree), one per term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default = "default_validity")]
    pub validity_radius_m: f64,
}

fn default_validity() -> f64 {
    crate::fieldmodel::DEFAULT_VALIDITY_RADIUS
}

impl Default for TrapSettings {
    fn default() -> Self {
        Self {
            mode: TrapMode::Harmonic,
            frequencies_hz: TrapFrequencies::REFERENCE.as_array(),
            terms: None,
            coefficients: None,
            validity_radius_m: default_validity(),
        }
    }
}

impl TrapSettings {
    pub fn term_specs(&self) -> Vec<TermSpec> {
        self.terms.clone().unwrap_or_else(|| DEFAULT_TERMS.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSettings {
    pub temperature_k: f64,
    #[serde(default)]
    pub pressure_torr: f64,
    #[serde(default = "default_accommodation")]
    pub accommodation: Accommodation,
    /// Replaces the gas damping, Γ/2π.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping_override_hz: Option<f64>,
}

fn default_accommodation() -> Accommodation {
    Accommodation::Diffuse
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Boltzmann,
    /// At rest, displaced by `initial_displacement_m`.
    Displaced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub duration_s: f64,
    pub dt_s: f64,
    /// Defaults to `dt_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_interval_s: Option<f64>,
    /// Independent runs with member index 0..members.
    #[serde(default = "one")]
    pub members: usize,
    /// Leading part of each run excluded from analysis.
    #[serde(default)]
    pub discard_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_guard_m: Option<f64>,
    #[serde(default)]
    pub excess_force_psd_n2_per_hz: f64,
    #[serde(default = "default_initial")]
    pub initial: InitialState,
    #[serde(default)]
    pub initial_displacement_m: [f64; 3],
}

fn one() -> usize {
    1
}
fn default_initial() -> InitialState {
    InitialState::Boltzmann
}

impl SimulationSettings {
    pub fn record_interval(&self) -> f64 {
        self.record_interval_s.unwrap_or(self.dt_s)
    }

    pub fn record_every(&self) -> usize {
        (self.record_interval() / self.dt_s).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSettings {
    #[serde(default = "default_cal")]
    pub calibration_v_per_m: [f64; 3],
    #[serde(default)]
    pub noise_psd_v2_per_hz: [f64; 3],
    #[serde(default = "default_fs")]
    pub sample_rate_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation_v: Option<f64>,
}

fn default_cal() -> [f64; 3] {
    [1e6; 3]
}
fn default_fs() -> f64 {
    5000.0
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            calibration_v_per_m: default_cal(),
            noise_psd_v2_per_hz: [0.0; 3],
            sample_rate_hz: default_fs(),
            saturation_v: None,
        }
    }
}

impl DetectorSettings {
    pub fn to_config(&self) -> crate::sensing::DetectorConfig {
        crate::sensing::DetectorConfig {
            calibration: self.calibration_v_per_m,
            noise_psd: self.noise_psd_v2_per_hz,
            sample_rate: self.sample_rate_hz,
            saturation: self.saturation_v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSettings {
    /// Defaults to the trap frequency of the axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_hz: Option<f64>,
    pub bandwidth_hz: f64,
    /// Defaults to the phase that makes the force track velocity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_deg: Option<f64>,
    /// Give either the gain or the target feedback damping g_eff/2π.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_n_per_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_damping_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSettings {
    #[serde(default = "one")]
    pub latency_samples: usize,
    /// Beam direction; normalized on use.
    pub direction: [f64; 3],
    pub offset_n: f64,
    pub bounds_n: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<ChannelSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<ChannelSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ChannelSettings>,
}

impl ControllerSettings {
    pub fn channels(&self) -> [Option<&ChannelSettings>; 3] {
        [self.x.as_ref(), self.y.as_ref(), self.z.as_ref()]
    }

    /// Controller with every channel at unit gain and default center and
    /// phase filled in. Gains are resolved by the scenario.
    pub fn skeleton(&self, sample_rate: f64, trap_hz: [f64; 3]) -> ControllerConfig {
        let channels = std::array::from_fn(|a| {
            self.channels()[a].map(|c| {
                let center = c.center_hz.unwrap_or(trap_hz[a]);
                AxisChannel {
                    center,
                    bandwidth: c.bandwidth_hz,
                    phase_deg: c.phase_deg.unwrap_or_else(|| {
                        crate::sensing::velocity_phase_deg(center, sample_rate, self.latency_samples)
                    }),
                    gain: c.gain_n_per_v.unwrap_or(1.0),
                }
            })
        });
        let d = nalgebra::Vector3::from(self.direction);
        ControllerConfig {
            sample_rate,
            channels,
            direction: if d.norm() > 0.0 { d.normalize() } else { d },
            offset: self.offset_n,
            bounds: (self.bounds_n[0], self.bounds_n[1]),
            latency: self.latency_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSettings {
    pub amplitude_v: f64,
    /// Effective electrode separation converting volts to field.
    pub gap_m: f64,
    pub frequency_hz: f64,
    #[serde(default = "default_drive_axis")]
    pub axis: [f64; 3],
}

fn default_drive_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeSettings {
    /// Single-electron changes toward neutral, one per arrival.
    pub steps: usize,
    pub first_arrival_s: f64,
    /// Arrival gaps are `min_gap_s` plus an exponential with this mean.
    pub min_gap_s: f64,
    pub mean_extra_gap_s: f64,
    /// Recording kept after the last arrival.
    pub tail_s: f64,
    pub time_constant_s: f64,
    #[serde(default = "default_threshold")]
    pub step_threshold: f64,
}

fn default_threshold() -> f64 {
    crate::analysis::StepOptions::default().threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Welch segment length. By default long enough that the expected
    /// linewidth spans ten bins, capped by the record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_s: Option<f64>,
    /// Half width of the fit window; defaults to 10 expected linewidths, at
    /// least 2 Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_half_width_hz: Option<f64>,
    /// Band for the direct ⟨x²⟩ estimate, in fitted linewidths.
    #[serde(default = "default_band")]
    pub band_linewidths: f64,
}

fn default_band() -> f64 {
    5.0
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self { segment_s: None, fit_half_width_hz: None, band_linewidths: default_band() }
    }
}

/// One violated invariant, named by its key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: &str, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl ExperimentConfig {
    /// Parses TOML; failures name the offending key path.
    pub fn from_toml(text: &str) -> Result<Self, Diagnostic> {
        let de = toml::Deserializer::parse(text).map_err(|e| Diagnostic::new("<document>", e.message().trim()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let parent = e.path().to_string();
            let msg = e.inner().message().trim().to_string();
            let path = match msg.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
                Some(field) if parent == "." => field.to_string(),
                Some(field) => format!("{parent}.{field}"),
                None => parent,
            };
            Diagnostic::new(&path, msg)
        })
    }

    /// Canonical serialization; the basis of the config hash.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_toml().as_bytes()))
    }

    pub fn particle(&self) -> Particle {
        let p = &self.particle;
        Particle::from_mass(p.mass_kg, p.density_kg_m3, p.susceptibility).map(|q| q.with_charge(p.charge_e)).unwrap_or(
            Particle {
                mass: p.mass_kg,
                radius: f64::NAN,
                density: p.density_kg_m3,
                chi: p.susceptibility,
                charge: p.charge_e,
            },
        )
    }

    pub fn environment(&self) -> Environment {
        let e = &self.environment;
        let mut env = Environment::new(e.temperature_k, e.pressure_torr * TORR);
        env.accommodation = e.accommodation;
        env
    }

    /// Γ, rad/s.
    pub fn damping(&self) -> Result<f64, crate::dynamics::DynamicsError> {
        match self.environment.damping_override_hz {
            Some(hz) => Ok(2.0 * PI * hz),
            None => damping_from_pressure(&self.environment(), &self.particle()),
        }
    }

    pub fn lock_in(&self) -> Option<LockInConfig> {
        Some(LockInConfig {
            reference: self.drive.as_ref()?.frequency_hz,
            time_constant: self.charge.as_ref()?.time_constant_s,
        })
    }

    /// Every violated invariant; empty when the config is runnable.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut d = Vec::new();
        let p = &self.particle;
        check(&mut d, p.mass_kg > 0.0, "particle.mass_kg", format!("must be positive, got {}", p.mass_kg));
        check(
            &mut d,
            p.density_kg_m3 > 0.0,
            "particle.density_kg_m3",
            format!("must be positive, got {}", p.density_kg_m3),
        );
        let e = &self.environment;
        check(
            &mut d,
            e.temperature_k > 0.0,
            "environment.temperature_k",
            format!("must be positive, got {}", e.temperature_k),
        );
        check(
            &mut d,
            e.pressure_torr >= 0.0,
            "environment.pressure_torr",
            format!("must be ≥ 0, got {}", e.pressure_torr),
        );
        if let Some(g) = e.damping_override_hz {
            check(&mut d, g >= 0.0, "environment.damping_override_hz", format!("must be ≥ 0, got {g}"));
        } else if p.mass_kg > 0.0 && p.density_kg_m3 > 0.0 && e.temperature_k > 0.0 && e.pressure_torr >= 0.0 {
            if let Err(err) = self.damping() {
                d.push(Diagnostic::new("environment.pressure_torr", err.to_string()));
            }
        }

        let t = &self.trap;
        let freqs = t.frequencies_hz;
        let f_max = freqs.iter().cloned().fold(0.0, f64::max);
        check(
            &mut d,
            freqs.iter().all(|f| *f > 0.0),
            "trap.frequencies_hz",
            format!("must all be positive, got {freqs:?}"),
        );
        check(&mut d, t.validity_radius_m > 0.0, "trap.validity_radius_m", "must be positive".into());
        if t.mode == TrapMode::Field {
            check(
                &mut d,
                p.susceptibility < 0.0,
                "particle.susceptibility",
                "field mode needs a diamagnetic particle (χ < 0)".into(),
            );
            let n_terms = t.term_specs().len();
            if let Some(c) = &t.coefficients {
                check(
                    &mut d,
                    c.len() == n_terms,
                    "trap.coefficients",
                    format!("{} values for {n_terms} terms", c.len()),
                );
            } else {
                check(
                    &mut d,
                    n_terms == 3,
                    "trap.terms",
                    format!("calibration needs exactly three terms, got {n_terms}"),
                );
            }
        } else {
            check(
                &mut d,
                t.terms.is_none() && t.coefficients.is_none(),
                "trap.coefficients",
                "only used in field mode".into(),
            );
        }

        let s = &self.simulation;
        check(&mut d, s.duration_s > 0.0, "simulation.duration_s", format!("must be positive, got {}", s.duration_s));
        check(&mut d, s.dt_s > 0.0, "simulation.dt_s", format!("must be positive, got {}", s.dt_s));
        if s.dt_s > 0.0 && f_max > 0.0 {
            check(
                &mut d,
                s.dt_s <= 1.0 / (50.0 * f_max),
                "simulation.dt_s",
                format!("{} s exceeds 1/(50·f_max) = {:.3e} s", s.dt_s, 1.0 / (50.0 * f_max)),
            );
        }
        if s.dt_s > 0.0 {
            check(
                &mut d,
                is_multiple(s.record_interval(), s.dt_s),
                "simulation.record_interval_s",
                "must be a whole number of dt_s".into(),
            );
        }
        check(&mut d, s.members >= 1, "simulation.members", "must be at least 1".into());
        check(
            &mut d,
            s.discard_s >= 0.0 && s.discard_s < s.duration_s,
            "simulation.discard_s",
            format!("must lie in [0, duration_s), got {}", s.discard_s),
        );
        if let Some(g) = s.amplitude_guard_m {
            check(&mut d, g > 0.0, "simulation.amplitude_guard_m", "must be positive".into());
        }
        check(
            &mut d,
            s.excess_force_psd_n2_per_hz >= 0.0,
            "simulation.excess_force_psd_n2_per_hz",
            "must be ≥ 0".into(),
        );

        let det = &self.detector;
        check(
            &mut d,
            det.sample_rate_hz > 2.0 * f_max,
            "detector.sample_rate_hz",
            format!("{} Hz must exceed twice the highest trap frequency ({f_max} Hz)", det.sample_rate_hz),
        );
        check(
            &mut d,
            det.calibration_v_per_m.iter().all(|c| c.is_finite()),
            "detector.calibration_v_per_m",
            "must be finite".into(),
        );
        check(
            &mut d,
            det.noise_psd_v2_per_hz.iter().all(|n| *n >= 0.0),
            "detector.noise_psd_v2_per_hz",
            "must be ≥ 0".into(),
        );
        if let Some(v) = det.saturation_v {
            check(&mut d, v > 0.0, "detector.saturation_v", "must be positive".into());
        }

        let a = &self.analysis;
        if let Some(seg) = a.segment_s {
            check(&mut d, seg > 0.0, "analysis.segment_s", "must be positive".into());
        }
        check(&mut d, a.band_linewidths > 0.0, "analysis.band_linewidths", "must be positive".into());
        if let Some(h) = a.fit_half_width_hz {
            check(&mut d, h > 0.0, "analysis.fit_half_width_hz", "must be positive".into());
        }

        if let Some(c) = &self.controller {
            let names = ["x", "y", "z"];
            for (i, ch) in c.channels().iter().enumerate() {
                let Some(ch) = ch else { continue };
                let path = format!("controller.{}", names[i]);
                check(
                    &mut d,
                    c.channels()[i].is_some() && (ch.gain_n_per_v.is_some() != ch.target_damping_hz.is_some()),
                    &path,
                    "give exactly one of gain_n_per_v and target_damping_hz".into(),
                );
                check(
                    &mut d,
                    det.calibration_v_per_m[i] != 0.0,
                    &format!("detector.calibration_v_per_m[{i}]"),
                    format!("{} channel is active but its calibration is zero", names[i]),
                );
            }
            let dn = c.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            check(&mut d, dn > 0.0, "controller.direction", "must be nonzero".into());
            if s.dt_s > 0.0 && det.sample_rate_hz > 0.0 {
                check(
                    &mut d,
                    is_multiple(1.0 / det.sample_rate_hz, s.dt_s),
                    "detector.sample_rate_hz",
                    format!("controller period 1/{} s must be a whole number of dt_s", det.sample_rate_hz),
                );
            }
            if dn > 0.0 && det.sample_rate_hz > 0.0 {
                for msg in c.skeleton(det.sample_rate_hz, freqs).diagnostics() {
                    let key = ["x ", "y ", "z "]
                        .iter()
                        .position(|p| msg.starts_with(p))
                        .map(|i| {
                            let field = [
                                (" center frequency", ".center_hz"),
                                (" phase", ".phase_deg"),
                                (" gain", ".gain_n_per_v"),
                            ]
                            .iter()
                            .find(|(k, _)| msg[1..].starts_with(k))
                            .map_or("", |(_, f)| f);
                            format!("controller.{}{field}", names[i])
                        })
                        .unwrap_or_else(|| "controller".into());
                    d.push(Diagnostic::new(&key, msg));
                }
            }
        }

        if let Some(dr) = &self.drive {
            check(&mut d, dr.gap_m > 0.0, "drive.gap_m", "must be positive".into());
            check(&mut d, dr.frequency_hz > 0.0, "drive.frequency_hz", "must be positive".into());
            check(&mut d, dr.amplitude_v >= 0.0, "drive.amplitude_v", "must be ≥ 0".into());
            let n = dr.axis.iter().map(|v| v * v).sum::<f64>().sqrt();
            check(&mut d, (n - 1.0).abs() < 1e-9, "drive.axis", format!("must be a unit vector, |a| = {n}"));
        }
        if let Some(ch) = &self.charge {
            check(&mut d, ch.time_constant_s > 0.0, "charge.time_constant_s", "must be positive".into());
            check(
                &mut d,
                ch.min_gap_s > 0.0 && ch.mean_extra_gap_s >= 0.0,
                "charge.min_gap_s",
                "gaps must be positive".into(),
            );
            check(
                &mut d,
                ch.first_arrival_s >= 0.0 && ch.tail_s >= 0.0,
                "charge.first_arrival_s",
                "times must be ≥ 0".into(),
            );
            check(
                &mut d,
                ch.steps as u64 <= p.charge_e.unsigned_abs(),
                "charge.steps",
                format!("{} steps toward neutral exceed the initial charge {}e", ch.steps, p.charge_e),
            );
            let dwell = crate::analysis::StepOptions::default().dwell + crate::analysis::StepOptions::default().guard;
            check(
                &mut d,
                ch.min_gap_s > 2.0 * dwell * ch.time_constant_s,
                "charge.min_gap_s",
                format!("must exceed {} lock-in time constants", 2.0 * dwell),
            );
            if let Some(li) = self.lock_in() {
                if let Err(e) = li.validate(det.sample_rate_hz) {
                    d.push(Diagnostic::new("charge.time_constant_s", e.to_string()));
                }
            }
        }

        match self.scenario {
            ScenarioKind::Cool => {
                check(&mut d, self.controller.is_some(), "controller", "the cool scenario needs a controller".into());
            }
            ScenarioKind::ChargeSim => {
                check(&mut d, self.drive.is_some(), "drive", "the charge-sim scenario needs a drive".into());
                check(&mut d, self.charge.is_some(), "charge", "the charge-sim scenario needs charge settings".into());
                check(
                    &mut d,
                    p.charge_e != 0,
                    "particle.charge_e",
                    "the charge-sim scenario needs a charged particle".into(),
                );
                if s.dt_s > 0.0 && det.sample_rate_hz > 0.0 {
                    check(
                        &mut d,
                        is_multiple(1.0 / det.sample_rate_hz, s.dt_s),
                        "detector.sample_rate_hz",
                        format!("detector period 1/{} s must be a whole number of dt_s", det.sample_rate_hz),
                    );
                }
            }
            ScenarioKind::CalibrateField => {
                check(&mut d, t.mode == TrapMode::Field, "trap.mode", "calibrate-field needs mode = \"field\"".into());
            }
            ScenarioKind::Thermalize | ScenarioKind::CalibrateMass => {}
        }
        d
    }
}

fn check(d: &mut Vec<Diagnostic>, ok: bool, path: &str, msg: String) {
    if !ok {
        d.push(Diagnostic::new(path, msg));
    }
}

fn is_multiple(period: f64, dt: f64) -> bool {
    let r = period / dt;
    r.round() >= 1.0 && (r - r.round()).abs() < 1e-6 * r
}
