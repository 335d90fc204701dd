//! The fixed experiment pipelines.

use nalgebra::Vector3;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, InitialState, ScenarioKind, TrapMode};
use super::ScenarioError;
use crate::analysis::{
    damping_bound, detect_charge_steps, effective_temperature, extract_mass, fit_psd, mean_square_from_band,
    phonon_occupation, welch_psd, zero_crossing_frequency, AnalysisReport, AxisReport, AxisSamples, CalibrationReport,
    ChargeReport, FitOptions, MassReport, PsdEstimate, PsdFit, StepOptions,
};
use crate::constants::KB;
use crate::dynamics::{simulate, ChargeEvent, DriveConfig, InitialCondition, SimulationConfig, Trajectory, TrapModel};
use crate::fieldmodel::{
    calibrate_coefficients, CalibrationOptions, FieldModel, MultipoleCoefficients, Parity, Trap, TrapFrequencies,
};
use crate::particle::Particle;
use crate::rng::{stream, streams};
use crate::sensing::{closed_loop_damping, gain_for_damping, lock_in, Controller, Detector, FeedbackLoop, Plant};

pub const AXES: [&str; 3] = ["x", "y", "z"];

/// Everything a scenario produces, before it is written to disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: AnalysisReport,
    /// First ensemble member.
    pub trajectory: Option<Trajectory>,
    /// Per-axis spectra, by axis index.
    pub psd: Vec<(usize, PsdEstimate)>,
    /// Additional CSV files: name and body (header comment added on write).
    pub extra_csv: Vec<(String, String)>,
}

/// Physical setup shared by all pipelines.
struct Setup {
    particle: Particle,
    model: TrapModel,
    field: Option<Trap>,
    center: Vector3<f64>,
    freqs: TrapFrequencies,
    damping: f64,
    temperature: f64,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup, ScenarioError> {
    let particle = cfg.particle();
    let targets = TrapFrequencies::from_array(cfg.trap.frequencies_hz);
    let (model, field) = match cfg.trap.mode {
        TrapMode::Harmonic => (TrapModel::harmonic(targets), None),
        TrapMode::Field => {
            let specs = cfg.trap.term_specs();
            let coefficients = match &cfg.trap.coefficients {
                Some(c) => MultipoleCoefficients::from_specs(&specs, c)?,
                None => calibrate_coefficients(
                    &targets,
                    &particle,
                    &specs,
                    None,
                    &CalibrationOptions { validity_radius: cfg.trap.validity_radius_m, ..Default::default() },
                )?,
            };
            let trap = Trap::new(FieldModel::with_validity_radius(coefficients, cfg.trap.validity_radius_m)?, particle);
            (TrapModel::Field(Box::new(trap.clone())), Some(trap))
        }
    };
    let (center, freqs) = crate::dynamics::simulate::trap_geometry(&model)?;
    Ok(Setup {
        particle,
        model,
        field,
        center,
        freqs,
        damping: cfg.damping()?,
        temperature: cfg.environment.temperature_k,
    })
}

fn plant(s: &Setup, axis: usize) -> Plant {
    Plant { mass: s.particle.mass, omega: s.freqs.angular()[axis], damping: s.damping }
}

fn base_sim(cfg: &ExperimentConfig, s: &Setup, member: u64) -> SimulationConfig {
    let sim = &cfg.simulation;
    let mut c = SimulationConfig::new(s.model.clone(), s.particle, s.temperature, s.damping, sim.duration_s, sim.dt_s);
    c.record_every = sim.record_every();
    c.seed = cfg.seed;
    c.member = member;
    c.excess_force_psd = sim.excess_force_psd_n2_per_hz;
    c.amplitude_guard = sim.amplitude_guard_m;
    c.config_hash = cfg.hash();
    c.initial = match sim.initial {
        InitialState::Boltzmann => InitialCondition::Boltzmann,
        InitialState::Displaced => {
            InitialCondition::At { displacement: Vector3::from(sim.initial_displacement_m), velocity: Vector3::zeros() }
        }
    };
    c
}

/// Displacements of one run from a reference point, per axis.
struct Record {
    axes: [Vec<f64>; 3],
    sample_rate: f64,
}

impl Record {
    fn new(t: &Trajectory, origin: &Vector3<f64>) -> Self {
        Self {
            axes: std::array::from_fn(|a| t.position.iter().map(|p| p[a] - origin[a]).collect()),
            sample_rate: t.sample_rate(),
        }
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, ScenarioError> {
    let diags = cfg.diagnostics();
    if !diags.is_empty() {
        return Err(ScenarioError::Validation(diags));
    }
    let s = setup(cfg)?;
    match cfg.scenario {
        ScenarioKind::Thermalize | ScenarioKind::CalibrateMass => thermal(cfg, &s),
        ScenarioKind::Cool => cool(cfg, &s),
        ScenarioKind::ChargeSim => charge(cfg, &s),
        ScenarioKind::CalibrateField => calibrate_field(cfg, &s),
    }
}

fn new_report(cfg: &ExperimentConfig, s: &Setup) -> AnalysisReport {
    let hash = cfg.hash();
    let mut r = AnalysisReport::new(cfg.scenario.name(), &hash, cfg.seed, s.temperature);
    r.inputs.insert("config".into(), hash);
    r
}

/// Bins per expected linewidth when the segment length is automatic.
const BINS_PER_LINEWIDTH: f64 = 10.0;

/// Welch segment: the configured length, or enough for the expected
/// linewidth to span ten bins, shortened so every record holds at least
/// two segments.
fn segment_len(cfg: &ExperimentConfig, fs: f64, shortest: usize, gamma_hz: f64) -> Option<usize> {
    let seconds =
        cfg.analysis.segment_s.unwrap_or(if gamma_hz > 0.0 { BINS_PER_LINEWIDTH / gamma_hz } else { f64::INFINITY });
    let want = (seconds * fs).min(usize::MAX as f64 / 2.0).round() as usize;
    let cap = shortest * 2 / 3;
    let n = want.min(cap) & !1;
    (n >= 16).then_some(n)
}

/// Welch estimates averaged over independent records.
fn average_psd(records: &[&[f64]], fs: f64, seg: usize) -> Result<PsdEstimate, ScenarioError> {
    let mut total: Option<PsdEstimate> = None;
    let mut segs = 0;
    for r in records {
        let e = welch_psd(r, fs, seg)?;
        segs += e.segments;
        match &mut total {
            None => total = Some(e),
            Some(t) => {
                for (a, b) in t.psd.iter_mut().zip(&e.psd) {
                    *a += b;
                }
            }
        }
    }
    let mut t = total.ok_or_else(|| ScenarioError::Physics("no records to analyse".into()))?;
    let n = records.len() as f64;
    t.psd.iter_mut().for_each(|p| *p /= n);
    t.segments = segs;
    Ok(t)
}

fn fit_window(cfg: &ExperimentConfig, f0: f64, expected_gamma_hz: f64) -> FitOptions {
    let hw = cfg.analysis.fit_half_width_hz.unwrap_or((10.0 * expected_gamma_hz).max(2.0));
    FitOptions::around(f0, hw)
}

fn thermal(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, ScenarioError> {
    let members = cfg.simulation.members;
    let discard = cfg.simulation.discard_s;
    let runs: Vec<(Record, Option<Trajectory>)> = (0..members as u64)
        .into_par_iter()
        .map(|m| {
            let t = simulate(&base_sim(cfg, s, m), None)?.skip_until(discard);
            let rec = Record::new(&t, &s.center);
            Ok((rec, (m == 0).then_some(t)))
        })
        .collect::<Result<_, ScenarioError>>()?;
    let fs = runs[0].0.sample_rate;
    let mut report = new_report(cfg, s);
    let mut psd = Vec::new();
    let shortest = runs.iter().map(|r| r.0.axes[0].len()).min().unwrap_or(0);
    let seg = segment_len(cfg, fs, shortest, s.damping / (2.0 * PI));
    if seg.is_none() {
        report.notes.push(format!("records of {shortest} samples are too short for a spectrum"));
    }
    let omega = s.freqs.angular();
    let mut coarse = false;
    // resolved lines give the frequencies entering the mass
    let mut mass_omega: [Option<f64>; 3] = [None; 3];
    for a in 0..3 {
        let mut axis = AxisReport::default();
        let n: usize = runs.iter().map(|r| r.0.axes[a].len()).sum();
        let ms = runs.iter().flat_map(|r| r.0.axes[a].iter()).map(|x| x * x).sum::<f64>() / n as f64;
        axis.mean_square_m2 = Some(ms);
        let t_eff = effective_temperature(s.particle.mass, omega[a], ms);
        axis.effective_temperature_k = Some(t_eff);
        axis.phonon_occupation = Some(phonon_occupation(t_eff, omega[a]));
        axis.frequency_hz = Some(s.freqs.as_array()[a]);
        if let Some(seg) = seg {
            let recs: Vec<&[f64]> = runs.iter().map(|r| r.0.axes[a].as_slice()).collect();
            let est = average_psd(&recs, fs, seg)?;
            let f0 = s.freqs.as_array()[a];
            let window = fit_window(cfg, f0, s.damping / (2.0 * PI));
            if (window.band.1 - window.band.0) < 6.0 * est.resolution() {
                coarse = true;
            } else if f0 < fs / 2.0 {
                match fit_psd(&est, &window) {
                    Ok(fit) => {
                        if !fit.at_bound && fit.sigma_frequency() < 1e-3 * fit.frequency {
                            mass_omega[a] = Some(fit.omega());
                        }
                        axis.frequency_hz = Some(fit.frequency);
                        axis.mean_square_fit_m2 = Some(fit.mean_square());
                        axis.fit = Some((&fit).into());
                        if fit.at_bound {
                            report.notes.push(format!("{}: linewidth unresolved (fit at bound)", AXES[a]));
                        }
                    }
                    Err(e) => report.notes.push(format!("{}: spectrum fit failed: {e}", AXES[a])),
                }
            }
            psd.push((a, est));
        }
        report.axes.insert(AXES[a].into(), axis);
    }
    if coarse {
        report.notes.push("records too short to resolve the resonances; spectra written without fits".into());
    }
    let ys: Vec<&[f64]> = runs.iter().map(|r| r.0.axes[1].as_slice()).collect();
    let zs: Vec<&[f64]> = runs.iter().map(|r| r.0.axes[2].as_slice()).collect();
    let source = if mass_omega[1].is_some() && mass_omega[2].is_some() { "fitted" } else { "model" };
    let (wy, wz) = match (mass_omega[1], mass_omega[2]) {
        (Some(y), Some(z)) => (y, z),
        _ => (omega[1], omega[2]),
    };
    report.notes.push(format!("mass uses the {source} y and z frequencies"));
    match extract_mass(&AxisSamples::new(ys, wy), &AxisSamples::new(zs, wz), s.temperature) {
        Ok(m) => {
            if m.inconsistent {
                report.notes.push("y and z mass estimates differ by more than 3σ".into());
            }
            report.mass = Some(MassReport::from(&m));
        }
        Err(e) => {
            if cfg.scenario == ScenarioKind::CalibrateMass {
                return Err(e.into());
            }
            report.notes.push(format!("mass extraction skipped: {e}"));
        }
    }
    let trajectory = runs.into_iter().next().and_then(|r| r.1);
    Ok(Outcome { report, trajectory, psd, extra_csv: Vec::new() })
}

fn cool(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, ScenarioError> {
    let settings = cfg.controller.as_ref().expect("validated");
    let det_cfg = cfg.detector.to_config();
    let fs_ctrl = det_cfg.sample_rate;
    let mut ctrl_cfg = settings.skeleton(fs_ctrl, s.freqs.as_array());
    for (a, ch) in settings.channels().iter().enumerate() {
        if let Some(target) = ch.and_then(|c| c.target_damping_hz) {
            let g = gain_for_damping(&ctrl_cfg, &det_cfg, &plant(s, a), a, 2.0 * PI * target)?;
            ctrl_cfg.channels[a].as_mut().expect("configured").gain = g;
        }
    }
    let controller = Controller::new(ctrl_cfg.clone())?;
    // rest point under the DC beam force
    let omega = s.freqs.angular();
    let shift =
        Vector3::from_fn(|a, _| ctrl_cfg.offset * ctrl_cfg.direction[a] / (s.particle.mass * omega[a] * omega[a]));
    let origin = s.center + shift;
    let record_every_ctrl = (cfg.simulation.record_interval() * fs_ctrl).round().max(1.0) as usize;
    let discard = cfg.simulation.discard_s;

    type Run = (Record, Option<(Trajectory, FeedbackLoop)>, u64, u64);
    let runs: Vec<Run> = (0..cfg.simulation.members as u64)
        .into_par_iter()
        .map(|m| {
            let mut sim = base_sim(cfg, s, m);
            if cfg.simulation.initial == InitialState::Boltzmann {
                sim.initial = InitialCondition::BoltzmannAt { displacement: shift };
            }
            let detector = Detector::new(det_cfg.clone(), cfg.seed, m);
            let mut fb = FeedbackLoop::new(detector, controller.clone(), origin)?.record_channels(if m == 0 {
                record_every_ctrl
            } else {
                0
            });
            let t = simulate(&sim, Some(&mut fb))?.skip_until(discard);
            let rec = Record::new(&t, &origin);
            let (sat, clamp) = (fb.saturated_samples, fb.clamped_samples);
            Ok((rec, (m == 0).then_some((t, fb)), sat, clamp))
        })
        .collect::<Result<_, ScenarioError>>()?;

    let fs = runs[0].0.sample_rate;
    let mut report = new_report(cfg, s);
    let shortest = runs.iter().map(|r| r.0.axes[0].len()).min().unwrap_or(0);
    let mut expected = [(0.0, 0.0); 3];
    for (a, e) in expected.iter_mut().enumerate() {
        *e = match &ctrl_cfg.channels[a] {
            Some(ch) => (ch.center, s.damping + closed_loop_damping(&controller, &det_cfg, &plant(s, a), a)?),
            None => (s.freqs.as_array()[a], s.damping),
        };
    }
    // resolve the narrowest cooled line
    let narrowest =
        (0..3).filter(|&a| ctrl_cfg.channels[a].is_some()).map(|a| expected[a].1).fold(f64::INFINITY, f64::min);
    let seg = segment_len(cfg, fs, shortest, narrowest / (2.0 * PI))
        .ok_or_else(|| ScenarioError::Physics(format!("records of {shortest} samples are too short for a spectrum")))?;
    let mut psd = Vec::new();
    for a in 0..3 {
        let recs: Vec<&[f64]> = runs.iter().map(|r| r.0.axes[a].as_slice()).collect();
        let est = average_psd(&recs, fs, seg)?;
        let mut axis = AxisReport::default();
        let cooled = ctrl_cfg.channels[a].is_some();
        let (f0, predicted) = expected[a];
        let fit = fit_psd(&est, &fit_window(cfg, f0, predicted / (2.0 * PI)));
        let fit: Option<PsdFit> = match fit {
            Ok(f) => Some(f),
            Err(e) if cooled => return Err(e.into()),
            Err(e) => {
                report.notes.push(format!("{}: spectrum fit failed: {e}", AXES[a]));
                None
            }
        };
        axis.frequency_hz = Some(fit.as_ref().map_or(f0, |f| f.frequency));
        if fit.as_ref().is_some_and(|f| f.at_bound) {
            report.notes.push(format!("{}: fit parameter at bound (linewidth unresolved)", AXES[a]));
        }
        if cooled {
            let fit = fit.as_ref().expect("cooled axes are fitted");
            let ms = fit.mean_square();
            let band_half = cfg.analysis.band_linewidths * fit.gamma;
            let band: f64 = recs
                .iter()
                .map(|r| mean_square_from_band(r, fs, (fit.frequency - band_half, fit.frequency + band_half)))
                .collect::<Result<Vec<f64>, _>>()?
                .iter()
                .sum::<f64>()
                / recs.len() as f64;
            let t_eff = effective_temperature(s.particle.mass, fit.omega(), ms);
            axis.mean_square_m2 = Some(ms);
            axis.mean_square_fit_m2 = Some(ms);
            axis.mean_square_band_m2 = Some(band);
            axis.effective_temperature_k = Some(t_eff);
            axis.phonon_occupation = Some(phonon_occupation(t_eff, fit.omega()));
            axis.cooled_damping_rad_s = Some(fit.damping());
            axis.predicted_damping_rad_s = Some(predicted);
            axis.damping_bound_rad_s = Some(damping_bound(t_eff, s.temperature, fit.damping()));
            let mismatch = fit.damping() / predicted - 1.0;
            if mismatch.abs() > 0.05 {
                report.notes.push(format!(
                    "{}: fitted linewidth is {:+.1}% off the closed-loop pole; the cooled line is not Lorentzian \
                     when Γ′ is a sizable fraction of the resonance frequency",
                    AXES[a],
                    100.0 * mismatch
                ));
            }
        } else {
            let n: usize = recs.iter().map(|r| r.len()).sum();
            let mean = recs.iter().flat_map(|r| r.iter()).sum::<f64>() / n as f64;
            let ms = recs.iter().flat_map(|r| r.iter()).map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let w = 2.0 * PI * axis.frequency_hz.unwrap_or(f0);
            axis.mean_square_m2 = Some(ms);
            axis.effective_temperature_k = Some(effective_temperature(s.particle.mass, w, ms));
            axis.mean_square_fit_m2 = fit.as_ref().map(|f| f.mean_square());
        }
        axis.fit = fit.as_ref().map(Into::into);
        report.axes.insert(AXES[a].into(), axis);
        psd.push((a, est));
    }
    let (sat, clamp): (u64, u64) = runs.iter().fold((0, 0), |acc, r| (acc.0 + r.2, acc.1 + r.3));
    if sat > 0 {
        report.notes.push(format!("detector saturated on {sat} samples"));
    }
    if clamp > 0 {
        report.notes.push(format!("actuator command clamped on {clamp} samples"));
    }
    for (a, ch) in ctrl_cfg.channels.iter().enumerate() {
        if let Some(ch) = ch {
            report.notes.push(format!(
                "{} channel: center {} Hz, bandwidth {} Hz, phase {:.2}°, gain {:.4e} N/V",
                AXES[a], ch.center, ch.bandwidth, ch.phase_deg, ch.gain
            ));
        }
    }
    let mut extra_csv = Vec::new();
    let mut trajectory = None;
    if let Some((t, fb)) = runs.into_iter().next().and_then(|r| r.1) {
        let mut body = Vec::new();
        fb.write_channels_csv(&mut body, "").map_err(|e| ScenarioError::Physics(e.to_string()))?;
        // drop the placeholder comment line; the writer adds the provenance line
        let body = String::from_utf8(body).expect("ascii");
        extra_csv.push(("channels.csv".into(), body.split_once('\n').map_or(body.clone(), |x| x.1.to_string())));
        trajectory = Some(t);
    }
    Ok(Outcome { report, trajectory, psd, extra_csv })
}

/// Arrival times of the charge changes: a fixed dead time plus an
/// exponential wait, so arrivals are Poisson but never closer than the
/// dead time.
pub fn charge_schedule(cfg: &ExperimentConfig, member: u64) -> Vec<ChargeEvent> {
    let (Some(ch), q0) = (cfg.charge.as_ref(), cfg.particle.charge_e) else {
        return Vec::new();
    };
    let mut rng = stream(cfg.seed, member, streams::CHARGE);
    let exp = (ch.mean_extra_gap_s > 0.0).then(|| Exp::new(1.0 / ch.mean_extra_gap_s).expect("positive rate"));
    let wait = |rng: &mut rand_chacha::ChaCha8Rng| exp.as_ref().map_or(0.0, |e| e.sample(rng));
    let mut t = ch.first_arrival_s + wait(&mut rng);
    let mut events = Vec::with_capacity(ch.steps);
    for k in 1..=ch.steps as i64 {
        if k > 1 {
            t += ch.min_gap_s + wait(&mut rng);
        }
        events.push(ChargeEvent { t, charge: q0 - q0.signum() * k });
    }
    events
}

fn charge(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, ScenarioError> {
    let ch = cfg.charge.as_ref().expect("validated");
    let dr = cfg.drive.as_ref().expect("validated");
    let li = cfg.lock_in().expect("validated");
    let det_cfg = cfg.detector.to_config();
    let fs = det_cfg.sample_rate;
    let events = charge_schedule(cfg, 0);
    let last = events.last().map_or(0.0, |e| e.t);
    let mut sim = base_sim(cfg, s, 0);
    sim.duration = cfg.simulation.duration_s.max(last + ch.tail_s);
    sim.record_every = (1.0 / (fs * cfg.simulation.dt_s)).round().max(1.0) as usize;
    sim.drive = Some(DriveConfig::from_voltage(dr.amplitude_v, dr.gap_m, dr.frequency_hz, Vector3::from(dr.axis))?);
    sim.charge_events = events.clone();
    let traj = simulate(&sim, None)?;

    let channel = (0..3).max_by(|&a, &b| dr.axis[a].abs().total_cmp(&dr.axis[b].abs())).unwrap_or(1);
    let rel: Vec<[f64; 3]> =
        traj.position.iter().map(|p| [p[0] - s.center.x, p[1] - s.center.y, p[2] - s.center.z]).collect();
    let volts = Detector::new(det_cfg, cfg.seed, 0).detect_series(&rel);
    let signal: Vec<f64> = volts.iter().map(|d| d.volts[channel]).collect();
    let out = lock_in(&signal, fs, &li)?;
    let steps = detect_charge_steps(
        &out.r,
        fs,
        li.time_constant,
        &StepOptions { threshold: ch.step_threshold, ..Default::default() },
    )?;

    let mut report = new_report(cfg, s);
    report.charge = Some(ChargeReport::new(&steps, events.len()));
    if !steps.ambiguous.is_empty() {
        report.notes.push(format!("{} ambiguous level changes below threshold", steps.ambiguous.len()));
    }
    let arrivals: Vec<String> = events.iter().map(|e| format!("{:.3}", e.t)).collect();
    report.notes.push(format!("injected arrivals at [{}] s", arrivals.join(", ")));

    let mut channels = String::from("t,v_x,v_y,v_z\n");
    for (t, d) in traj.t.iter().zip(&volts) {
        let _ = writeln!(channels, "{t:e},{:e},{:e},{:e}", d.volts[0], d.volts[1], d.volts[2]);
    }
    let mut lock = String::from("t,r,phase\n");
    let every = ((fs * li.time_constant / 10.0).round() as usize).max(1);
    for k in (0..out.t.len()).step_by(every) {
        let _ = writeln!(lock, "{:e},{:e},{:e}", out.t[k], out.r[k], out.phase[k]);
    }
    let seg = segment_len(cfg, fs, traj.len(), s.damping / (2.0 * PI));
    let mut psd = Vec::new();
    if let Some(seg) = seg {
        for (a, p) in psd_axes(&traj, &s.center, seg)? {
            psd.push((a, p));
        }
    }
    Ok(Outcome {
        report,
        trajectory: Some(traj),
        psd,
        extra_csv: vec![("channels.csv".into(), channels), ("lockin.csv".into(), lock)],
    })
}

fn psd_axes(t: &Trajectory, origin: &Vector3<f64>, seg: usize) -> Result<Vec<(usize, PsdEstimate)>, ScenarioError> {
    let rec = Record::new(t, origin);
    (0..3).map(|a| Ok((a, welch_psd(&rec.axes[a], rec.sample_rate, seg)?))).collect()
}

fn calibrate_field(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, ScenarioError> {
    let trap = s.field.as_ref().expect("validated field mode");
    let eq = trap.find_equilibrium()?;
    let hessian_hz = trap.frequencies_at(&eq)?.as_array();
    let gradient = trap.field_gradient_magnitude(&eq)?;

    // small-amplitude free oscillation, no bath
    let mut sim = base_sim(cfg, s, 0);
    sim.temperature = 0.0;
    sim.damping = 0.0;
    sim.excess_force_psd = 0.0;
    let d = Vector3::from(cfg.simulation.initial_displacement_m);
    sim.initial = InitialCondition::At {
        displacement: if d == Vector3::zeros() { Vector3::repeat(1e-8) } else { d },
        velocity: Vector3::zeros(),
    };
    let traj = simulate(&sim, None)?;
    let fs = traj.sample_rate();

    let mut report = new_report(cfg, s);
    for a in 0..3 {
        let f = zero_crossing_frequency(&traj.axis(a), fs)?;
        report.axes.insert(AXES[a].into(), AxisReport { frequency_hz: Some(f), ..Default::default() });
        report.notes.push(format!(
            "{}: Hessian {:.5} Hz, simulated {:.5} Hz ({:+.3e} relative)",
            AXES[a],
            hessian_hz[a],
            f,
            f / hessian_hz[a] - 1.0
        ));
    }
    let coefficients = trap
        .field
        .coefficients()
        .terms
        .iter()
        .map(|t| (format!("{}/{}/{}", t.degree, t.order, parity_name(t.parity)), t.coefficient))
        .collect();
    report.calibration = Some(CalibrationReport {
        coefficients,
        target_hz: cfg.trap.frequencies_hz,
        achieved_hz: hessian_hz,
        equilibrium_m: [eq.x, eq.y, eq.z],
        gradient_t_per_m: gradient,
    });
    let mut psd = Vec::new();
    if let Some(seg) = segment_len(cfg, fs, traj.len(), 0.0) {
        psd = psd_axes(&traj, &eq, seg)?;
    }
    Ok(Outcome { report, trajectory: Some(traj), psd, extra_csv: Vec::new() })
}

/// Mean kinetic temperature of a record, for quick checks.
pub fn kinetic_temperature(t: &Trajectory, mass: f64, axis: usize) -> f64 {
    let v = t.velocity_axis(axis);
    mass * v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64 / KB
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Cos => "cos",
        Parity::Sin => "sin",
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every artefact of `outcome` into `dir`. Files are rendered in
/// memory first so nothing is left half written on a formatting failure.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<PathBuf>, ScenarioError> {
    let hash = cfg.hash();
    let provenance = format!("config_hash={hash} seed={}", cfg.seed);
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    if let Some(t) = &outcome.trajectory {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).map_err(|e| ScenarioError::OutputIo(e.to_string()))?;
        files.push(("trajectory.csv".into(), buf));
    }
    for (a, est) in &outcome.psd {
        let mut buf = Vec::new();
        est.write_csv(&mut buf, &format!("{provenance} axis={}", AXES[*a]))
            .map_err(|e| ScenarioError::OutputIo(e.to_string()))?;
        files.push((format!("psd_{}.csv", AXES[*a]), buf));
    }
    for (name, body) in &outcome.extra_csv {
        files.push((name.clone(), format!("# {provenance}\n{body}").into_bytes()));
    }
    files.push(("report.json".into(), outcome.report.to_json().into_bytes()));

    let checksums: BTreeMap<&str, String> = files.iter().map(|(n, b)| (n.as_str(), sha256_hex(b))).collect();
    let meta = serde_json::json!({
        "tool": "maglev",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario.name(),
        "seed": cfg.seed,
        "config_hash": hash,
        "config": cfg,
        "files": checksums,
    });
    let mut meta = serde_json::to_string_pretty(&meta).expect("meta serializes");
    meta.push('\n');
    files.push(("meta.json".into(), meta.into_bytes()));

    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::OutputIo(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| ScenarioError::OutputIo(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads and validates a config file. Returns the config and the SHA-256
/// of the file bytes.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String), ScenarioError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ScenarioError::ConfigIo(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::from_toml(&text).map_err(|d| ScenarioError::Validation(vec![d]))?;
    let diags = cfg.diagnostics();
    if !diags.is_empty() {
        return Err(ScenarioError::Validation(diags));
    }
    Ok((cfg, sha256_hex(text.as_bytes())))
}

/// Output directory and report of one run.
pub type RunResult = Result<(PathBuf, AnalysisReport), ScenarioError>;

/// Loads, runs and writes one scenario. `out` overrides the configured
/// output directory; `seed` overrides the configured seed.
pub fn run_scenario(path: &Path, out: Option<&Path>, seed: Option<u64>) -> RunResult {
    let (mut cfg, file_hash) = load_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(path.file_stem().unwrap_or_default()));
    let mut outcome = execute(&cfg)?;
    let name = path.file_name().map_or("config".into(), |n| n.to_string_lossy().into_owned());
    outcome.report.inputs.insert(name, file_hash);
    write_outputs(&dir, &cfg, &outcome)?;
    Ok((dir, outcome.report))
}

/// Runs several configs, each into `out/<file stem>`. Results keep the
/// order of `paths`.
pub fn sweep(paths: &[PathBuf], out: &Path, seed: Option<u64>) -> Vec<(PathBuf, RunResult)> {
    paths
        .par_iter()
        .map(|p| {
            let dir = out.join(p.file_stem().unwrap_or_default());
            (p.clone(), run_scenario(p, Some(&dir), seed))
        })
        .collect()
}
