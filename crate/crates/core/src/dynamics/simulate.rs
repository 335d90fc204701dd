//! Orchestrates one Langevin run: trap force, damping and noise, electric
//! drive, charge changes and an optional feedback loop sampled at its own
//! rate with a zero-order hold between samples.

use nalgebra::Vector3;
use std::f64::consts::PI;

use super::integrator::{sample_boltzmann_init, Langevin, SimState, TrapModel};
use super::trajectory::{Trajectory, TrajectoryMeta};
use super::DynamicsError;
use crate::constants::E_CHARGE;
use crate::fieldmodel::TrapFrequencies;
use crate::particle::Particle;

/// Sinusoidal electric field applied between the pole pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    /// Peak field E₀, V/m.
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// Unit vector along the field.
    pub axis: Vector3<f64>,
}

impl DriveConfig {
    /// Field from an applied voltage across an effective gap.
    pub fn from_voltage(volts: f64, gap: f64, frequency: f64, axis: Vector3<f64>) -> Result<Self, DynamicsError> {
        if !(gap > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!("effective gap must be positive, got {gap} m")));
        }
        let d = Self { amplitude: volts.abs() / gap, frequency, axis };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.amplitude >= 0.0) {
            return Err(DynamicsError::InvalidParameter("drive amplitude must be ≥ 0".into()));
        }
        if !(self.frequency >= 0.0) {
            return Err(DynamicsError::InvalidParameter("drive frequency must be ≥ 0".into()));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(DynamicsError::InvalidParameter(format!(
                "drive axis must be a unit vector, |a| = {}",
                self.axis.norm()
            )));
        }
        Ok(())
    }
}

/// `F = q·E₀·sin(2π·f·t)·axis`, N.
#[inline]
pub fn electric_drive_force(charge: f64, drive: &DriveConfig, t: f64) -> Vector3<f64> {
    drive.axis * (charge * drive.amplitude * (2.0 * PI * drive.frequency * t).sin())
}

/// The particle charge becomes `charge` (in e) at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeEvent {
    pub t: f64,
    pub charge: i64,
}

/// A controller in the loop: called at `sample_rate()` with the current
/// position, returns the force to hold until the next call.
pub trait FeedbackHook {
    fn sample_rate(&self) -> f64;
    fn update(&mut self, t: f64, position: &Vector3<f64>) -> Vector3<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Thermal draw around the equilibrium at the bath temperature.
    Boltzmann,
    /// Thermal draw around a point displaced from the equilibrium, e.g. the
    /// rest point under a static external force.
    BoltzmannAt { displacement: Vector3<f64> },
    /// Displacement from equilibrium and velocity.
    At { displacement: Vector3<f64>, velocity: Vector3<f64> },
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub trap: TrapModel,
    pub particle: Particle,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Γ, rad/s.
    pub damping: f64,
    /// One-sided excess white force noise, N²/Hz.
    pub excess_force_psd: f64,
    pub drive: Option<DriveConfig>,
    pub charge_events: Vec<ChargeEvent>,
    pub duration: f64,
    pub dt: f64,
    /// Record every n-th integration step.
    pub record_every: usize,
    pub seed: u64,
    pub member: u64,
    pub initial: InitialCondition,
    /// Abort when a displacement from equilibrium exceeds this, m.
    pub amplitude_guard: Option<f64>,
    pub config_hash: String,
}

impl SimulationConfig {
    pub fn new(trap: TrapModel, particle: Particle, temperature: f64, damping: f64, duration: f64, dt: f64) -> Self {
        Self {
            trap,
            particle,
            temperature,
            damping,
            excess_force_psd: 0.0,
            drive: None,
            charge_events: Vec::new(),
            duration,
            dt,
            record_every: 1,
            seed: 0,
            member: 0,
            initial: InitialCondition::Boltzmann,
            amplitude_guard: None,
            config_hash: String::new(),
        }
    }
}

/// Equilibrium position and small-oscillation frequencies of a trap model.
pub fn trap_geometry(trap: &TrapModel) -> Result<(Vector3<f64>, TrapFrequencies), DynamicsError> {
    match trap {
        TrapModel::Harmonic { frequencies, center } => Ok((*center, *frequencies)),
        TrapModel::Field(t) => {
            let eq = t.find_equilibrium()?;
            let f = t.frequencies_at(&eq)?;
            Ok((eq, f))
        }
    }
}

/// Runs one trajectory. Identical `(config, seed, member)` give identical
/// output.
pub fn simulate(cfg: &SimulationConfig, mut hook: Option<&mut dyn FeedbackHook>) -> Result<Trajectory, DynamicsError> {
    if !(cfg.duration > 0.0) {
        return Err(DynamicsError::InvalidParameter(format!("duration must be positive, got {}", cfg.duration)));
    }
    if cfg.record_every == 0 {
        return Err(DynamicsError::InvalidParameter("record_every must be ≥ 1".into()));
    }
    if let Some(d) = &cfg.drive {
        d.validate()?;
    }
    let (center, freqs) = trap_geometry(&cfg.trap)?;
    let f_max = freqs.max();
    if f_max > 0.0 && cfg.dt > 1.0 / (50.0 * f_max) {
        return Err(DynamicsError::InvalidParameter(format!(
            "dt = {} s exceeds 1/(50·f_max) = {} s",
            cfg.dt,
            1.0 / (50.0 * f_max)
        )));
    }
    let n_steps = (cfg.duration / cfg.dt).round() as usize;
    if n_steps == 0 {
        return Err(DynamicsError::InvalidParameter("duration shorter than one step".into()));
    }
    let ctrl_every = match hook.as_deref() {
        Some(h) => {
            let ratio = 1.0 / (h.sample_rate() * cfg.dt);
            let n = ratio.round();
            if n < 1.0 || (ratio - n).abs() > 1e-6 * n {
                return Err(DynamicsError::InvalidParameter(format!(
                    "controller period 1/{} s is not an integer multiple of dt = {} s",
                    h.sample_rate(),
                    cfg.dt
                )));
            }
            n as usize
        }
        None => usize::MAX,
    };

    let mut integrator =
        Langevin::new(&cfg.particle, cfg.temperature, cfg.damping, cfg.excess_force_psd, cfg.dt, cfg.seed, cfg.member)?;
    let mut state = match &cfg.initial {
        InitialCondition::Boltzmann => {
            let s = sample_boltzmann_init(&cfg.particle, &freqs, cfg.temperature, cfg.seed, cfg.member);
            SimState::new(0.0, center + s.position, s.velocity)
        }
        InitialCondition::BoltzmannAt { displacement } => {
            let s = sample_boltzmann_init(&cfg.particle, &freqs, cfg.temperature, cfg.seed, cfg.member);
            SimState::new(0.0, center + displacement + s.position, s.velocity)
        }
        InitialCondition::At { displacement, velocity } => SimState::new(0.0, center + displacement, *velocity),
    };

    let mut events = cfg.charge_events.clone();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut next_event = 0;
    let mut charge = cfg.particle.charge as f64 * E_CHARGE;

    let n_rec = n_steps.div_ceil(cfg.record_every);
    let mut traj = Trajectory {
        t: Vec::with_capacity(n_rec),
        position: Vec::with_capacity(n_rec),
        velocity: Vec::with_capacity(n_rec),
        meta: TrajectoryMeta {
            seed: cfg.seed,
            member: cfg.member,
            config_hash: cfg.config_hash.clone(),
            dt_s: cfg.dt,
            duration_s: n_steps as f64 * cfg.dt,
            sample_period_s: cfg.dt * cfg.record_every as f64,
        },
    };

    let mut feedback = Vector3::zeros();
    for i in 0..n_steps {
        let t = i as f64 * cfg.dt;
        state.t = t;
        while next_event < events.len() && events[next_event].t <= t {
            charge = events[next_event].charge as f64 * E_CHARGE;
            next_event += 1;
        }
        if i % ctrl_every == 0 {
            if let Some(h) = hook.as_deref_mut() {
                feedback = h.update(t, &state.position);
            }
        }
        if i % cfg.record_every == 0 {
            traj.t.push(t);
            traj.position.push([state.position.x, state.position.y, state.position.z]);
            traj.velocity.push([state.velocity.x, state.velocity.y, state.velocity.z]);
        }
        let fb = feedback;
        match &cfg.drive {
            Some(d) => integrator.step(&mut state, &cfg.trap, |tt| fb + electric_drive_force(charge, d, tt))?,
            None => integrator.step(&mut state, &cfg.trap, |_| fb)?,
        }
        if let Some(guard) = cfg.amplitude_guard {
            let d = state.position - center;
            if let Some((axis, v)) = d.iter().enumerate().find(|(_, v)| v.abs() > guard) {
                return Err(DynamicsError::AmplitudeGuard { t: state.t, axis, displacement: *v });
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::KB;

    fn quiet(duration: f64) -> SimulationConfig {
        SimulationConfig::new(
            TrapModel::harmonic(TrapFrequencies::REFERENCE),
            Particle::reference(),
            0.0,
            0.0,
            duration,
            2e-5,
        )
    }

    #[test]
    fn drive_force_arithmetic() {
        let d = DriveConfig { amplitude: 100.0, frequency: 1.0, axis: Vector3::y() };
        // peak at quarter period: 100 e · 100 V/m = 1.602177e-15 N
        let f = electric_drive_force(100.0 * E_CHARGE, &d, 0.25);
        assert!((f.y - 1.602177e-15).abs() < 1e-24);
        assert_eq!(electric_drive_force(0.0, &d, 0.3), Vector3::zeros());
        let plus = electric_drive_force(E_CHARGE, &d, 0.1);
        let minus = electric_drive_force(-E_CHARGE, &d, 0.1);
        assert_eq!(plus, -minus);
    }

    #[test]
    fn undamped_displacement_is_constant_amplitude_sinusoid() {
        let mut cfg = quiet(0.5);
        cfg.initial = InitialCondition::At { displacement: Vector3::new(0.0, 1e-7, 0.0), velocity: Vector3::zeros() };
        let tr = simulate(&cfg, None).unwrap();
        let y = tr.axis(1);
        // x_n² − x_{n−1}x_{n+1} = A²sin²(ω̃dt) is invariant for a sampled sinusoid
        let inv: Vec<f64> = (1..y.len() - 1).map(|n| y[n] * y[n] - y[n - 1] * y[n + 1]).collect();
        let (lo, hi) = inv.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!((hi / lo).sqrt() - 1.0 < 1e-6, "{lo} {hi}");
        // frequency from cos(ω̃dt) = (x_{n+1} + x_{n−1}) / 2x_n at a sample far from a zero
        let n = (1..y.len() - 1).max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs())).unwrap();
        let w = ((y[n + 1] + y[n - 1]) / (2.0 * y[n])).acos() / cfg.dt;
        assert!((w / (2.0 * PI) / 96.9 - 1.0).abs() < 1e-4);
        assert_eq!(tr.axis(0).iter().copied().fold(0.0f64, |a, v| a.max(v.abs())), 0.0);
    }

    #[test]
    fn same_seed_same_bytes() {
        let mut cfg = quiet(0.05);
        cfg.temperature = 295.0;
        cfg.damping = 10.0;
        cfg.seed = 99;
        let a = simulate(&cfg, None).unwrap();
        let b = simulate(&cfg, None).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ba).unwrap();
        b.write_csv(&mut bb).unwrap();
        assert_eq!(ba, bb);
        cfg.seed = 100;
        let c = simulate(&cfg, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn quasi_static_drive_response() {
        let p = Particle::reference().with_charge(100);
        let mut cfg = quiet(4.0);
        cfg.particle = p;
        cfg.damping = 2.0 * PI * 1.0;
        cfg.initial = InitialCondition::At { displacement: Vector3::zeros(), velocity: Vector3::zeros() };
        cfg.drive = Some(DriveConfig { amplitude: 100.0, frequency: 0.5, axis: Vector3::z() });
        let tr = simulate(&cfg, None).unwrap();
        let z = tr.axis(2);
        let wz = 2.0 * PI * 7.01;
        let static_amp = 100.0 * E_CHARGE * 100.0 / (p.mass * wz * wz);
        // steady state after the transient (1/Γ ≈ 0.16 s)
        let peak = z[z.len() / 2..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((peak / static_amp - 1.0).abs() < 0.05, "{peak:e} vs {static_amp:e}");
    }

    #[test]
    fn charge_events_switch_the_drive() {
        let mut cfg = quiet(1.0);
        cfg.particle = Particle::reference().with_charge(0);
        cfg.damping = 50.0;
        cfg.initial = InitialCondition::At { displacement: Vector3::zeros(), velocity: Vector3::zeros() };
        cfg.drive = Some(DriveConfig { amplitude: 1e3, frequency: 20.0, axis: Vector3::y() });
        cfg.charge_events = vec![ChargeEvent { t: 0.5, charge: 10 }];
        let tr = simulate(&cfg, None).unwrap();
        let y = tr.axis(1);
        let half = y.len() / 2;
        assert!(y[..half].iter().all(|v| *v == 0.0));
        assert!(y[half + 100..].iter().any(|v| v.abs() > 0.0));
    }

    #[test]
    fn rejects_coarse_steps_and_misaligned_controller() {
        let mut cfg = quiet(0.1);
        cfg.dt = 1e-3;
        assert!(simulate(&cfg, None).is_err());

        struct Odd;
        impl FeedbackHook for Odd {
            fn sample_rate(&self) -> f64 {
                3000.0
            }
            fn update(&mut self, _: f64, _: &Vector3<f64>) -> Vector3<f64> {
                Vector3::zeros()
            }
        }
        let cfg = quiet(0.1);
        assert!(simulate(&cfg, Some(&mut Odd)).is_err());
    }

    #[test]
    fn thermal_position_variance_closes() {
        // Equipartition in position: ½mω²⟨x²⟩ = ½kT, ensemble of Boltzmann starts.
        let mut total = [0.0; 3];
        let mut count = 0usize;
        for member in 0..400 {
            let mut cfg = quiet(0.3);
            cfg.temperature = 295.0;
            cfg.damping = 2.0 * PI * 0.5;
            cfg.dt = 1e-4;
            cfg.record_every = 10;
            cfg.seed = 5;
            cfg.member = member;
            let tr = simulate(&cfg, None).unwrap();
            for p in &tr.position {
                for a in 0..3 {
                    total[a] += p[a] * p[a];
                }
            }
            count += tr.len();
        }
        let w = TrapFrequencies::REFERENCE.angular();
        let m = Particle::reference().mass;
        for a in 0..3 {
            let t_eff = m * w[a] * w[a] * total[a] / count as f64 / KB;
            assert!((t_eff / 295.0 - 1.0).abs() < 0.15, "axis {a}: {t_eff}");
        }
    }
}
