use nalgebra::Vector3;
use rustfft::num_complex::Complex64;
use std::collections::VecDeque;
use std::f64::consts::PI;

use super::detector::{Detector, DetectorConfig};
use super::SensingError;
use crate::dsp::{Biquad, BiquadState};
use crate::dynamics::FeedbackHook;

/// Filter settings for one detector channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisChannel {
    /// Hz
    pub center: f64,
    /// Hz
    pub bandwidth: f64,
    /// Phase shift at `center`, degrees in (−180, 180]. Positive values lead.
    pub phase_deg: f64,
    /// N/V
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Hz
    pub sample_rate: f64,
    /// Channels in (x, y, z) order; `None` leaves that channel out of the sum.
    pub channels: [Option<AxisChannel>; 3],
    /// Unit vector along the actuator beam.
    pub direction: Vector3<f64>,
    /// DC force F₀, N.
    pub offset: f64,
    /// Allowed command range `[F_min, F_max]`, N.
    pub bounds: (f64, f64),
    /// Output delay in samples.
    pub latency: usize,
}

impl ControllerConfig {
    /// Every violated invariant, one message each.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = self.bounds;
        if !(self.sample_rate > 0.0) {
            out.push(format!("controller sample rate must be positive, got {}", self.sample_rate));
        }
        if !(lo >= 0.0) {
            out.push(format!("F_min = {lo} N is negative; radiation pressure only pushes"));
        }
        if !(lo <= self.offset && self.offset <= hi) {
            out.push(format!("offset F0 = {} N outside [{lo}, {hi}] N", self.offset));
        }
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            out.push(format!("actuator direction must be a unit vector, |d| = {}", self.direction.norm()));
        }
        let nyquist = self.sample_rate / 2.0;
        let active: Vec<(usize, &AxisChannel)> =
            self.channels.iter().enumerate().filter_map(|(i, c)| c.as_ref().map(|c| (i, c))).collect();
        for &(i, c) in &active {
            let name = AXES[i];
            if !(c.center > 0.0 && c.center < nyquist) {
                out.push(format!("{name} center frequency {} Hz must lie in (0, {nyquist}) Hz", c.center));
            } else if let Err(e) = ChannelFilter::new(c, self.sample_rate) {
                out.push(format!("{name} channel: {e}"));
            }
            if !(c.phase_deg > -180.0 && c.phase_deg <= 180.0) {
                out.push(format!("{name} phase {}° outside (−180, 180]", c.phase_deg));
            }
            if !c.gain.is_finite() {
                out.push(format!("{name} gain must be finite"));
            }
        }
        for (k, &(i, a)) in active.iter().enumerate() {
            for &(j, b) in &active[k + 1..] {
                if (a.center - b.center).abs() <= 0.5 * (a.bandwidth + b.bandwidth) {
                    out.push(format!(
                        "{} and {} passbands overlap ({} ± {} Hz vs {} ± {} Hz)",
                        AXES[i],
                        AXES[j],
                        a.center,
                        a.bandwidth / 2.0,
                        b.center,
                        b.bandwidth / 2.0
                    ));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(SensingError::Config(d.join("; ")))
        }
    }
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Band-pass, then phase shift. A lead of φ is a sign flip plus a lag of
/// 180° − φ.
#[derive(Debug, Clone)]
struct ChannelFilter {
    bandpass: Biquad,
    shift: Biquad,
    sign: f64,
    gain: f64,
    bp_state: BiquadState,
    shift_state: BiquadState,
}

impl ChannelFilter {
    fn new(c: &AxisChannel, fs: f64) -> Result<Self, SensingError> {
        let bandpass = Biquad::bandpass(c.center, c.bandwidth, fs)?;
        let phi = c.phase_deg;
        let (sign, lag) = if phi > 0.0 { (-1.0, 180.0 - phi) } else { (1.0, -phi) };
        let shift = if lag == 0.0 || lag == 180.0 {
            Biquad::gain(if lag == 180.0 { -1.0 } else { 1.0 })
        } else {
            Biquad::allpass_lag(lag, c.center, fs)?
        };
        Ok(Self {
            bandpass,
            shift,
            sign,
            gain: c.gain,
            bp_state: BiquadState::default(),
            shift_state: BiquadState::default(),
        })
    }

    fn process(&mut self, v: f64) -> f64 {
        let b = self.bp_state.process(&self.bandpass, v);
        self.gain * self.sign * self.shift_state.process(&self.shift, b)
    }

    fn response(&self, f: f64, fs: f64) -> Complex64 {
        self.gain * self.sign * self.bandpass.response(f, fs) * self.shift.response(f, fs)
    }

    fn transfer(&self, z_inv: Complex64) -> Complex64 {
        self.gain * self.sign * self.bandpass.transfer(z_inv) * self.shift.transfer(z_inv)
    }
}

/// Streaming per-axis controller. Deterministic given its input sequence.
#[derive(Debug, Clone)]
pub struct Controller {
    pub config: ControllerConfig,
    filters: [Option<ChannelFilter>; 3],
    delay: VecDeque<[f64; 3]>,
}

impl Controller {
    pub fn new(config: ControllerConfig) -> Result<Self, SensingError> {
        config.validate()?;
        let mut filters: [Option<ChannelFilter>; 3] = [None, None, None];
        for (slot, c) in filters.iter_mut().zip(&config.channels) {
            if let Some(c) = c {
                *slot = Some(ChannelFilter::new(c, config.sample_rate)?);
            }
        }
        let delay = std::iter::repeat_n([0.0; 3], config.latency).collect();
        Ok(Self { config, filters, delay })
    }

    /// Consumes one sample of channel voltages, returns the per-axis
    /// modulation (N) emerging from the delay line.
    pub fn step(&mut self, volts: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, f) in self.filters.iter_mut().enumerate() {
            if let Some(f) = f {
                out[a] = f.process(volts[a]);
            }
        }
        if self.config.latency == 0 {
            return out;
        }
        self.delay.push_back(out);
        self.delay.pop_front().unwrap_or_default()
    }

    /// Discrete transfer function of one channel including the latency, N/V.
    pub fn channel_response(&self, axis: usize, f: f64) -> Complex64 {
        let fs = self.config.sample_rate;
        match &self.filters[axis] {
            Some(filt) => {
                filt.response(f, fs) * Complex64::from_polar(1.0, -2.0 * PI * f * self.config.latency as f64 / fs)
            }
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// [`Self::channel_response`] continued to complex `s` (rad/s).
    pub fn channel_transfer(&self, axis: usize, s: Complex64) -> Complex64 {
        let fs = self.config.sample_rate;
        match &self.filters[axis] {
            Some(filt) => filt.transfer((-s / fs).exp()) * (-s * self.config.latency as f64 / fs).exp(),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorCommand {
    pub force: Vector3<f64>,
    /// Scalar beam force after clamping, N.
    pub command: f64,
    pub clamped: bool,
}

/// `F = clamp(F₀ + Σ modulation, F_min, F_max)·direction`.
pub fn actuate(modulation: [f64; 3], cfg: &ControllerConfig) -> ActuatorCommand {
    let raw = cfg.offset + modulation.iter().sum::<f64>();
    let (lo, hi) = cfg.bounds;
    let command = raw.clamp(lo, hi);
    ActuatorCommand { force: cfg.direction * command, command, clamped: command != raw }
}

/// Continuous-time view of a closed feedback loop on one axis, valid for
/// narrowband motion near `frequency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopResponse {
    /// Force per displacement κ(ω), N/m.
    pub coupling: Complex64,
    /// Added energy damping rate g_eff, rad/s.
    pub damping: f64,
    /// Shift of ω², rad²/s².
    pub spring_shift: f64,
}

/// Zero-order hold between controller samples.
fn zoh(f: f64, fs: f64) -> Complex64 {
    let x = PI * f / fs;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    Complex64::from_polar(sinc, -x)
}

impl LoopResponse {
    pub fn new(controller: &Controller, detector: &DetectorConfig, mass: f64, axis: usize, frequency: f64) -> Self {
        let fs = controller.config.sample_rate;
        let coupling = controller.config.direction[axis]
            * detector.calibration[axis]
            * controller.channel_response(axis, frequency)
            * zoh(frequency, fs);
        let w = 2.0 * PI * frequency;
        Self { coupling, damping: -coupling.im / (mass * w), spring_shift: -coupling.re / mass }
    }
}

/// Zero-order hold as a function of complex `s`: `(1 − e^{−sT})/(sT)`.
fn zoh_s(s: Complex64, fs: f64) -> Complex64 {
    let x = s / fs;
    if x.norm() < 1e-8 {
        Complex64::new(1.0, 0.0) - x / 2.0
    } else {
        (1.0 - (-x).exp()) / x
    }
}

/// Force per displacement continued to complex `s`.
fn coupling_s(controller: &Controller, detector: &DetectorConfig, axis: usize, s: Complex64) -> Complex64 {
    let fs = controller.config.sample_rate;
    controller.config.direction[axis] * detector.calibration[axis] * controller.channel_transfer(axis, s) * zoh_s(s, fs)
}

/// The bare oscillator a channel acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub mass: f64,
    /// Trap angular frequency, rad/s.
    pub omega: f64,
    /// Gas damping Γ, rad/s.
    pub damping: f64,
}

/// Closed-loop pole of one axis: the root of `m(s² + Γs + ω₀²) = κ(s)`,
/// with the sampled controller treated as a continuous transfer function.
///
/// The root is followed from the bare oscillator pole as the loop gain is
/// ramped from zero, so it is the branch continuously connected to the
/// resonance even when the feedback is comparable to the filter bandwidth
/// and the narrowband [`LoopResponse`] no longer applies. `−2·Re s` is the
/// closed-loop energy damping Γ′.
pub fn closed_loop_pole(
    controller: &Controller,
    detector: &DetectorConfig,
    plant: &Plant,
    axis: usize,
) -> Result<Complex64, SensingError> {
    let Plant { mass, omega, damping } = *plant;
    let char_eq = |s: Complex64, lambda: f64| {
        mass * (s * s + damping * s + omega * omega) - lambda * coupling_s(controller, detector, axis, s)
    };
    let newton = |mut s: Complex64, lambda: f64| -> Option<Complex64> {
        for _ in 0..40 {
            let h = 1e-7 * s.norm();
            let df = (char_eq(s + h, lambda) - char_eq(s - h, lambda)) / (2.0 * h);
            let step = char_eq(s, lambda) / df;
            if !step.is_finite() {
                return None;
            }
            s -= step;
            if step.norm() < 1e-13 * s.norm() {
                return Some(s);
            }
        }
        None
    };
    let bare = (omega * omega - damping * damping / 4.0).max(0.0).sqrt();
    let mut s = Complex64::new(-damping / 2.0, bare);
    let (mut lambda, mut dl) = (0.0_f64, 0.05);
    while lambda < 1.0 {
        let next = (lambda + dl).min(1.0);
        // accept only small moves so the branch cannot jump
        match newton(s, next).filter(|r| (r - s).norm() < 0.2 * omega) {
            Some(r) => {
                s = r;
                lambda = next;
                dl = (dl * 1.5).min(0.1);
            }
            None if dl > 1e-6 => dl /= 4.0,
            None => {
                return Err(SensingError::Config(format!(
                    "{} resonance merges with a filter pole at {:.1}% of the loop gain; widen the bandwidth or lower the gain",
                    AXES[axis],
                    100.0 * lambda
                )))
            }
        }
    }
    Ok(s)
}

/// Feedback damping Γ′ − Γ of the closed-loop pole, rad/s.
pub fn closed_loop_damping(
    controller: &Controller,
    detector: &DetectorConfig,
    plant: &Plant,
    axis: usize,
) -> Result<f64, SensingError> {
    Ok(-2.0 * closed_loop_pole(controller, detector, plant, axis)?.re - plant.damping)
}

/// Phase setting that makes the applied force track velocity at `f`,
/// compensating the latency and the half-sample hold delay.
pub fn velocity_phase_deg(f: f64, sample_rate: f64, latency: usize) -> f64 {
    let p = 90.0 + 360.0 * f * (latency as f64 + 0.5) / sample_rate;
    // wrap to (−180, 180]
    let w = (p + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

/// Channel gain (N/V) giving feedback damping `target` (rad/s) on `axis`,
/// with the rest of the configuration as given.
///
/// Starts from the narrowband estimate `target/g_eff(unit gain)` and
/// refines it by secant iteration on the closed-loop pole, so the target
/// holds even when it is not small against the channel bandwidth.
pub fn gain_for_damping(
    config: &ControllerConfig,
    detector: &DetectorConfig,
    plant: &Plant,
    axis: usize,
    target: f64,
) -> Result<f64, SensingError> {
    let mut unit = config.clone();
    let Some(ch) = unit.channels[axis].as_mut() else {
        return Err(SensingError::Config(format!("{} channel is not configured", AXES[axis])));
    };
    ch.gain = 1.0;
    let f = ch.center;
    let resp = LoopResponse::new(&Controller::new(unit.clone())?, detector, plant.mass, axis, f);
    if resp.damping.abs() < 1e-300 {
        return Err(SensingError::Config(format!(
            "{} channel produces no damping at its center frequency",
            AXES[axis]
        )));
    }
    let residual = |g: f64| -> Result<f64, SensingError> {
        let mut c = unit.clone();
        c.channels[axis].as_mut().expect("configured").gain = g;
        Ok(closed_loop_damping(&Controller::new(c)?, detector, plant, axis)? - target)
    };
    let (mut g0, mut g1) = (target / resp.damping, 1.01 * target / resp.damping);
    let (mut r0, mut r1) = (residual(g0)?, residual(g1)?);
    for _ in 0..60 {
        if r1.abs() <= 1e-12 * target.abs() || r1 == r0 {
            return Ok(g1);
        }
        let g2 = g1 - r1 * (g1 - g0) / (r1 - r0);
        (g0, r0) = (g1, r1);
        g1 = g2;
        r1 = residual(g1)?;
    }
    if r1.abs() <= 1e-9 * target.abs() {
        return Ok(g1);
    }
    Err(SensingError::Config(format!(
        "{} channel cannot reach {:.4} Hz of feedback damping",
        AXES[axis],
        target / (2.0 * PI)
    )))
}

/// Detector, controller and actuator in one closed loop.
#[derive(Debug, Clone)]
pub struct FeedbackLoop {
    pub detector: Detector,
    pub controller: Controller,
    /// Detector zero, m.
    pub origin: Vector3<f64>,
    pub saturated_samples: u64,
    pub clamped_samples: u64,
    record_every: usize,
    calls: u64,
    /// Recorded `(t, [v_x, v_y, v_z])` when enabled.
    pub channels: Vec<(f64, [f64; 3])>,
}

impl FeedbackLoop {
    pub fn new(detector: Detector, controller: Controller, origin: Vector3<f64>) -> Result<Self, SensingError> {
        if (detector.config.sample_rate - controller.config.sample_rate).abs() > 1e-9 * controller.config.sample_rate {
            return Err(SensingError::Config(format!(
                "detector ({} Hz) and controller ({} Hz) sample rates differ",
                detector.config.sample_rate, controller.config.sample_rate
            )));
        }
        Ok(Self {
            detector,
            controller,
            origin,
            saturated_samples: 0,
            clamped_samples: 0,
            record_every: 0,
            calls: 0,
            channels: Vec::new(),
        })
    }

    /// Keep every `n`-th channel sample (0 disables recording).
    pub fn record_channels(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    /// Channels as CSV with header `t,v_x,v_y,v_z`.
    pub fn write_channels_csv(&self, mut w: impl std::io::Write, header: &str) -> std::io::Result<()> {
        writeln!(w, "# {header}")?;
        writeln!(w, "t,v_x,v_y,v_z")?;
        for (t, v) in &self.channels {
            writeln!(w, "{t:e},{:e},{:e},{:e}", v[0], v[1], v[2])?;
        }
        Ok(())
    }
}

impl FeedbackHook for FeedbackLoop {
    fn sample_rate(&self) -> f64 {
        self.controller.config.sample_rate
    }

    fn update(&mut self, t: f64, position: &Vector3<f64>) -> Vector3<f64> {
        let det = self.detector.detect(&(position - self.origin));
        if det.saturated {
            self.saturated_samples += 1;
        }
        if self.record_every > 0 && self.calls.is_multiple_of(self.record_every as u64) {
            self.channels.push((t, det.volts));
        }
        self.calls += 1;
        let cmd = actuate(self.controller.step(det.volts), &self.controller.config);
        if cmd.clamped {
            self.clamped_samples += 1;
        }
        cmd.force
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(center: f64, phase: f64, gain: f64, latency: usize) -> ControllerConfig {
        ControllerConfig {
            sample_rate: 5000.0,
            channels: [None, Some(AxisChannel { center, bandwidth: 20.0, phase_deg: phase, gain }), None],
            direction: Vector3::y(),
            offset: 0.0,
            bounds: (0.0, 1.0),
            latency,
        }
    }

    fn drive(c: &mut Controller, f: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let fs = c.config.sample_rate;
        let mut input = Vec::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let x = (2.0 * PI * f * k as f64 / fs).sin();
            input.push(x);
            out.push(c.step([0.0, x, 0.0])[1]);
        }
        (input, out)
    }

    #[test]
    fn lead_of_90_degrees_tracks_the_derivative() {
        let f0 = 96.9;
        let mut c = Controller::new(single(f0, 90.0, 2.0, 0)).unwrap();
        let n = 50_000;
        let (_, out) = drive(&mut c, f0, n);
        let fs = 5000.0;
        let mut worst: f64 = 0.0;
        for (k, y) in out.iter().enumerate().skip(n / 2) {
            let expect = 2.0 * (2.0 * PI * f0 * k as f64 / fs).cos();
            worst = worst.max((y - expect).abs());
        }
        assert!(worst < 0.01 * 2.0, "worst deviation {worst}");
    }

    #[test]
    fn response_matches_streaming_output() {
        let f0 = 50.0;
        let c0 = Controller::new(single(f0, -40.0, 1.5, 3)).unwrap();
        for &f in &[35.0, 50.0, 70.0] {
            let mut c = c0.clone();
            let (_, out) = drive(&mut c, f, 40_000);
            let h = c0.channel_response(1, f);
            let fs = 5000.0;
            for k in [30_000usize, 35_123, 39_999] {
                let expect = h.norm() * (2.0 * PI * f * k as f64 / fs + h.arg()).sin();
                assert!((out[k] - expect).abs() < 1e-6, "f={f} k={k}");
            }
        }
    }

    #[test]
    fn ten_times_center_is_attenuated_20_db() {
        let c = Controller::new(single(96.9, 90.0, 1.0, 1)).unwrap();
        let at_center = c.channel_response(1, 96.9).norm();
        let far = c.channel_response(1, 969.0).norm();
        assert!(20.0 * (far / at_center).log10() <= -20.0);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let mut c = Controller::new(single(7.01, 45.0, 3.0, 2)).unwrap();
        for k in 0..2000 {
            let x = if k < 10 { 1.0 } else { 0.0 };
            c.step([0.0, x, 0.0]);
        }
        let tail: f64 = (0..100_000).map(|_| c.step([0.0; 3])[1].abs()).last().unwrap();
        assert!(tail < 1e-12);
        let mut fresh = Controller::new(single(7.01, 45.0, 3.0, 2)).unwrap();
        assert!((0..1000).all(|_| fresh.step([0.0; 3]) == [0.0; 3]));
    }

    #[test]
    fn latency_delays_by_whole_samples() {
        let mut a = Controller::new(single(100.0, -30.0, 1.0, 0)).unwrap();
        let mut b = Controller::new(single(100.0, -30.0, 1.0, 4)).unwrap();
        let xs: Vec<f64> = (0..200).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let ya: Vec<f64> = xs.iter().map(|&x| a.step([0.0, x, 0.0])[1]).collect();
        let yb: Vec<f64> = xs.iter().map(|&x| b.step([0.0, x, 0.0])[1]).collect();
        assert_eq!(&yb[..4], &[0.0; 4]);
        assert_eq!(&yb[4..], &ya[..196]);
    }

    #[test]
    fn configuration_errors_are_named() {
        let mut cfg = single(3000.0, 0.0, 1.0, 1);
        assert!(cfg.diagnostics().iter().any(|d| d.contains("center frequency")));
        cfg = single(50.0, 0.0, 1.0, 1);
        cfg.bounds = (-1.0, 1.0);
        assert!(cfg.diagnostics().iter().any(|d| d.contains("F_min")));
        cfg = single(50.0, 0.0, 1.0, 1);
        cfg.offset = 2.0;
        assert!(cfg.diagnostics().iter().any(|d| d.contains("offset")));
        cfg = single(50.0, 0.0, 1.0, 1);
        cfg.channels[2] = Some(AxisChannel { center: 55.0, bandwidth: 20.0, phase_deg: 0.0, gain: 1.0 });
        assert!(cfg.diagnostics().iter().any(|d| d.contains("overlap")));
        assert!(single(50.0, 0.0, 1.0, 1).diagnostics().is_empty());
    }

    #[test]
    fn actuator_is_one_sided() {
        let mut cfg = single(50.0, 0.0, 1.0, 0);
        cfg.offset = 0.2;
        cfg.direction = Vector3::new(0.9, 0.3, 0.3).normalize();
        let idle = actuate([0.0; 3], &cfg);
        assert!((idle.force - cfg.direction * 0.2).norm() < 1e-15);
        assert!(!idle.clamped);
        let pull = actuate([0.0, -5.0, 0.0], &cfg);
        assert_eq!(pull.command, 0.0);
        assert!(pull.clamped);
        let small = actuate([0.0, 0.01, 0.0], &cfg);
        let ac = small.force - idle.force;
        assert!(ac.iter().all(|c| c.abs() > 0.0));
    }

    #[test]
    fn velocity_phase_compensates_delay() {
        let fs = 5000.0;
        let f = 96.9;
        let mut cfg = single(f, velocity_phase_deg(f, fs, 1), 1.0, 1);
        cfg.channels[1].as_mut().unwrap().gain = 1.0;
        let c = Controller::new(cfg).unwrap();
        let det = DetectorConfig::default();
        let r = LoopResponse::new(&c, &det, 3.1e-15, 1, f);
        // pure quadrature: spring shift negligible relative to damping term
        assert!(r.coupling.re.abs() < 1e-9 * r.coupling.norm());
        assert!(r.coupling.im > 0.0);
        // 90 + 270 wraps to 0
        assert!(velocity_phase_deg(500.0, 1000.0, 1).abs() < 1e-9);
    }

    #[test]
    fn gain_for_damping_hits_target() {
        let fs = 5000.0;
        let f = 96.9;
        let cfg = single(f, velocity_phase_deg(f, fs, 1), 1.0, 1);
        let det = DetectorConfig::default();
        let plant = Plant { mass: 3.1e-15, omega: 2.0 * PI * f, damping: 2.0 * PI * 0.01 };
        let target = 2.0 * PI * 1.0;
        let g = gain_for_damping(&cfg, &det, &plant, 1, target).unwrap();
        assert!(g < 0.0, "positive lead with positive coupling needs a negative gain");
        let mut tuned = cfg.clone();
        tuned.channels[1].as_mut().unwrap().gain = g;
        let c = Controller::new(tuned).unwrap();
        let exact = closed_loop_damping(&c, &det, &plant, 1).unwrap();
        assert!((exact / target - 1.0).abs() < 1e-9);
        // 1 Hz of damping on a 20 Hz wide channel is near the narrowband limit
        let r = LoopResponse::new(&c, &det, plant.mass, 1, f);
        assert!((r.damping / target - 1.0).abs() < 0.1, "{}", r.damping / target);
    }

    #[test]
    fn pole_approaches_narrowband_model_as_gain_vanishes() {
        let fs = 5000.0;
        let f = 96.9;
        let det = DetectorConfig::default();
        let plant = Plant { mass: 3.1e-15, omega: 2.0 * PI * f, damping: 0.0 };
        // the gap is first order in g_eff times the loop group delay
        let gap = |gain: f64| {
            let c = Controller::new(single(f, velocity_phase_deg(f, fs, 1), gain, 1)).unwrap();
            let small = LoopResponse::new(&c, &det, plant.mass, 1, f).damping;
            let exact = closed_loop_damping(&c, &det, &plant, 1).unwrap();
            assert!(small > 0.0);
            (exact / small - 1.0).abs()
        };
        let d: Vec<f64> = [-1e-18, -1e-19, -1e-20].iter().map(|&g| gap(g)).collect();
        assert!(d[1] < 0.15 * d[0] && d[2] < 0.15 * d[1], "{d:?}");
        assert!(d[2] < 1e-4, "{d:?}");
    }
}
