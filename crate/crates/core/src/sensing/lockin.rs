use std::f64::consts::PI;

use super::SensingError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockInConfig {
    /// Hz
    pub reference: f64,
    /// s
    pub time_constant: f64,
}

impl LockInConfig {
    /// Smallest accepted `reference × time_constant`.
    pub const MIN_CYCLES: f64 = 10.0;

    pub fn validate(&self, sample_rate: f64) -> Result<(), SensingError> {
        if !(self.reference > 0.0 && self.reference < sample_rate / 2.0) {
            return Err(SensingError::Config(format!(
                "lock-in reference {} Hz must lie in (0, {}) Hz",
                self.reference,
                sample_rate / 2.0
            )));
        }
        if !(self.time_constant * self.reference >= Self::MIN_CYCLES) {
            return Err(SensingError::Config(format!(
                "lock-in time constant {} s must span at least {} reference periods",
                self.time_constant,
                Self::MIN_CYCLES
            )));
        }
        Ok(())
    }

    /// Per-sample smoothing factor of the one-pole low-pass.
    pub fn alpha(&self, sample_rate: f64) -> f64 {
        1.0 - (-1.0 / (sample_rate * self.time_constant)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockInOutput {
    pub t: Vec<f64>,
    /// Amplitude, input units.
    pub r: Vec<f64>,
    /// Phase relative to `cos(2π f t)`, rad.
    pub phase: Vec<f64>,
}

/// Demodulates `signal` (sampled at `sample_rate`, starting at t = 0) at
/// the reference frequency through a one-pole low-pass. For
/// `A cos(2πft + φ)` the output settles to `R = A` and phase `φ`.
pub fn lock_in(signal: &[f64], sample_rate: f64, cfg: &LockInConfig) -> Result<LockInOutput, SensingError> {
    cfg.validate(sample_rate)?;
    let duration = signal.len() as f64 / sample_rate;
    let needed = 5.0 * cfg.time_constant;
    if duration < needed {
        return Err(SensingError::RecordTooShort { duration, needed });
    }
    let alpha = cfg.alpha(sample_rate);
    let w = 2.0 * PI * cfg.reference / sample_rate;
    let (mut i, mut q) = (0.0, 0.0);
    let mut out = LockInOutput {
        t: Vec::with_capacity(signal.len()),
        r: Vec::with_capacity(signal.len()),
        phase: Vec::with_capacity(signal.len()),
    };
    for (k, &s) in signal.iter().enumerate() {
        let (sin, cos) = (w * k as f64).sin_cos();
        i += alpha * (2.0 * s * cos - i);
        q += alpha * (-2.0 * s * sin - q);
        out.t.push(k as f64 / sample_rate);
        out.r.push(i.hypot(q));
        out.phase.push(q.atan2(i));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;

    const FS: f64 = 2000.0;

    fn tone(a: f64, f: f64, phi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a * (2.0 * PI * f * k as f64 / FS + phi).cos()).collect()
    }

    #[test]
    fn settles_to_amplitude_and_phase() {
        let cfg = LockInConfig { reference: 50.0, time_constant: 1.0 };
        let out = lock_in(&tone(0.3, 50.0, 0.4, 30_000), FS, &cfg).unwrap();
        for k in 20_000..30_000 {
            assert!((out.r[k] / 0.3 - 1.0).abs() < 0.005);
        }
        assert!((out.phase[29_999] - 0.4).abs() < 0.01);
    }

    #[test]
    fn offset_tone_follows_low_pass_response() {
        let tau = 1.0;
        let cfg = LockInConfig { reference: 100.0, time_constant: tau };
        let df = 10.0 / tau;
        let out = lock_in(&tone(1.0, 100.0 + df, 0.0, 40_000), FS, &cfg).unwrap();
        let a = cfg.alpha(FS);
        let z = Complex64::from_polar(1.0, -2.0 * PI * df / FS);
        let expect = (a / (1.0 - (1.0 - a) * z)).norm();
        let tail = &out.r[20_000..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean / expect - 1.0).abs() < 0.02, "{mean} vs {expect}");
        assert!(expect < 0.02);
    }

    #[test]
    fn staircase_steps_with_time_constant() {
        let tau = 0.5;
        let cfg = LockInConfig { reference: 40.0, time_constant: tau };
        let n_step = (6.0 * tau * FS) as usize;
        let levels = [3.0, 2.0, 1.0, 0.0];
        let sig: Vec<f64> =
            (0..levels.len() * n_step).map(|k| levels[k / n_step] * (2.0 * PI * 40.0 * k as f64 / FS).cos()).collect();
        let out = lock_in(&sig, FS, &cfg).unwrap();
        for s in 1..levels.len() {
            let start = s * n_step;
            let before = levels[s - 1];
            let after = levels[s];
            assert!((out.r[start - 1] - before).abs() < 0.02 * levels[0]);
            let one_tau = out.r[start + (tau * FS) as usize];
            let expect = after + (before - after) * (-1.0f64).exp();
            assert!((one_tau - expect).abs() < 0.02 * levels[0], "step {s}: {one_tau} vs {expect}");
        }
        assert!(out.r[out.r.len() - 1] < 0.01 * levels[0]);
    }

    #[test]
    fn short_record_is_rejected() {
        let cfg = LockInConfig { reference: 50.0, time_constant: 1.0 };
        assert!(matches!(lock_in(&tone(1.0, 50.0, 0.0, 9000), FS, &cfg), Err(SensingError::RecordTooShort { .. })));
        let fast = LockInConfig { reference: 50.0, time_constant: 0.01 };
        assert!(fast.validate(FS).is_err());
    }
}
