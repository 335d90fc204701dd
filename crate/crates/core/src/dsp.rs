//! IIR building blocks shared by the controller and the analysis chain:
//! transposed direct-form-II biquads designed by the bilinear transform.

use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FilterError {
    #[error("frequency {freq} Hz must lie strictly between 0 and Nyquist ({nyquist} Hz)")]
    Frequency { freq: f64, nyquist: f64 },
    #[error("bandwidth must be positive, got {0} Hz")]
    Bandwidth(f64),
    #[error("filter poles outside the unit circle")]
    Unstable,
}

/// Normalized coefficients `[b0, b1, b2]`, `[a1, a2]` (a0 = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    pub const IDENTITY: Self = Self { b: [1.0, 0.0, 0.0], a: [0.0, 0.0] };

    /// Constant 0 dB peak-gain band-pass with zero phase at `center`.
    pub fn bandpass(center: f64, bandwidth: f64, fs: f64) -> Result<Self, FilterError> {
        check_freq(center, fs)?;
        if !(bandwidth > 0.0) {
            return Err(FilterError::Bandwidth(bandwidth));
        }
        let w0 = 2.0 * PI * center / fs;
        let q = center / bandwidth;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self { b: [alpha / a0, 0.0, -alpha / a0], a: [-2.0 * w0.cos() / a0, (1.0 - alpha) / a0] }.checked()
    }

    /// First-order all-pass with a phase lag of `lag_deg` ∈ (0°, 180°) at `freq`.
    pub fn allpass_lag(lag_deg: f64, freq: f64, fs: f64) -> Result<Self, FilterError> {
        check_freq(freq, fs)?;
        let lag = lag_deg.to_radians();
        let warped = (PI * freq / fs).tan();
        let p = warped / (lag / 2.0).tan();
        let a = (p - 1.0) / (p + 1.0);
        Self { b: [a, 1.0, 0.0], a: [a, 0.0] }.checked()
    }

    pub fn gain(k: f64) -> Self {
        Self { b: [k, 0.0, 0.0], a: [0.0, 0.0] }
    }

    pub fn is_stable(&self) -> bool {
        // Jury conditions for z² + a1 z + a2
        let [a1, a2] = self.a;
        a2.abs() < 1.0 && a1.abs() < 1.0 + a2
    }

    fn checked(self) -> Result<Self, FilterError> {
        if self.is_stable() && self.b.iter().chain(&self.a).all(|v| v.is_finite()) {
            Ok(self)
        } else {
            Err(FilterError::Unstable)
        }
    }

    /// Frequency response at `freq` for sample rate `fs`.
    pub fn response(&self, freq: f64, fs: f64) -> Complex64 {
        self.transfer(Complex64::from_polar(1.0, -2.0 * PI * freq / fs))
    }

    /// Transfer function at an arbitrary complex `z⁻¹`.
    pub fn transfer(&self, z_inv: Complex64) -> Complex64 {
        let z1 = z_inv;
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }
}

/// Filter state for one biquad section.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BiquadState {
    s1: f64,
    s2: f64,
}

impl BiquadState {
    #[inline]
    pub fn process(&mut self, f: &Biquad, x: f64) -> f64 {
        let y = f.b[0] * x + self.s1;
        self.s1 = f.b[1] * x - f.a[0] * y + self.s2;
        self.s2 = f.b[2] * x - f.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// A cascade of biquad sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub sections: Vec<Biquad>,
}

impl Cascade {
    /// Butterworth band-pass between `low` and `high` Hz built from a
    /// second-order low-pass prototype (fourth order overall).
    pub fn butterworth_bandpass(low: f64, high: f64, fs: f64) -> Result<Self, FilterError> {
        check_freq(low, fs)?;
        check_freq(high, fs)?;
        if !(high > low) {
            return Err(FilterError::Bandwidth(high - low));
        }
        // prewarped analog edges (bilinear with s = 2fs(1 − z⁻¹)/(1 + z⁻¹))
        let k = 2.0 * fs;
        let wl = k * (PI * low / fs).tan();
        let wh = k * (PI * high / fs).tan();
        let w0 = (wl * wh).sqrt();
        let bw = wh - wl;
        // second-order Butterworth poles, s = e^{±i3π/4}
        let proto = [Complex64::from_polar(1.0, 3.0 * PI / 4.0), Complex64::from_polar(1.0, -3.0 * PI / 4.0)];
        // LP→BP: each prototype pole p maps to the roots of s² − p·bw·s + w0² = 0
        let mut poles = Vec::with_capacity(4);
        for p in proto {
            let b = p * bw;
            let disc = (b * b - 4.0 * w0 * w0).sqrt();
            poles.push((b + disc) / 2.0);
            poles.push((b - disc) / 2.0);
        }
        // keep upper-half-plane poles; each pairs with its conjugate
        let upper: Vec<Complex64> = poles.into_iter().filter(|p| p.im > 0.0).collect();
        if upper.len() != 2 {
            return Err(FilterError::Unstable);
        }
        // each section: zeros at s = 0 and s = ∞ (→ z = 1 and z = −1)
        let mut sections = Vec::with_capacity(2);
        for p in upper {
            let zp = (k + p) / (k - p);
            let a1 = -2.0 * zp.re;
            let a2 = zp.norm_sqr();
            sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [a1, a2] });
        }
        let mut cascade = Self { sections };
        // unit gain at the geometric center frequency
        let fc = (w0 / k).atan() * fs / PI;
        let g = cascade.response(fc, fs).norm();
        let per = g.sqrt();
        for s in &mut cascade.sections {
            s.b = s.b.map(|v| v / per);
        }
        for s in &cascade.sections {
            if !s.is_stable() {
                return Err(FilterError::Unstable);
            }
        }
        Ok(cascade)
    }

    pub fn response(&self, freq: f64, fs: f64) -> Complex64 {
        self.sections.iter().map(|s| s.response(freq, fs)).product()
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for s in &self.sections {
            let mut st = BiquadState::default();
            for v in out.iter_mut() {
                *v = st.process(s, *v);
            }
        }
        out
    }

    /// Forward-backward filtering: zero phase, squared magnitude response.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.filter(x);
        y.reverse();
        let mut z = self.filter(&y);
        z.reverse();
        z
    }
}

fn check_freq(freq: f64, fs: f64) -> Result<(), FilterError> {
    let nyquist = fs / 2.0;
    if freq > 0.0 && freq < nyquist {
        Ok(())
    } else {
        Err(FilterError::Frequency { freq, nyquist })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandpass_unity_zero_phase_at_center() {
        let f = Biquad::bandpass(96.9, 20.0, 5000.0).unwrap();
        let h = f.response(96.9, 5000.0);
        assert!((h.norm() - 1.0).abs() < 1e-12);
        assert!(h.arg().abs() < 1e-12);
    }

    #[test]
    fn allpass_hits_requested_lag() {
        for lag in [10.0, 45.0, 90.0, 170.0] {
            let f = Biquad::allpass_lag(lag, 96.9, 5000.0).unwrap();
            let h = f.response(96.9, 5000.0);
            assert!((h.norm() - 1.0).abs() < 1e-12);
            assert!((h.arg().to_degrees() + lag).abs() < 1e-9, "{lag}: {}", h.arg().to_degrees());
        }
    }

    #[test]
    fn rejects_bad_designs() {
        assert!(Biquad::bandpass(3000.0, 10.0, 5000.0).is_err());
        assert!(Biquad::bandpass(10.0, -1.0, 5000.0).is_err());
        let unstable = Biquad { b: [1.0, 0.0, 0.0], a: [0.0, 1.2] };
        assert!(!unstable.is_stable());
    }

    #[test]
    fn butterworth_edges_at_half_power() {
        let fs = 1000.0;
        let c = Cascade::butterworth_bandpass(90.0, 110.0, fs).unwrap();
        for edge in [90.0, 110.0] {
            let g = c.response(edge, fs).norm();
            assert!((g - 0.5f64.sqrt()).abs() < 1e-9, "{edge}: {g}");
        }
        assert!(c.response(300.0, fs).norm() < 1e-2);
    }

    #[test]
    fn biquad_state_matches_response() {
        let fs = 1000.0;
        let f = Biquad::bandpass(50.0, 10.0, fs);
        let f = f.unwrap();
        let mut st = BiquadState::default();
        let n = 20000;
        let out: Vec<f64> = (0..n).map(|i| st.process(&f, (2.0 * PI * 60.0 * i as f64 / fs).sin())).collect();
        let amp = out[n - 1000..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((amp - f.response(60.0, fs).norm()).abs() < 1e-3);
    }
}
