use nalgebra::Vector3;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SensingError;
use crate::rng::{stream, streams};

/// Quadrant-photodiode readout. Channel order is (x, y, z): the sum
/// signal senses `x`, the left-right and top-bottom differences sense `y`
/// and `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// V/m per channel.
    pub calibration: [f64; 3],
    /// One-sided white noise PSD per channel, V²/Hz.
    pub noise_psd: [f64; 3],
    /// Hz
    pub sample_rate: f64,
    /// Output clamp, V.
    pub saturation: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { calibration: [1e6; 3], noise_psd: [0.0; 3], sample_rate: 5000.0, saturation: None }
    }
}

impl DetectorConfig {
    pub fn validate(&self, f_max: f64) -> Result<(), SensingError> {
        if !(self.sample_rate > 2.0 * f_max) {
            return Err(SensingError::Config(format!(
                "detector sample rate {} Hz must exceed twice the highest trap frequency ({} Hz)",
                self.sample_rate, f_max
            )));
        }
        if self.calibration.iter().any(|c| !c.is_finite()) || self.noise_psd.iter().any(|n| !(*n >= 0.0)) {
            return Err(SensingError::Config("detector calibration must be finite and noise ≥ 0".into()));
        }
        if let Some(s) = self.saturation {
            if !(s > 0.0) {
                return Err(SensingError::Config("saturation voltage must be positive".into()));
            }
        }
        Ok(())
    }

    /// Per-sample noise standard deviation, V.
    pub fn noise_std(&self) -> [f64; 3] {
        self.noise_psd.map(|s| (s * self.sample_rate / 2.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub volts: [f64; 3],
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct Detector {
    pub config: DetectorConfig,
    sigma: [f64; 3],
    rng: ChaCha8Rng,
}

impl Detector {
    pub fn new(config: DetectorConfig, seed: u64, member: u64) -> Self {
        Self { sigma: config.noise_std(), config, rng: stream(seed, member, streams::DETECTOR) }
    }

    pub fn detect(&mut self, position: &Vector3<f64>) -> Detection {
        let mut volts = [0.0; 3];
        let mut saturated = false;
        for a in 0..3 {
            let mut v = self.config.calibration[a] * position[a];
            if self.sigma[a] > 0.0 {
                let n: f64 = StandardNormal.sample(&mut self.rng);
                v += self.sigma[a] * n;
            }
            if let Some(s) = self.config.saturation {
                if v.abs() > s {
                    v = v.clamp(-s, s);
                    saturated = true;
                }
            }
            volts[a] = v;
        }
        Detection { volts, saturated }
    }

    /// Runs the detector over a recorded position series.
    pub fn detect_series(&mut self, positions: &[[f64; 3]]) -> Vec<Detection> {
        positions.iter().map(|p| self.detect(&Vector3::new(p[0], p[1], p[2]))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::welch_psd;

    #[test]
    fn linear_map_without_noise() {
        let cfg = DetectorConfig { calibration: [1e6, 1e6, 2e6], ..DetectorConfig::default() };
        let mut d = Detector::new(cfg, 0, 0);
        let out = d.detect(&Vector3::new(0.0, 10e-9, 1e-9));
        assert!((out.volts[1] - 0.01).abs() < 1e-15);
        assert!((out.volts[2] - 0.002).abs() < 1e-15);
        assert!(!out.saturated);
    }

    #[test]
    fn saturation_clamps_and_flags() {
        let cfg = DetectorConfig { saturation: Some(1.0), ..Default::default() };
        let mut d = Detector::new(cfg, 0, 0);
        let out = d.detect(&Vector3::new(0.0, -5e-6, 0.0));
        assert_eq!(out.volts[1], -1.0);
        assert!(out.saturated);
    }

    #[test]
    fn noise_floor_is_flat_at_configured_psd() {
        let s = 1e-8;
        let cfg = DetectorConfig { noise_psd: [s; 3], ..Default::default() };
        let fs = cfg.sample_rate;
        let mut d = Detector::new(cfg, 4, 0);
        let n = 1 << 19;
        let v: Vec<f64> = (0..n).map(|_| d.detect(&Vector3::zeros()).volts[1]).collect();
        let est = welch_psd(&v, fs, 4096).unwrap();
        let inner = &est.psd[1..est.psd.len() - 1];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((mean / s - 1.0).abs() < 0.1, "{mean:e}");
        // flat: low and high halves agree
        let h = inner.len() / 2;
        let lo = inner[..h].iter().sum::<f64>() / h as f64;
        let hi = inner[h..].iter().sum::<f64>() / (inner.len() - h) as f64;
        assert!((lo / hi - 1.0).abs() < 0.1);
    }
}
