use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::Write;

use super::AnalysisError;
use crate::dsp::Cascade;

/// One-sided power spectral density, units²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Hz
    pub freq: Vec<f64>,
    pub psd: Vec<f64>,
    pub segments: usize,
    pub segment_len: usize,
    pub sample_rate: f64,
    pub window: &'static str,
    pub overlap: f64,
}

impl PsdEstimate {
    /// Bin spacing, Hz.
    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.segment_len as f64
    }

    /// `Σ PSD·Δf`, the variance captured by the estimate.
    pub fn integral(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }

    /// Variance inflation `1 + 2·Σρₖ` for a parameter estimated smoothly
    /// across many bins, where ρₖ is the correlation between periodogram
    /// bins `k` apart. For the periodic Hann window the DFT coefficients at
    /// lag 1 and 2 correlate as −2/3 and 1/6, so ρ₁ = 4/9 and ρ₂ = 1/36.
    pub fn bin_correlation_factor(&self) -> f64 {
        match self.window {
            "hann" => 1.0 + 2.0 * (4.0 / 9.0 + 1.0 / 36.0),
            _ => 1.0,
        }
    }

    /// Frequency of the largest bin within `[lo, hi]`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.freq
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(f, _)| *f)
    }

    /// CSV with header `f_Hz,psd` after a `#` comment line.
    pub fn write_csv(&self, mut w: impl Write, comment: &str) -> std::io::Result<()> {
        writeln!(w, "# {comment}")?;
        writeln!(w, "f_Hz,psd")?;
        for (f, p) in self.freq.iter().zip(&self.psd) {
            writeln!(w, "{f:e},{p:e}")?;
        }
        Ok(())
    }
}

/// Welch estimate: Hann-windowed segments of `segment_len` samples with
/// 50% overlap, each segment mean-removed, density-normalized so that the
/// integral matches the signal variance.
pub fn welch_psd(samples: &[f64], sample_rate: f64, segment_len: usize) -> Result<PsdEstimate, AnalysisError> {
    if segment_len < 4 {
        return Err(AnalysisError::InvalidArgument(format!("segment length {segment_len} < 4")));
    }
    if !(sample_rate > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("sample rate {sample_rate} Hz")));
    }
    if samples.len() < segment_len {
        return Err(AnalysisError::InsufficientData(format!(
            "record of {} samples is shorter than one segment ({segment_len})",
            samples.len()
        )));
    }
    let step = segment_len / 2;
    let segments = (samples.len() - segment_len) / step + 1;
    if segments < 2 {
        return Err(AnalysisError::InsufficientData(format!(
            "{} samples give a single segment of {segment_len}; need at least two",
            samples.len()
        )));
    }
    // periodic Hann
    let window: Vec<f64> =
        (0..segment_len).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / segment_len as f64).cos()).collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let n_bins = segment_len / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    for s in 0..segments {
        let seg = &samples[s * step..s * step + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (sample_rate * wss * segments as f64);
    let psd: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (segment_len.is_multiple_of(2) && k == n_bins - 1) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    Ok(PsdEstimate {
        freq: (0..n_bins).map(|k| k as f64 * sample_rate / segment_len as f64).collect(),
        psd,
        segments,
        segment_len,
        sample_rate,
        window: "hann",
        overlap: 0.5,
    })
}

/// `⟨x²⟩` of the record after a zero-phase fourth-order Butterworth
/// band-pass over `band` (Hz). A non-positive lower edge is moved to
/// `1e-3 × upper`.
pub fn mean_square_from_band(samples: &[f64], sample_rate: f64, band: (f64, f64)) -> Result<f64, AnalysisError> {
    let (lo, hi) = band;
    if !(hi > lo) || !(hi > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("empty band [{lo}, {hi}] Hz")));
    }
    if hi >= sample_rate / 2.0 {
        return Err(AnalysisError::InvalidArgument(format!(
            "band edge {hi} Hz at or above Nyquist ({} Hz)",
            sample_rate / 2.0
        )));
    }
    if samples.is_empty() {
        return Err(AnalysisError::InsufficientData("empty record".into()));
    }
    let lo = if lo > 0.0 { lo } else { 1e-3 * hi };
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let filtered = Cascade::butterworth_bandpass(lo, hi, sample_rate)?.filtfilt(&centered);
    Ok(filtered.iter().map(|x| x * x).sum::<f64>() / filtered.len() as f64)
}

/// Oscillation frequency from interpolated upward mean crossings, Hz.
pub fn zero_crossing_frequency(samples: &[f64], sample_rate: f64) -> Result<f64, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::InsufficientData("empty record".into()));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let mut crossings = Vec::new();
    for (k, w) in samples.windows(2).enumerate() {
        let (a, b) = (w[0] - mean, w[1] - mean);
        if a < 0.0 && b >= 0.0 {
            crossings.push(k as f64 + a / (a - b));
        }
    }
    if crossings.len() < 2 {
        return Err(AnalysisError::InsufficientData(format!("{} upward crossings", crossings.len())));
    }
    let span = (crossings[crossings.len() - 1] - crossings[0]) / sample_rate;
    Ok((crossings.len() - 1) as f64 / span)
}
