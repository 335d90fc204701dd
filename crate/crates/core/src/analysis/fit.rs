use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

use super::psd::PsdEstimate;
use super::AnalysisError;

/// `A / ((f₀² − f²)² + γ²f²)`.
#[inline]
pub fn lorentzian_psd(f: f64, amplitude: f64, f0: f64, gamma: f64) -> f64 {
    let d = f0 * f0 - f * f;
    amplitude / (d * d + gamma * gamma * f * f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    /// Peak bin for f₀, half-power width for γ.
    PeakAndWidth,
    Given {
        amplitude: f64,
        frequency: f64,
        gamma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fitted window, Hz.
    pub band: (f64, f64),
    pub initial: InitialGuess,
    pub max_iterations: usize,
    /// Relative cost change that ends an iteration sequence.
    pub tolerance: f64,
}

impl FitOptions {
    pub fn new(band: (f64, f64)) -> Self {
        Self { band, initial: InitialGuess::PeakAndWidth, max_iterations: 200, tolerance: 1e-12 }
    }

    /// Window `f₀ ± half_width` around an expected resonance.
    pub fn around(f0: f64, half_width: f64) -> Self {
        Self::new(((f0 - half_width).max(0.0), f0 + half_width))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdFit {
    pub amplitude: f64,
    /// f₀, Hz.
    pub frequency: f64,
    /// γ, Hz.
    pub gamma: f64,
    /// Covariance of (A, f₀, γ).
    pub covariance: [[f64; 3]; 3],
    /// Weighted residual sum of squares per degree of freedom.
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub bins: usize,
    /// γ or f₀ ended on the edge of its allowed range.
    pub at_bound: bool,
}

impl PsdFit {
    pub fn sigma_frequency(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn sigma_gamma(&self) -> f64 {
        self.covariance[2][2].sqrt()
    }

    /// `⟨x²⟩ = ∫ PSD df = A·π/(2γf₀²)`.
    pub fn mean_square(&self) -> f64 {
        self.amplitude * PI / (2.0 * self.gamma * self.frequency * self.frequency)
    }

    /// ω = 2π f₀, rad/s.
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    /// Linewidth read as an energy damping rate, Γ′ = 2πγ, rad/s.
    pub fn damping(&self) -> f64 {
        2.0 * PI * self.gamma
    }
}

/// Fits the damped-oscillator spectrum to the bins of `est` inside the
/// window.
///
/// [`fit_curve`] treats bins as independent; neighbouring bins of a
/// windowed estimate are not, so the covariance is scaled by
/// [`PsdEstimate::bin_correlation_factor`].
pub fn fit_psd(est: &PsdEstimate, opts: &FitOptions) -> Result<PsdFit, AnalysisError> {
    let mut fit = fit_curve(&est.freq, &est.psd, est.resolution(), opts)?;
    let k = est.bin_correlation_factor();
    fit.covariance.iter_mut().flatten().for_each(|c| *c *= k);
    Ok(fit)
}

/// Weighted Levenberg–Marquardt on `(ln A, f₀, ln γ)`. Weights are the
/// data themselves on the first pass and the first-pass model on the
/// second, matching the multiplicative scatter of periodogram bins.
pub fn fit_curve(freq: &[f64], psd: &[f64], resolution: f64, opts: &FitOptions) -> Result<PsdFit, AnalysisError> {
    let (lo, hi) = opts.band;
    if !(hi > lo) {
        return Err(AnalysisError::InvalidArgument(format!("empty fit window [{lo}, {hi}] Hz")));
    }
    let (f, y): (Vec<f64>, Vec<f64>) = freq
        .iter()
        .zip(psd)
        .filter(|(f, p)| **f >= lo && **f <= hi && **f > 0.0 && **p > 0.0)
        .map(|(f, p)| (*f, *p))
        .unzip();
    if f.len() < 6 {
        return Err(AnalysisError::InsufficientData(format!("{} usable bins in [{lo}, {hi}] Hz", f.len())));
    }
    let start = match opts.initial {
        InitialGuess::Given { amplitude, frequency, gamma } => [amplitude, frequency, gamma],
        InitialGuess::PeakAndWidth => peak_and_width(&f, &y, hi - lo),
    };
    if !(start[0] > 0.0 && start[2] > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("initial guess {start:?} must have A, γ > 0")));
    }
    let bounds = Bounds {
        f0: (lo, hi),
        // narrower than a twentieth of a bin is unresolvable; report at_bound
        ln_gamma: ((resolution * 0.05).ln(), (hi - lo).ln()),
    };
    let p0 = bounds.clamp(Vector3::new(start[0].ln(), start[1], start[2].ln()));

    let w1: Vec<f64> = y.clone();
    let (p1, _, it1, _) = levenberg_marquardt(&f, &y, &w1, p0, &bounds, opts)?;
    let w2: Vec<f64> = f.iter().map(|&fk| model(fk, &p1)).collect();
    let (p, jtj, it2, cost) = levenberg_marquardt(&f, &y, &w2, p1, &bounds, opts)?;

    let dof = (f.len() - 3) as f64;
    let reduced_chi2 = cost / dof;
    let cov_p =
        jtj.try_inverse().ok_or_else(|| AnalysisError::InvalidArgument("singular normal matrix at solution".into()))?
            * reduced_chi2;
    let (a, f0, g) = (p[0].exp(), p[1], p[2].exp());
    let t = Matrix3::from_diagonal(&Vector3::new(a, 1.0, g));
    let cov = t * cov_p * t;
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = cov[(i, j)];
        }
    }
    let near = |x: f64, edge: f64, scale: f64| (x - edge).abs() <= 1e-6 * scale;
    let at_bound = near(f0, lo, hi)
        || near(f0, hi, hi)
        || near(p[2], bounds.ln_gamma.0, 1.0)
        || near(p[2], bounds.ln_gamma.1, 1.0);
    Ok(PsdFit {
        amplitude: a,
        frequency: f0,
        gamma: g,
        covariance,
        reduced_chi2,
        iterations: it1 + it2,
        bins: f.len(),
        at_bound,
    })
}

struct Bounds {
    f0: (f64, f64),
    ln_gamma: (f64, f64),
}

impl Bounds {
    fn clamp(&self, mut p: Vector3<f64>) -> Vector3<f64> {
        p[1] = p[1].clamp(self.f0.0, self.f0.1);
        p[2] = p[2].clamp(self.ln_gamma.0, self.ln_gamma.1);
        p
    }
}

fn peak_and_width(f: &[f64], y: &[f64], span: f64) -> [f64; 3] {
    let (k, &peak) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let half = peak / 2.0;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k;
        for j in range {
            if y[j] < half {
                // interpolate between prev (above) and j (below)
                let t = (y[prev] - half) / (y[prev] - y[j]);
                return Some(f[prev] + t * (f[j] - f[prev]));
            }
            prev = j;
        }
        None
    };
    let left = crossing(&mut (0..k).rev());
    let right = crossing(&mut (k + 1..f.len()));
    let gamma = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (f[k] - l),
        (None, Some(r)) => 2.0 * (r - f[k]),
        (None, None) => span / 4.0,
    }
    .max(f.get(1).map_or(span * 1e-3, |f1| f1 - f[0]) * 0.5);
    let f0 = f[k];
    [peak * gamma * gamma * f0 * f0, f0, gamma]
}

#[inline]
fn model(f: f64, p: &Vector3<f64>) -> f64 {
    lorentzian_psd(f, p[0].exp(), p[1], p[2].exp())
}

/// Residuals `(y − M)/w` and their Jacobian with respect to the parameters.
fn residuals(f: &[f64], y: &[f64], w: &[f64], p: &Vector3<f64>, jac: Option<&mut Vec<[f64; 3]>>) -> f64 {
    let a = p[0].exp();
    let (f0, g) = (p[1], p[2].exp());
    let mut cost = 0.0;
    let mut rows = jac;
    if let Some(r) = rows.as_deref_mut() {
        r.clear();
    }
    for k in 0..f.len() {
        let d = f0 * f0 - f[k] * f[k];
        let den = d * d + g * g * f[k] * f[k];
        let m = a / den;
        let r = (y[k] - m) / w[k];
        cost += r * r;
        if let Some(rows) = rows.as_deref_mut() {
            // ∂r/∂p = −(∂M/∂p)/w
            let dm = [m, -m * 4.0 * f0 * d / den, -m * 2.0 * g * g * f[k] * f[k] / den];
            rows.push(dm.map(|v| -v / w[k]));
        }
    }
    cost
}

type LmResult = (Vector3<f64>, Matrix3<f64>, usize, f64);

fn levenberg_marquardt(
    f: &[f64],
    y: &[f64],
    w: &[f64],
    p0: Vector3<f64>,
    bounds: &Bounds,
    opts: &FitOptions,
) -> Result<LmResult, AnalysisError> {
    let mut p = p0;
    let mut jac = Vec::with_capacity(f.len());
    let mut cost = residuals(f, y, w, &p, Some(&mut jac));
    let mut lambda = 1e-3;
    let mut trace = vec![cost];
    let normal = |jac: &[[f64; 3]], p: &Vector3<f64>| {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        let a = p[0].exp();
        let (f0, g) = (p[1], p[2].exp());
        for (k, row) in jac.iter().enumerate() {
            let jr = Vector3::from(*row);
            let d = f0 * f0 - f[k] * f[k];
            let m = a / (d * d + g * g * f[k] * f[k]);
            let r = (y[k] - m) / w[k];
            jtj += jr * jr.transpose();
            jtr += jr * r;
        }
        (jtj, jtr)
    };
    let (mut jtj, mut jtr) = normal(&jac, &p);
    for it in 1..=opts.max_iterations {
        let mut damped = jtj;
        for i in 0..3 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let trial = bounds.clamp(p + step);
        let trial_cost = residuals(f, y, w, &trial, None);
        if trial_cost.is_finite() && trial_cost <= cost {
            let drop = (cost - trial_cost) / cost.max(1e-300);
            let moved = (trial - p).abs().max();
            p = trial;
            cost = residuals(f, y, w, &p, Some(&mut jac));
            (jtj, jtr) = normal(&jac, &p);
            trace.push(cost);
            lambda = (lambda / 3.0).max(1e-12);
            // pinned at a bound, further progress is only creep along it
            let pinned =
                p[2] <= bounds.ln_gamma.0 || p[2] >= bounds.ln_gamma.1 || p[1] <= bounds.f0.0 || p[1] >= bounds.f0.1;
            let tol = if pinned { opts.tolerance.max(1e-6) } else { opts.tolerance };
            if drop < tol || moved < 1e-13 * (1.0 + p.abs().max()) || cost < 1e-28 {
                return Ok((p, jtj, it, cost));
            }
        } else {
            lambda *= 4.0;
            if lambda > 1e16 {
                // no descent direction left: stationary point
                return Ok((p, jtj, it, cost));
            }
        }
    }
    Err(AnalysisError::NonConvergence { iterations: opts.max_iterations, trace })
}
