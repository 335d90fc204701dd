use super::AnalysisError;
use crate::constants::KB;

/// Displacements from the trap center for one axis, possibly split into
/// independent records (ensemble members or long batches).
#[derive(Debug, Clone)]
pub struct AxisSamples<'a> {
    pub segments: Vec<&'a [f64]>,
    /// rad/s
    pub omega: f64,
}

impl<'a> AxisSamples<'a> {
    pub fn new(segments: Vec<&'a [f64]>, omega: f64) -> Self {
        Self { segments, omega }
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMass {
    /// kg
    pub mass: f64,
    pub uncertainty: f64,
    /// ⟨x²⟩, m².
    pub variance: f64,
    /// Mass from the squared-displacement histogram fit, kg.
    pub histogram_mass: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    /// Average of the two axes, kg.
    pub mass: f64,
    pub uncertainty: f64,
    pub y: AxisMass,
    pub z: AxisMass,
    /// The axes disagree by more than 3σ.
    pub inconsistent: bool,
}

/// Records shorter than this many segments are re-cut into batches.
const MIN_SEGMENTS: usize = 10;
const BATCHES: usize = 20;

/// Thermal mass `m = k_B·T/(ω²·⟨x²⟩)` per axis from the maximum-likelihood
/// variance of a zero-mean Gaussian, averaged over y and z. Uncertainties
/// come from the scatter between independent segments.
pub fn extract_mass(y: &AxisSamples, z: &AxisSamples, temperature: f64) -> Result<MassEstimate, AnalysisError> {
    if !(temperature > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("temperature {temperature} K")));
    }
    let my = axis_mass(y, temperature, "y")?;
    let mz = axis_mass(z, temperature, "z")?;
    let spread = my.uncertainty.hypot(mz.uncertainty);
    Ok(MassEstimate {
        mass: 0.5 * (my.mass + mz.mass),
        uncertainty: 0.5 * spread,
        inconsistent: (my.mass - mz.mass).abs() > 3.0 * spread,
        y: my,
        z: mz,
    })
}

fn axis_mass(a: &AxisSamples, temperature: f64, name: &str) -> Result<AxisMass, AnalysisError> {
    if !(a.omega > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("{name}: ω = {} rad/s", a.omega)));
    }
    let n = a.len();
    if n < 2 * BATCHES {
        return Err(AnalysisError::InsufficientData(format!("{name}: {n} samples")));
    }
    let joined: Vec<f64>;
    let batches: Vec<&[f64]> = if a.segments.len() >= MIN_SEGMENTS {
        a.segments.iter().copied().filter(|s| !s.is_empty()).collect()
    } else {
        joined = a.segments.concat();
        joined.chunks(joined.len().div_ceil(BATCHES)).collect()
    };
    let sums: Vec<(f64, f64)> =
        batches.iter().map(|s| (s.iter().map(|x| x * x).sum::<f64>(), s.len() as f64)).collect();
    let total: f64 = sums.iter().map(|s| s.1).sum();
    let variance = sums.iter().map(|s| s.0).sum::<f64>() / total;
    if !(variance > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("{name}: zero variance")));
    }
    let k = sums.len() as f64;
    let scatter: f64 = sums.iter().map(|(s, c)| (s - c * variance).powi(2)).sum::<f64>() / (total * total);
    let sigma_var = (scatter * k / (k - 1.0)).sqrt();
    let mass = KB * temperature / (a.omega * a.omega * variance);
    let hist_var = histogram_variance(&a.segments, 40)?;
    Ok(AxisMass {
        mass,
        uncertainty: mass * sigma_var / variance,
        variance,
        histogram_mass: KB * temperature / (a.omega * a.omega * hist_var),
        samples: n,
    })
}

/// Variance from a binned maximum-likelihood fit to the histogram of x²
/// over `[0, 9⟨x²⟩]`, where x² of a Gaussian coordinate follows
/// `p(u) ∝ u^{-1/2}·exp(−u/2σ²)`.
pub fn histogram_variance(segments: &[&[f64]], bins: usize) -> Result<f64, AnalysisError> {
    let n: usize = segments.iter().map(|s| s.len()).sum();
    if n == 0 || bins < 2 {
        return Err(AnalysisError::InsufficientData("empty histogram".into()));
    }
    let moment = segments.iter().flat_map(|s| s.iter()).map(|x| x * x).sum::<f64>() / n as f64;
    if !(moment > 0.0) {
        return Err(AnalysisError::InvalidArgument("zero variance".into()));
    }
    let u_max = 9.0 * moment;
    let width = u_max / bins as f64;
    let mut counts = vec![0u64; bins];
    for u in segments.iter().flat_map(|s| s.iter()).map(|x| x * x) {
        if u < u_max {
            counts[(u / width) as usize] += 1;
        }
    }
    let cdf = |u: f64, s2: f64| libm::erf((u / (2.0 * s2)).sqrt());
    let log_like = |s2: f64| {
        let total = cdf(u_max, s2);
        counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(j, &c)| {
                let p = cdf((j + 1) as f64 * width, s2) - cdf(j as f64 * width, s2);
                c as f64 * (p / total).ln()
            })
            .sum::<f64>()
    };
    // golden-section search on [0.5, 2]·moment
    let (mut a, mut b) = (0.5 * moment, 2.0 * moment);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (log_like(c), log_like(d));
    while (b - a) > 1e-10 * moment {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = log_like(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = log_like(d);
        }
    }
    Ok(0.5 * (a + b))
}
