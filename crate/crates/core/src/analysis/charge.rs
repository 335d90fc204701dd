use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// |t| above which a level change is accepted.
    pub threshold: f64,
    /// |t| above which a rejected change is still reported as ambiguous.
    pub ambiguous_threshold: f64,
    /// Comparison window and minimum spacing between steps, in time constants.
    pub dwell: f64,
    /// Gap skipped around a transition, in time constants.
    pub guard: f64,
    /// Changes smaller than this are ignored, input units.
    pub min_step: f64,
    /// Response per elementary charge; estimated from the steps when `None`.
    pub quantum: Option<f64>,
    /// Allowed relative deviation of a step from one quantum.
    pub quantum_tolerance: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            threshold: 8.0,
            ambiguous_threshold: 4.0,
            dwell: 5.0,
            guard: 3.0,
            min_step: 0.0,
            quantum: None,
            quantum_tolerance: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeStep {
    /// Onset time, s.
    pub t: f64,
    pub before: f64,
    pub after: f64,
    pub t_stat: f64,
    /// Signed change in units of the quantum.
    pub quanta: i64,
    /// Size is not within tolerance of a whole number of quanta, or more
    /// than one quantum.
    pub irregular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSteps {
    pub steps: Vec<ChargeStep>,
    /// Candidate changes between the ambiguous and the accept threshold:
    /// `(t, t_stat)`.
    pub ambiguous: Vec<(f64, f64)>,
    /// Plateau levels; one more than the number of steps.
    pub levels: Vec<f64>,
    pub quantum: Option<f64>,
    pub final_level: f64,
    /// Final plateau is below half a quantum.
    pub reached_zero: bool,
    /// Onset of the step into the zero plateau, s.
    pub zero_time: Option<f64>,
}

/// Changepoints in a lock-in amplitude record by a rolling two-sample
/// t-test. The record is block-averaged to half a time constant, the first
/// `dwell` time constants (filter warm-up) are skipped, and each candidate
/// compares `dwell`-long windows on either side of a `guard` gap.
pub fn detect_charge_steps(
    r: &[f64],
    sample_rate: f64,
    time_constant: f64,
    opts: &StepOptions,
) -> Result<ChargeSteps, AnalysisError> {
    if !(sample_rate > 0.0 && time_constant > 0.0) {
        return Err(AnalysisError::InvalidArgument("sample rate and time constant must be positive".into()));
    }
    let block = ((0.5 * time_constant * sample_rate).round() as usize).max(1);
    let dt = block as f64 / sample_rate;
    let w = ((opts.dwell * time_constant / dt).round() as usize).max(2);
    let g = (opts.guard * time_constant / dt).round() as usize;
    let skip = w;
    let s: Vec<f64> = r.chunks_exact(block).skip(skip).map(|c| c.iter().sum::<f64>() / block as f64).collect();
    let t0 = skip as f64 * dt;
    let time = |i: f64| t0 + i * dt;
    if s.len() < 2 * w + g + 1 {
        return Err(AnalysisError::InsufficientData(format!(
            "{:.1} s of record after warm-up; need {:.1} s",
            s.len() as f64 * dt,
            (2 * w + g + 1) as f64 * dt
        )));
    }

    // global noise floor from successive differences (robust)
    let mut diffs: Vec<f64> = s.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
    diffs.sort_by(f64::total_cmp);
    let floor = diffs[diffs.len() / 2] / (0.6745 * 2f64.sqrt());
    let floor2 = (floor * floor).max(f64::MIN_POSITIVE);
    // blocks at τ/2 are correlated over ~2 samples
    let w_eff = (w as f64 / 2.0).max(1.0);

    let n_pos = s.len() - 2 * w - g + 1;
    let mut stats = Vec::with_capacity(n_pos);
    for i in w..w + n_pos {
        let before = &s[i - w..i];
        let after = &s[i + g..i + g + w];
        let (mb, vb) = mean_var(before);
        let (ma, va) = mean_var(after);
        let se = ((vb.max(floor2) + va.max(floor2)) / w_eff).sqrt();
        stats.push((i, (ma - mb) / se, ma - mb));
    }

    // non-maximum suppression with radius w
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| stats[b].1.abs().total_cmp(&stats[a].1.abs()).then(a.cmp(&b)));
    let mut taken: Vec<(usize, f64)> = Vec::new();
    let mut ambiguous = Vec::new();
    for k in order {
        let (i, t, delta) = stats[k];
        if t.abs() < opts.ambiguous_threshold {
            break;
        }
        if taken.iter().any(|(j, _)| i.abs_diff(*j) < w)
            || ambiguous.iter().any(|(j, _): &(usize, f64)| i.abs_diff(*j) < w)
        {
            continue;
        }
        if t.abs() >= opts.threshold && delta.abs() >= opts.min_step {
            taken.push((i, t));
        } else {
            ambiguous.push((i, t));
        }
    }
    taken.sort_by_key(|x| x.0);

    // plateau levels between accepted changes
    let mut bounds = vec![0usize];
    for (i, _) in &taken {
        bounds.push(*i);
    }
    bounds.push(s.len());
    let mut levels = Vec::with_capacity(taken.len() + 1);
    for k in 0..bounds.len() - 1 {
        let start = if k == 0 { 0 } else { bounds[k] + g };
        let end = bounds[k + 1].max(start + 1).min(s.len());
        levels.push(median(&s[start.min(end - 1)..end]));
    }

    let quantum = opts.quantum.or_else(|| {
        let mut d: Vec<f64> = levels.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
        if d.is_empty() {
            return None;
        }
        d.sort_by(f64::total_cmp);
        Some(d[d.len() / 2])
    });

    let mut steps = Vec::with_capacity(taken.len());
    for (k, (i, t_stat)) in taken.iter().enumerate() {
        let (before, after) = (levels[k], levels[k + 1]);
        // onset: midpoint crossing minus τ·ln 2 for a one-pole response
        let mid = 0.5 * (before + after);
        let up = after > before;
        let lo = i.saturating_sub(2);
        let hi = (i + g + 2).min(s.len() - 1);
        let cross = (lo..hi)
            .find(|&j| if up { s[j] <= mid && s[j + 1] > mid } else { s[j] >= mid && s[j + 1] < mid })
            .map(|j| j as f64 + (mid - s[j]) / (s[j + 1] - s[j]) + 0.5)
            .unwrap_or(*i as f64 + 0.5 * g as f64);
        let onset = time(cross) - time_constant * std::f64::consts::LN_2;
        let (quanta, irregular) = match quantum {
            Some(q) if q > 0.0 => {
                let n = (after - before) / q;
                let whole = n.round();
                (whole as i64, (n - whole).abs() > opts.quantum_tolerance || whole.abs() != 1.0)
            }
            _ => (0, true),
        };
        steps.push(ChargeStep { t: onset, before, after, t_stat: *t_stat, quanta, irregular });
    }
    let final_level = *levels.last().unwrap();
    let reached_zero = match quantum {
        Some(q) => final_level.abs() < 0.5 * q,
        None => false,
    };
    Ok(ChargeSteps {
        zero_time: if reached_zero && !steps.is_empty() { Some(steps[steps.len() - 1].t) } else { None },
        ambiguous: ambiguous.iter().map(|(i, t)| (time(*i as f64), *t)).collect(),
        steps,
        levels,
        quantum,
        final_level,
        reached_zero,
    })
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
