//! Fit expansion coefficients so the trap reproduces target frequencies.

use nalgebra::{Matrix3, Vector3};

use super::{FieldError, FieldModel, MultipoleCoefficients, TermSpec, Trap, TrapFrequencies, DEFAULT_TERMS};
use crate::constants::G;
use crate::particle::Particle;

#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    pub max_iterations: usize,
    /// Stop when every `|f_model/f_target − 1|` is below this.
    pub tolerance: f64,
    /// Relative step of the finite-difference Jacobian.
    pub fd_step: f64,
    pub validity_radius: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { max_iterations: 60, tolerance: 1e-7, fd_step: 1e-6, validity_radius: super::DEFAULT_VALIDITY_RADIUS }
    }
}

/// Closed-form starting point for [`DEFAULT_TERMS`], from expanding the
/// Hessian to first order in the gravitational sag `y₀ ≈ −g/ω_y²`.
///
/// With `s = c₄y₀²/c₂` and `q = 2 − 12s`, the transverse and vertical
/// stiffnesses are `∝ c₂²(q² ± 48s)`, and the axial one comes from the
/// bent zero-field line, `ω_z² = 8g·c₃/(q·c₂)`.
pub fn default_initial_guess(targets: &TrapFrequencies, particle: &Particle) -> Result<[f64; 3], FieldError> {
    let [wx, wy, wz] = targets.angular();
    let k = Trap::new(FieldModel::zero_field(), *particle).magnetic_prefactor();
    if !(k > 0.0) {
        return Err(FieldError::Unstable("particle is not diamagnetic".into()));
    }
    let ratio = (wx / wy).powi(2);
    // 144(1−r)s² + 96r·s + 4(1−r) = 0, smaller-magnitude root
    let (a, b, c) = (144.0 * (1.0 - ratio), 96.0 * ratio, 4.0 * (1.0 - ratio));
    let disc = b * b - 4.0 * a * c;
    let s = if a.abs() < 1e-12 {
        -c / b
    } else if disc >= 0.0 {
        (-b + disc.sqrt()) / (2.0 * a)
    } else {
        return Err(FieldError::Unstable(format!(
            "no default-term solution for fx/fy = {:.4}",
            targets.fx / targets.fy
        )));
    };
    let q = 2.0 - 12.0 * s;
    let stiff = q * q - 48.0 * s;
    let c2 = (particle.mass * wy * wy / (2.0 * k * stiff)).sqrt();
    let y0 = -G / (wy * wy);
    let c4 = s * c2 / (y0 * y0);
    let c3 = wz * wz * q * c2 / (8.0 * G);
    Ok([c2, c3, c4])
}

fn model_frequencies(
    specs: &[TermSpec],
    values: &[f64],
    particle: &Particle,
    validity_radius: f64,
) -> Result<[f64; 3], FieldError> {
    let c = MultipoleCoefficients::from_specs(specs, values)?;
    let trap = Trap::new(FieldModel::with_validity_radius(c, validity_radius)?, *particle);
    Ok(trap.trap_frequencies()?.as_array())
}

/// Solves for three coefficients reproducing `targets`.
///
/// A Newton iteration on the relative frequency residuals with a
/// finite-difference Jacobian and step halving. `initial` may be omitted for
/// [`DEFAULT_TERMS`], in which case [`default_initial_guess`] is used; the
/// result is then deterministic. Because `Φ → −Φ` leaves `|B|` unchanged,
/// the solution is fixed up to a global sign; the closed-form start picks a
/// positive quadrupole coefficient.
pub fn calibrate_coefficients(
    targets: &TrapFrequencies,
    particle: &Particle,
    specs: &[TermSpec],
    initial: Option<&[f64]>,
    opts: &CalibrationOptions,
) -> Result<MultipoleCoefficients, FieldError> {
    if specs.len() != 3 {
        return Err(FieldError::InvalidCoefficients(format!(
            "calibration needs exactly three terms, got {}",
            specs.len()
        )));
    }
    if !targets.is_stable() {
        return Err(FieldError::InvalidCoefficients(format!("target frequencies must be positive: {targets:?}")));
    }
    let start: [f64; 3] = match initial {
        Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
        Some(v) => {
            return Err(FieldError::InvalidCoefficients(format!("initial guess has {} values", v.len())));
        }
        None if specs == DEFAULT_TERMS => default_initial_guess(targets, particle)?,
        None => {
            return Err(FieldError::InvalidCoefficients(
                "an initial guess is required for a non-default term selection".into(),
            ))
        }
    };
    let target = targets.as_array();
    // work in units of the starting coefficients
    let scale = start.map(|v| if v == 0.0 { 1.0 } else { v });
    let coeffs = |p: &Vector3<f64>| -> [f64; 3] { std::array::from_fn(|i| p[i] * scale[i]) };
    let residual = |p: &Vector3<f64>| -> Result<Vector3<f64>, FieldError> {
        let f = model_frequencies(specs, &coeffs(p), particle, opts.validity_radius)?;
        Ok(Vector3::from_fn(|i, _| f[i] / target[i] - 1.0))
    };

    let mut p = Vector3::from_fn(|i, _| start[i] / scale[i]);
    let mut r = residual(&p)?;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if r.amax() < opts.tolerance {
            return MultipoleCoefficients::from_specs(specs, &coeffs(&p));
        }
        iterations += 1;
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let h = opts.fd_step * p[j].abs().max(1e-3);
            let mut pp = p;
            pp[j] += h;
            let mut pm = p;
            pm[j] -= h;
            let col = (residual(&pp)? - residual(&pm)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let Some(step) = jac.lu().solve(&(-r)) else {
            break;
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial = p + step * t;
            if let Ok(rt) = residual(&trial) {
                if rt.norm() < r.norm() {
                    p = trial;
                    r = rt;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if r.amax() < opts.tolerance {
        return MultipoleCoefficients::from_specs(specs, &coeffs(&p));
    }
    Err(FieldError::Calibration { iterations, residuals: r.iter().copied().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_guess_is_in_the_basin() {
        let p = Particle::reference();
        let g = default_initial_guess(&TrapFrequencies::REFERENCE, &p).unwrap();
        assert!(g[0] > 0.0 && g[1] > 0.0 && g[2] < 0.0);
        let f = model_frequencies(&DEFAULT_TERMS, &g, &p, 1e-3).unwrap();
        // first-order start: right ordering, within a factor of two
        assert!(f[0] < f[1] && f[2] < f[0]);
        for (a, b) in f.iter().zip(TrapFrequencies::REFERENCE.as_array()) {
            assert!((a / b - 1.0).abs() < 0.5, "{f:?}");
        }
    }

    #[test]
    fn wrong_term_count_rejected() {
        let p = Particle::reference();
        let e = calibrate_coefficients(
            &TrapFrequencies::REFERENCE,
            &p,
            &DEFAULT_TERMS[..2],
            None,
            &CalibrationOptions::default(),
        );
        assert!(matches!(e, Err(FieldError::InvalidCoefficients(_))));
    }

    #[test]
    fn unreachable_targets_report_residuals() {
        let p = Particle::reference();
        let opts = CalibrationOptions { max_iterations: 2, ..Default::default() };
        let e = calibrate_coefficients(&TrapFrequencies::REFERENCE, &p, &DEFAULT_TERMS, None, &opts);
        match e {
            Err(FieldError::Calibration { residuals, .. }) => assert_eq!(residuals.len(), 3),
            other => panic!("{other:?}"),
        }
    }
}
