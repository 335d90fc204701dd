//! Particle potential `U = −χ|B|²V/(2μ₀) + m·g·y`, its force and Hessian,
//! the equilibrium search and the harmonic trap frequencies.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{FieldError, FieldModel};
use crate::constants::{G, MU0};
use crate::particle::Particle;

/// Natural frequencies `ωᵢ/2π` per axis, Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapFrequencies {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
}

impl TrapFrequencies {
    /// Reference trap: 59.6, 96.9, 7.01 Hz.
    pub const REFERENCE: Self = Self { fx: 59.6, fy: 96.9, fz: 7.01 };

    pub fn new(fx: f64, fy: f64, fz: f64) -> Self {
        Self { fx, fy, fz }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.fx, self.fy, self.fz]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn angular(&self) -> [f64; 3] {
        self.as_array().map(|f| 2.0 * PI * f)
    }

    pub fn max(&self) -> f64 {
        self.fx.max(self.fy).max(self.fz)
    }

    pub fn is_stable(&self) -> bool {
        self.as_array().iter().all(|f| *f > 0.0 && f.is_finite())
    }
}

/// Gradient-norm stop for the equilibrium search, N.
pub const EQUILIBRIUM_FORCE_TOL: f64 = 1e-24;
/// Largest |off-diagonal / diagonal| Hessian ratio accepted at equilibrium.
pub const HESSIAN_DIAGONAL_TOL: f64 = 1e-6;

/// A particle in a field model under gravity.
#[derive(Debug, Clone)]
pub struct Trap {
    pub field: FieldModel,
    pub particle: Particle,
    gravity: f64,
}

impl Trap {
    pub fn new(field: FieldModel, particle: Particle) -> Self {
        Self { field, particle, gravity: G }
    }

    /// Overrides the gravitational acceleration. Only meant for checks of
    /// the purely magnetic minimum; physical runs keep standard gravity.
    pub fn with_gravity(mut self, g: f64) -> Self {
        self.gravity = g;
        self
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    /// `−χV/(2μ₀)`, J/T². Positive for a diamagnet.
    pub fn magnetic_prefactor(&self) -> f64 {
        -self.particle.chi * self.particle.volume() / (2.0 * MU0)
    }

    /// Potential energy, J.
    pub fn potential_energy(&self, r: &Vector3<f64>) -> Result<f64, FieldError> {
        let b = self.field.b_field(r)?;
        Ok(self.magnetic_prefactor() * b.norm_squared() + self.particle.mass * self.gravity * r.y)
    }

    /// Gradient of the potential, N (the force is its negative).
    pub fn potential_gradient(&self, r: &Vector3<f64>) -> Result<Vector3<f64>, FieldError> {
        self.field.check_domain(r)?;
        let b = self.field.b_unchecked(r);
        let j = self.field.jacobian_unchecked(r);
        let mut grad = 2.0 * self.magnetic_prefactor() * j.transpose() * b;
        grad.y += self.particle.mass * self.gravity;
        Ok(grad)
    }

    /// `F = −∇U`, N.
    pub fn force(&self, r: &Vector3<f64>) -> Result<Vector3<f64>, FieldError> {
        Ok(-self.potential_gradient(r)?)
    }

    /// Hessian of the potential, N/m.
    pub fn hessian(&self, r: &Vector3<f64>) -> Result<Matrix3<f64>, FieldError> {
        self.field.check_domain(r)?;
        let b = self.field.b_unchecked(r);
        let j = self.field.jacobian_unchecked(r);
        let hk = self.field.b_hessians_unchecked(r);
        let curvature = hk[0] * b.x + hk[1] * b.y + hk[2] * b.z;
        Ok(2.0 * self.magnetic_prefactor() * (j.transpose() * j + curvature))
    }

    /// Locates the potential minimum by damped Newton descent from several
    /// starting points around the origin, keeping the lowest converged one.
    pub fn find_equilibrium(&self) -> Result<Vector3<f64>, FieldError> {
        let d = 0.01 * self.field.validity_radius();
        let starts = [
            Vector3::zeros(),
            Vector3::new(0.0, -d, 0.0),
            Vector3::new(0.0, d, 0.0),
            Vector3::new(d, -d, d),
            Vector3::new(-d, -d, -d),
            Vector3::new(0.5 * d, 0.5 * d, -0.5 * d),
        ];
        self.find_equilibrium_from(&starts)
    }

    pub fn find_equilibrium_from(&self, starts: &[Vector3<f64>]) -> Result<Vector3<f64>, FieldError> {
        let mut best: Option<(f64, Vector3<f64>)> = None;
        for s in starts {
            let Some(r) = self.descend(*s) else { continue };
            let Ok(h) = self.hessian(&r) else { continue };
            // reject saddles; allow a flat direction only when it is exactly flat
            if h.symmetric_eigenvalues().iter().any(|&e| e < 0.0) {
                continue;
            }
            let u = self.potential_energy(&r)?;
            if best.is_none_or(|(bu, _)| u < bu) {
                best = Some((u, r));
            }
        }
        best.map(|(_, r)| r).ok_or(FieldError::NoEquilibrium { starts: starts.len() })
    }

    fn descend(&self, start: Vector3<f64>) -> Option<Vector3<f64>> {
        let mut r = start;
        let mut u = self.potential_energy(&r).ok()?;
        let mut g = self.potential_gradient(&r).ok()?;
        let mut lambda = 0.0;
        for _ in 0..500 {
            if g.norm() < EQUILIBRIUM_FORCE_TOL {
                return Some(r);
            }
            let h = self.hessian(&r).ok()?;
            let scale = h.diagonal().abs().max().max(1e-300);
            let mut accepted = false;
            for _ in 0..60 {
                let damped = h + Matrix3::identity() * (lambda * scale);
                let step = match damped.cholesky() {
                    Some(ch) => ch.solve(&(-g)),
                    None => {
                        lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
                        continue;
                    }
                };
                let trial = r + step;
                let (Ok(tu), Ok(tg)) = (self.potential_energy(&trial), self.potential_gradient(&trial)) else {
                    lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
                    continue;
                };
                // energy differences sink below rounding near the minimum,
                // so a smaller gradient also counts as progress
                if tu < u || tg.norm() < g.norm() {
                    r = trial;
                    u = tu;
                    g = tg;
                    lambda *= 0.1;
                    if lambda < 1e-12 {
                        lambda = 0.0;
                    }
                    accepted = true;
                    break;
                }
                lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
            }
            if !accepted {
                return None;
            }
        }
        None
    }

    /// `ωᵢ = √(Hᵢᵢ/m)` from the Hessian at the equilibrium.
    pub fn trap_frequencies(&self) -> Result<TrapFrequencies, FieldError> {
        let r = self.find_equilibrium()?;
        self.frequencies_at(&r)
    }

    pub fn frequencies_at(&self, r: &Vector3<f64>) -> Result<TrapFrequencies, FieldError> {
        let h = self.hessian(r)?;
        let diag = h.diagonal();
        if diag.iter().any(|&d| !(d > 0.0)) {
            return Err(FieldError::Unstable(format!("non-positive curvature {:?} N/m", diag.as_slice())));
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j && h[(i, j)].abs() > HESSIAN_DIAGONAL_TOL * (diag[i] * diag[j]).sqrt() {
                    return Err(FieldError::Unstable(format!(
                        "Hessian not diagonal at equilibrium: H[{i}{j}] = {:e}",
                        h[(i, j)]
                    )));
                }
            }
        }
        let m = self.particle.mass;
        Ok(TrapFrequencies::from_array(std::array::from_fn(|i| (diag[i] / m).sqrt() / (2.0 * PI))))
    }

    /// Magnitude of `∇|B|` at `r`, T/m.
    pub fn field_gradient_magnitude(&self, r: &Vector3<f64>) -> Result<f64, FieldError> {
        let b = self.field.b_field(r)?;
        let j = self.field.jacobian_unchecked(r);
        let n = b.norm();
        if n == 0.0 {
            // direction-averaged slope along the axes
            return Ok(j.column_iter().map(|c| c.norm()).sum::<f64>() / 3.0);
        }
        Ok((j.transpose() * b / n).norm())
    }

    /// Height of the minimum of `|B|` over `y` at fixed axial position `z`
    /// (`x = 0`), searched within ±`half_span` of the origin.
    pub fn zero_field_height(&self, z: f64, half_span: f64) -> Result<f64, FieldError> {
        let f = |y: f64| -> Result<f64, FieldError> { Ok(self.field.b_field(&Vector3::new(0.0, y, z))?.norm()) };
        let (mut a, mut b) = (-half_span, half_span);
        // golden-section on a unimodal bracket
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (f(c)?, f(d)?);
        for _ in 0..200 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d)?;
            }
        }
        Ok(0.5 * (a + b))
    }
}
