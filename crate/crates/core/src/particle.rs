use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::E_CHARGE;

/// Default silica density, kg/m³.
pub const SILICA_DENSITY: f64 = 2000.0;
/// Default volume susceptibility of fused silica.
pub const SILICA_CHI: f64 = -1.1e-5;
/// Mass of the reference microsphere, kg.
pub const REFERENCE_MASS: f64 = 3.10e-15;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParticleError {
    #[error("{0} must be positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("mass {mass} kg inconsistent with density·volume = {expected} kg")]
    Inconsistent { mass: f64, expected: f64 },
}

/// A trapped sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    /// kg
    pub mass: f64,
    /// m
    pub radius: f64,
    /// kg/m³
    pub density: f64,
    /// Dimensionless volume susceptibility; negative for a diamagnet.
    pub chi: f64,
    /// Charge in units of the elementary charge.
    pub charge: i64,
}

impl Particle {
    pub fn from_radius(radius: f64, density: f64, chi: f64) -> Result<Self, ParticleError> {
        check_positive("radius", radius)?;
        check_positive("density", density)?;
        Ok(Self { mass: density * sphere_volume(radius), radius, density, chi, charge: 0 })
    }

    /// Builds a sphere of known mass; the radius follows from the density.
    pub fn from_mass(mass: f64, density: f64, chi: f64) -> Result<Self, ParticleError> {
        check_positive("mass", mass)?;
        check_positive("density", density)?;
        let radius = (3.0 * mass / (4.0 * PI * density)).cbrt();
        Ok(Self { mass, radius, density, chi, charge: 0 })
    }

    /// The 3.10×10⁻¹⁵ kg silica sphere with default material constants.
    pub fn reference() -> Self {
        Self::from_mass(REFERENCE_MASS, SILICA_DENSITY, SILICA_CHI).expect("valid constants")
    }

    pub fn with_charge(mut self, charge: i64) -> Self {
        self.charge = charge;
        self
    }

    pub fn volume(&self) -> f64 {
        sphere_volume(self.radius)
    }

    pub fn charge_coulomb(&self) -> f64 {
        self.charge as f64 * E_CHARGE
    }

    pub fn is_diamagnetic(&self) -> bool {
        self.chi < 0.0
    }

    /// Checks mass = density·volume to a relative tolerance.
    pub fn validate(&self, rel_tol: f64) -> Result<(), ParticleError> {
        check_positive("mass", self.mass)?;
        check_positive("radius", self.radius)?;
        check_positive("density", self.density)?;
        let expected = self.density * self.volume();
        if ((self.mass - expected) / expected).abs() > rel_tol {
            return Err(ParticleError::Inconsistent { mass: self.mass, expected });
        }
        Ok(())
    }
}

fn sphere_volume(radius: f64) -> f64 {
    4.0 / 3.0 * PI * radius.powi(3)
}

fn check_positive(name: &'static str, v: f64) -> Result<(), ParticleError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ParticleError::NonPositive(name, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_radius_matches_density() {
        let p = Particle::reference();
        assert!(p.validate(1e-12).is_ok());
        // 3.1e-15 kg at 2000 kg/m³ is a 1.44 µm diameter sphere.
        assert!((2.0 * p.radius - 1.436e-6).abs() < 5e-9, "{}", p.radius);
    }

    #[test]
    fn from_radius_round_trips() {
        let p = Particle::from_radius(0.77e-6, 2000.0, SILICA_CHI).unwrap();
        let q = Particle::from_mass(p.mass, 2000.0, SILICA_CHI).unwrap();
        assert!((q.radius - p.radius).abs() < 1e-18);
    }

    #[test]
    fn rejects_inconsistent_mass() {
        let mut p = Particle::reference();
        p.mass *= 1.1;
        assert!(matches!(p.validate(1e-3), Err(ParticleError::Inconsistent { .. })));
        assert!(Particle::from_mass(-1.0, 2000.0, SILICA_CHI).is_err());
    }
}
