use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::DynamicsError;
use crate::constants::{KB, N2_DIAMETER, N2_MASS};
use crate::particle::Particle;

/// Smallest Knudsen number (mean free path / radius) for which the
/// free-molecular drag law is used.
pub const MIN_KNUDSEN: f64 = 10.0;

/// Gas–surface accommodation model for Epstein drag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Accommodation {
    /// Full diffuse re-emission: δ = 1 + π/8.
    #[default]
    Diffuse,
    /// Specular reflection: δ = 1.
    Specular,
}

impl Accommodation {
    /// Epstein coefficient `c_E = (8/π)·δ`.
    pub fn epstein_coefficient(self) -> f64 {
        let delta = match self {
            Accommodation::Diffuse => 1.0 + PI / 8.0,
            Accommodation::Specular => 1.0,
        };
        8.0 / PI * delta
    }
}

/// The residual gas bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// K
    pub temperature: f64,
    /// Pa
    pub pressure: f64,
    /// kg
    pub gas_mass: f64,
    pub accommodation: Accommodation,
}

impl Environment {
    pub fn new(temperature: f64, pressure: f64) -> Self {
        Self { temperature, pressure, gas_mass: N2_MASS, accommodation: Accommodation::Diffuse }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.temperature > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "temperature must be > 0 K, got {}",
                self.temperature
            )));
        }
        if !(self.pressure >= 0.0) {
            return Err(DynamicsError::InvalidParameter(format!("pressure must be ≥ 0 Pa, got {}", self.pressure)));
        }
        if !(self.gas_mass > 0.0) {
            return Err(DynamicsError::InvalidParameter("gas molecular mass must be positive".into()));
        }
        Ok(())
    }

    /// Mean molecular speed `√(8kT/(πm))`, m/s.
    pub fn mean_speed(&self) -> f64 {
        (8.0 * KB * self.temperature / (PI * self.gas_mass)).sqrt()
    }

    /// Mean free path, m (infinite in perfect vacuum).
    pub fn mean_free_path(&self) -> f64 {
        KB * self.temperature / (2f64.sqrt() * PI * N2_DIAMETER * N2_DIAMETER * self.pressure)
    }
}

/// Free-molecular (Epstein) velocity damping rate Γ, rad/s:
/// `Γ = c_E·P/(ρ·r·c̄)`.
pub fn damping_from_pressure(env: &Environment, particle: &Particle) -> Result<f64, DynamicsError> {
    env.validate()?;
    if env.pressure == 0.0 {
        return Ok(0.0);
    }
    let knudsen = env.mean_free_path() / particle.radius;
    if knudsen < MIN_KNUDSEN {
        return Err(DynamicsError::Regime { knudsen, min: MIN_KNUDSEN });
    }
    Ok(env.accommodation.epstein_coefficient() * env.pressure / (particle.density * particle.radius * env.mean_speed()))
}
