//! Magnetostatic field of the trap from a truncated solid-harmonic
//! expansion of the scalar potential, and the resulting particle potential.
//!
//! The field is `B = −∇Φ` with `Φ = Σ cₖ·Pₖ(x, y, z)` where each `Pₖ` is an
//! unnormalized real solid harmonic (see [`harmonics`]). All derivatives are
//! taken analytically on the polynomials.

pub mod calibrate;
pub mod harmonics;
pub mod trap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_coefficients, CalibrationOptions};
pub use harmonics::{solid_harmonic, Parity, Polynomial};
pub use trap::{Trap, TrapFrequencies};

/// Default radius inside which the truncated expansion is trusted, m.
pub const DEFAULT_VALIDITY_RADIUS: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("position {r:?} m lies outside the model validity radius {radius} m")]
    OutsideValidity { r: [f64; 3], radius: f64 },
    #[error("invalid multipole coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("unstable trap: {0}")]
    Unstable(String),
    #[error("no potential minimum found from {starts} starting points")]
    NoEquilibrium { starts: usize },
    #[error("calibration did not converge after {iterations} iterations; relative residuals {residuals:?}")]
    Calibration { iterations: usize, residuals: Vec<f64> },
}

/// Identifies one real solid harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermSpec {
    pub degree: u32,
    pub order: u32,
    pub parity: Parity,
}

impl TermSpec {
    pub const fn new(degree: u32, order: u32, parity: Parity) -> Self {
        Self { degree, order, parity }
    }
}

/// Default term selection: the `x² − y²` quadrupole, the `y(4z² − x² − y²)`
/// octupole that bends the zero-field line, and the `x⁴ − 6x²y² + y⁴`
/// term that splits the transverse and vertical stiffness at the sagged
/// equilibrium. All three are even in `x` and `z` and odd or even in `y`.
pub const DEFAULT_TERMS: [TermSpec; 3] =
    [TermSpec::new(2, 2, Parity::Cos), TermSpec::new(3, 1, Parity::Sin), TermSpec::new(4, 4, Parity::Cos)];

/// One retained term; `coefficient` has units of T·m^(1−degree).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipoleTerm {
    pub degree: u32,
    pub order: u32,
    pub parity: Parity,
    pub coefficient: f64,
}

impl MultipoleTerm {
    pub fn spec(&self) -> TermSpec {
        TermSpec::new(self.degree, self.order, self.parity)
    }
}

/// The nonzero terms of the expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipoleCoefficients {
    pub terms: Vec<MultipoleTerm>,
}

impl MultipoleCoefficients {
    /// Builds and validates a coefficient set.
    ///
    /// Every term must share a common reflection parity in `x` and in `z`;
    /// this keeps `|B|` symmetric under `x → −x` and `z → −z` while the
    /// `y → −y` symmetry is free to break. At least one degree-2 term must
    /// be nonzero.
    pub fn new(terms: Vec<MultipoleTerm>) -> Result<Self, FieldError> {
        let c = Self { terms };
        c.validate()?;
        Ok(c)
    }

    pub fn from_specs(specs: &[TermSpec], values: &[f64]) -> Result<Self, FieldError> {
        if specs.len() != values.len() {
            return Err(FieldError::InvalidCoefficients(format!(
                "{} term specs but {} values",
                specs.len(),
                values.len()
            )));
        }
        Self::new(
            specs
                .iter()
                .zip(values)
                .map(|(s, &coefficient)| MultipoleTerm {
                    degree: s.degree,
                    order: s.order,
                    parity: s.parity,
                    coefficient,
                })
                .collect(),
        )
    }

    pub fn values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.coefficient).collect()
    }

    pub fn specs(&self) -> Vec<TermSpec> {
        self.terms.iter().map(MultipoleTerm::spec).collect()
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coefficient *= k;
        }
        out
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |m: String| Err(FieldError::InvalidCoefficients(m));
        if self.terms.is_empty() {
            return bad("no terms".into());
        }
        let mut seen = std::collections::HashSet::new();
        let mut parity_x = None;
        let mut parity_z = None;
        for t in &self.terms {
            if t.degree == 0 {
                return bad("degree must be at least 1".into());
            }
            if !t.coefficient.is_finite() {
                return bad(format!("non-finite coefficient in {:?}", t.spec()));
            }
            if !seen.insert(t.spec()) {
                return bad(format!("duplicate term {:?}", t.spec()));
            }
            let p = solid_harmonic(t.degree, t.order, t.parity)
                .ok_or_else(|| FieldError::InvalidCoefficients(format!("no harmonic {:?}", t.spec())))?;
            let (px, pz) = (p.reflection_parity(0), p.reflection_parity(2));
            if *parity_x.get_or_insert(px) != px || *parity_z.get_or_insert(pz) != pz {
                return bad(format!("term {:?} breaks the common x/z reflection parity of the expansion", t.spec()));
            }
        }
        if !self.terms.iter().any(|t| t.degree == 2 && t.coefficient != 0.0) {
            return bad("at least one degree-2 term must be nonzero".into());
        }
        Ok(())
    }
}

/// A compiled field model with precomputed derivative polynomials.
#[derive(Debug, Clone)]
pub struct FieldModel {
    coefficients: MultipoleCoefficients,
    validity_radius: f64,
    phi: Polynomial,
    grad: [Polynomial; 3],
    hess: [[Polynomial; 3]; 3],
    third: [[[Polynomial; 3]; 3]; 3],
}

impl FieldModel {
    pub fn new(coefficients: MultipoleCoefficients) -> Result<Self, FieldError> {
        Self::with_validity_radius(coefficients, DEFAULT_VALIDITY_RADIUS)
    }

    pub fn with_validity_radius(coefficients: MultipoleCoefficients, validity_radius: f64) -> Result<Self, FieldError> {
        coefficients.validate()?;
        if !(validity_radius > 0.0) {
            return Err(FieldError::InvalidCoefficients(format!(
                "validity radius must be positive, got {validity_radius}"
            )));
        }
        let phi = coefficients.terms.iter().fold(Polynomial::zero(), |acc, t| {
            let p = solid_harmonic(t.degree, t.order, t.parity).expect("validated");
            acc.add(&p.scaled(t.coefficient))
        });
        let grad: [Polynomial; 3] = std::array::from_fn(|i| phi.derivative(i));
        let hess: [[Polynomial; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| grad[i].derivative(j)));
        let third = std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| hess[i][j].derivative(k))));
        Ok(Self { coefficients, validity_radius, phi, grad, hess, third })
    }

    /// A model with no field at all (used for gravity-only checks).
    pub fn zero_field() -> Self {
        let z = Polynomial::zero();
        Self {
            coefficients: MultipoleCoefficients { terms: Vec::new() },
            validity_radius: DEFAULT_VALIDITY_RADIUS,
            phi: z.clone(),
            grad: std::array::from_fn(|_| z.clone()),
            hess: std::array::from_fn(|_| std::array::from_fn(|_| z.clone())),
            third: std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| z.clone()))),
        }
    }

    pub fn coefficients(&self) -> &MultipoleCoefficients {
        &self.coefficients
    }

    pub fn validity_radius(&self) -> f64 {
        self.validity_radius
    }

    pub fn check_domain(&self, r: &Vector3<f64>) -> Result<(), FieldError> {
        if r.iter().all(|v| v.is_finite()) && r.norm() <= self.validity_radius {
            Ok(())
        } else {
            Err(FieldError::OutsideValidity { r: [r.x, r.y, r.z], radius: self.validity_radius })
        }
    }

    /// Magnetic scalar potential Φ, T·m.
    pub fn scalar_potential(&self, r: &Vector3<f64>) -> Result<f64, FieldError> {
        self.check_domain(r)?;
        Ok(self.phi.eval(arr(r)))
    }

    /// `B = −∇Φ`, T.
    pub fn b_field(&self, r: &Vector3<f64>) -> Result<Vector3<f64>, FieldError> {
        self.check_domain(r)?;
        Ok(self.b_unchecked(r))
    }

    /// Jacobian `J[k][i] = ∂B_k/∂x_i`, T/m. Symmetric since B is a gradient.
    pub fn b_jacobian(&self, r: &Vector3<f64>) -> Result<Matrix3<f64>, FieldError> {
        self.check_domain(r)?;
        Ok(self.jacobian_unchecked(r))
    }

    pub(crate) fn b_unchecked(&self, r: &Vector3<f64>) -> Vector3<f64> {
        let a = arr(r);
        Vector3::new(-self.grad[0].eval(a), -self.grad[1].eval(a), -self.grad[2].eval(a))
    }

    pub(crate) fn jacobian_unchecked(&self, r: &Vector3<f64>) -> Matrix3<f64> {
        let a = arr(r);
        Matrix3::from_fn(|k, i| -self.hess[k][i].eval(a))
    }

    /// Second derivatives of each field component: `H[k][(i, j)] = ∂²B_k/∂x_i∂x_j`.
    pub(crate) fn b_hessians_unchecked(&self, r: &Vector3<f64>) -> [Matrix3<f64>; 3] {
        let a = arr(r);
        std::array::from_fn(|k| Matrix3::from_fn(|i, j| -self.third[k][i][j].eval(a)))
    }
}

fn arr(r: &Vector3<f64>) -> [f64; 3] {
    [r.x, r.y, r.z]
}
