//! Real solid harmonics as explicit Cartesian polynomials.
//!
//! The polar axis is `z`. Each harmonic is stored with the integer
//! coefficients of the standard real solid harmonic divided by their common
//! divisor, so the degree-2 sine harmonic of order 2 is literally `x·y` and
//! the cosine one is `x² − y²`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Cosine or sine azimuthal dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

type Exponents = [u32; 3];

/// A polynomial in (x, y, z) with real coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<(f64, Exponents)>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[(f64, Exponents)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, r: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * r[0].powi(e[0] as i32) * r[1].powi(e[1] as i32) * r[2].powi(e[2] as i32))
            .sum()
    }

    pub fn derivative(&self, axis: usize) -> Self {
        let mut out = BTreeMap::new();
        for &(c, e) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut ne = e;
            ne[axis] -= 1;
            *out.entry(ne).or_insert(0.0) += c * e[axis] as f64;
        }
        Self::from_map(out)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { terms: self.terms.iter().map(|&(c, e)| (c * k, e)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for &(c, e) in self.terms.iter().chain(&other.terms) {
            *out.entry(e).or_insert(0.0) += c;
        }
        Self::from_map(out)
    }

    pub fn laplacian(&self) -> Self {
        (0..3).map(|a| self.derivative(a).derivative(a)).fold(Self::zero(), |acc, p| acc.add(&p))
    }

    /// `Some(+1)` if even under reflection of `axis`, `Some(-1)` if odd,
    /// `None` for mixed parity.
    pub fn reflection_parity(&self, axis: usize) -> Option<i8> {
        let mut parity = None;
        for (_, e) in &self.terms {
            let p = if e[axis] % 2 == 0 { 1 } else { -1 };
            match parity {
                None => parity = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
        parity.or(Some(1))
    }

    fn from_map(map: BTreeMap<Exponents, f64>) -> Self {
        Self { terms: map.into_iter().filter(|(_, c)| *c != 0.0).map(|(e, c)| (c, e)).collect() }
    }
}

/// Integer polynomial used while building harmonics exactly.
#[derive(Clone, Default)]
struct IntPoly(BTreeMap<Exponents, i128>);

impl IntPoly {
    fn monomial(c: i128, e: Exponents) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert(e, c);
        }
        Self(m)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for (ea, ca) in &self.0 {
            for (eb, cb) in &other.0 {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *out.entry(e).or_insert(0) += ca * cb;
            }
        }
        out.retain(|_, c| *c != 0);
        Self(out)
    }

    fn add_assign(&mut self, other: &Self) {
        for (e, c) in &other.0 {
            *self.0.entry(*e).or_insert(0) += c;
        }
        self.0.retain(|_, c| *c != 0);
    }

    fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::monomial(1, [0, 0, 0]), |acc, _| acc.mul(self))
    }
}

fn binom(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

fn falling(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Highest degree accepted by [`solid_harmonic`].
pub const MAX_DEGREE: u32 = 10;

/// Unnormalized real regular solid harmonic of the given degree, order and
/// parity. Returns `None` for invalid combinations (order > degree, sine
/// with order 0, degree above [`MAX_DEGREE`]).
pub fn solid_harmonic(degree: u32, order: u32, parity: Parity) -> Option<Polynomial> {
    if order > degree || degree > MAX_DEGREE || (parity == Parity::Sin && order == 0) {
        return None;
    }
    let (l, m) = (degree, order);

    // Azimuthal part: Re or Im of (x + i·y)^m.
    let mut azimuthal = IntPoly::default();
    for j in 0..=m {
        let wanted = match parity {
            Parity::Cos => j % 2 == 0,
            Parity::Sin => j % 2 == 1,
        };
        if !wanted {
            continue;
        }
        let sign = if (j / 2) % 2 == 0 { 1 } else { -1 };
        azimuthal.add_assign(&IntPoly::monomial(sign * binom(m, j), [m - j, j, 0]));
    }

    // Polar part as a polynomial in z and r².
    let r2 = {
        let mut p = IntPoly::monomial(1, [2, 0, 0]);
        p.add_assign(&IntPoly::monomial(1, [0, 2, 0]));
        p.add_assign(&IntPoly::monomial(1, [0, 0, 2]));
        p
    };
    let mut polar = IntPoly::default();
    let mut k = 0;
    while 2 * k + m <= l {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let c = sign * binom(l, k) * binom(2 * l - 2 * k, l) * falling(l - 2 * k, m);
        let term = r2.pow(k).mul(&IntPoly::monomial(c, [0, 0, l - 2 * k - m]));
        polar.add_assign(&term);
        k += 1;
    }

    let full = polar.mul(&azimuthal);
    let g = full.0.values().fold(0i128, |acc, &c| gcd(acc, c));
    if g == 0 {
        return None;
    }
    Some(Polynomial { terms: full.0.into_iter().map(|(e, c)| ((c / g) as f64, e)).collect() })
}
