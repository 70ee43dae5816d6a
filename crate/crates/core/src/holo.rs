//! Exact holomorphic calculus over one complex variable.
//!
//! Holomorphic data is restricted to polynomials so that derivatives and
//! antiderivatives are coefficient-exact. A [`HoloCurve`] is a vector of
//! [`CPoly`] components; the product used throughout is the complex-bilinear
//! dot product [`HoloCurve::bdot`] (no conjugation), under which a curve is
//! isotropic when its self-product vanishes identically.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::{Deserializer, Error as DeError};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// A complex polynomial; `coeffs[k]` multiplies `z^k`.
///
/// Trailing zero coefficients are trimmed with an exact-zero test, so the
/// empty coefficient list is the zero polynomial.
#[derive(Clone, PartialEq, Default)]
pub struct CPoly {
    coeffs: Vec<C64>,
}

impl CPoly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    /// `c * z^k`
    pub fn monomial(c: C64, k: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the last nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// The antiderivative vanishing at `z0`.
    pub fn antiderivative(&self, z0: C64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(C64::new(0.0, 0.0));
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        let mut p = Self::new(coeffs);
        let offset = p.eval(z0);
        if offset != C64::new(0.0, 0.0) {
            if p.coeffs.is_empty() {
                p.coeffs.push(C64::new(0.0, 0.0));
            }
            p.coeffs[0] -= offset;
            p = Self::new(p.coeffs);
        }
        p
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Polynomial whose coefficients are the moduli of this one's.
    pub fn abs_coeffs(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| C64::new(c.norm(), 0.0)).collect())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for CPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.coeffs.iter().map(|c| (c.re, c.im)))
            .finish()
    }
}

impl Add for &CPoly {
    type Output = CPoly;
    fn add(self, rhs: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |p: &CPoly, k: usize| p.coeffs.get(k).copied().unwrap_or_default();
        CPoly::new((0..n).map(|k| get(self, k) + get(rhs, k)).collect())
    }
}

impl Sub for &CPoly {
    type Output = CPoly;
    fn sub(self, rhs: &CPoly) -> CPoly {
        self + &(-rhs)
    }
}

impl Neg for &CPoly {
    type Output = CPoly;
    fn neg(self) -> CPoly {
        CPoly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl Mul for &CPoly {
    type Output = CPoly;
    fn mul(self, rhs: &CPoly) -> CPoly {
        if self.is_zero() || rhs.is_zero() {
            return CPoly::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        CPoly::new(out)
    }
}

// Complex numbers travel as `[re, im]` pairs, polynomials as arrays of them.
impl Serialize for CPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        if pairs.iter().flatten().any(|x| !x.is_finite()) {
            return Err(D::Error::custom("non-finite polynomial coefficient"));
        }
        Ok(CPoly::new(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect()))
    }
}

/// Serde adapter for a single complex number as `[re, im]`.
pub mod complex_pair {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// A holomorphic polynomial map `U -> C^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HoloCurve {
    components: Vec<CPoly>,
}

impl HoloCurve {
    pub fn new(components: Vec<CPoly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("a curve needs at least one component".into()));
        }
        Ok(Self { components })
    }

    /// The zero curve in `C^dim`.
    pub fn zero(dim: usize) -> Self {
        Self {
            components: vec![CPoly::zero(); dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[CPoly] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(CPoly::is_zero)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.components.iter().filter_map(CPoly::degree).max()
    }

    pub fn eval(&self, z: C64) -> Vec<C64> {
        self.components.iter().map(|p| p.eval(z)).collect()
    }

    pub fn derivative(&self) -> Self {
        Self {
            components: self.components.iter().map(CPoly::derivative).collect(),
        }
    }

    /// Path integral from `z0`; path-independent since the integrand is entire.
    pub fn antiderivative(&self, z0: C64) -> Self {
        Self {
            components: self.components.iter().map(|p| p.antiderivative(z0)).collect(),
        }
    }

    /// Multiplies every coefficient by `e^{i theta}`.
    pub fn rotate(&self, theta: f64) -> Self {
        let w = C64::from_polar(1.0, theta);
        self.scale(w)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn mul_poly(&self, p: &CPoly) -> Self {
        Self {
            components: self.components.iter().map(|q| q * p).collect(),
        }
    }

    /// Complex-bilinear dot product `sum_j a_j b_j`.
    pub fn bdot(&self, other: &HoloCurve) -> Result<CPoly> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .fold(CPoly::zero(), |acc, (a, b)| &acc + &(a * b)))
    }

    /// Largest coefficient of `bdot(self, other)` relative to the largest
    /// coefficient of `sum_j |a_j| |b_j|` (moduli taken coefficient-wise).
    ///
    /// This is the scale-free form of "every coefficient of the bilinear
    /// product vanishes" used by the isotropy checks.
    pub fn bdot_residual(&self, other: &HoloCurve) -> Result<f64> {
        let dot = self.bdot(other)?;
        let scale = self
            .components
            .iter()
            .zip(&other.components)
            .fold(CPoly::zero(), |acc, (a, b)| &acc + &(&a.abs_coeffs() * &b.abs_coeffs()))
            .max_abs_coeff();
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(dot.max_abs_coeff() / scale)
    }
}

/// Stack of complex derivatives of a curve at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct CJet {
    pub z: C64,
    /// `values[k]` is the k-th derivative at `z`.
    pub values: Vec<Vec<C64>>,
}

impl CJet {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

pub fn eval_jet(curve: &HoloCurve, z: C64, order: usize) -> CJet {
    let mut values = Vec::with_capacity(order + 1);
    let mut current = curve.clone();
    for k in 0..=order {
        values.push(current.eval(z));
        if k < order {
            current = current.derivative();
        }
    }
    CJet { z, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = CPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), Some(0));
        assert!(CPoly::new(vec![c(0.0, 0.0)]).is_zero());
        assert_eq!(CPoly::zero().degree(), None);
    }

    #[test]
    fn jet_of_z_squared() {
        let curve = HoloCurve::new(vec![CPoly::monomial(c(1.0, 0.0), 2)]).unwrap();
        let jet = eval_jet(&curve, c(1.0, 1.0), 2);
        assert_eq!(jet.values[0][0], c(0.0, 2.0));
        assert_eq!(jet.values[1][0], c(2.0, 2.0));
        assert_eq!(jet.values[2][0], c(2.0, 0.0));
        assert_eq!(jet.order(), 2);
    }

    #[test]
    fn jet_of_zero_curve() {
        let jet = eval_jet(&HoloCurve::zero(1), c(0.3, -2.0), 3);
        assert!(jet.values.iter().flatten().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn antiderivative_examples() {
        let a0 = c(2.0, 1.0);
        let a1 = c(-1.0, 3.0);
        let p = CPoly::new(vec![a0, a1]);
        let q = p.antiderivative(c(0.0, 0.0));
        assert_eq!(q.coeffs(), &[c(0.0, 0.0), a0, a1 / 2.0]);

        let one = CPoly::one().antiderivative(c(1.0, 0.0));
        assert_eq!(one.coeffs(), &[c(-1.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn bdot_examples() {
        let iso = HoloCurve::new(vec![CPoly::one(), CPoly::constant(I)]).unwrap();
        assert!(iso.bdot(&iso).unwrap().is_zero());

        // (1 - z^2, i(1 + z^2), 2z)
        let w = HoloCurve::new(vec![
            CPoly::from_real(&[1.0, 0.0, -1.0]),
            CPoly::new(vec![I, c(0.0, 0.0), I]),
            CPoly::from_real(&[0.0, 2.0]),
        ])
        .unwrap();
        assert!(w.bdot(&w).unwrap().is_zero());
    }

    #[test]
    fn bdot_dimension_mismatch() {
        let a = HoloCurve::zero(2);
        let b = HoloCurve::zero(3);
        assert!(matches!(a.bdot(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rotate_identity_and_negation() {
        let curve = HoloCurve::new(vec![CPoly::new(vec![c(1.0, 2.0), c(-0.5, 0.25)])]).unwrap();
        assert_eq!(curve.rotate(0.0), curve);
        let neg = curve.rotate(std::f64::consts::PI);
        for (a, b) in neg.components()[0].coeffs().iter().zip(curve.components()[0].coeffs()) {
            assert!((a + b).norm() < 1e-15);
        }
    }

    #[test]
    fn serde_pairs() {
        let p = CPoly::new(vec![c(1.0, -2.0), c(0.5, 0.0)]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[[1.0,-2.0],[0.5,0.0]]");
        let back: CPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<CPoly>("[[1.0]]").is_err());
    }
}
