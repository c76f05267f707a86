//! Numeric backends and the `(α, γ)` parameter pair.
//!
//! Every probability in the crate is computed through the [`Scalar`] trait,
//! which is implemented for exact rationals ([`Q`], arbitrary precision) and
//! for `f64`. The exact backend powers the verifier; the float backend powers
//! the Monte Carlo harness. All Γ-function ratios are evaluated as finite
//! telescoped products, so no special functions are ever needed.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number with arbitrary-precision numerator and denominator.
pub type Q = BigRational;

/// Arithmetic backend used by every probability computation.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// The rational `num / den` in this backend.
    fn ratio(num: i64, den: i64) -> Self;
    /// Additive identity.
    fn zero() -> Self {
        Self::ratio(0, 1)
    }
    /// Multiplicative identity.
    fn one() -> Self {
        Self::ratio(1, 1)
    }
    /// An integer count in this backend.
    fn from_usize(n: usize) -> Self {
        Self::ratio(n as i64, 1)
    }
    /// Nearest double.
    fn to_f64(&self) -> f64;
    /// Whether arithmetic in this backend is exact.
    fn is_exact() -> bool;
    /// Exact zero test (tolerance-free in both backends).
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    /// Serialization used by distribution reports: `"num/den"` or a float.
    fn to_json(&self) -> serde_json::Value;
}

impl Scalar for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_exact() -> bool {
        false
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }
}

impl Scalar for Q {
    fn ratio(num: i64, den: i64) -> Self {
        Q::new(BigInt::from(num), BigInt::from(den))
    }
    fn zero() -> Self {
        <Q as Zero>::zero()
    }
    fn one() -> Self {
        <Q as One>::one()
    }
    fn from_usize(n: usize) -> Self {
        Q::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_exact() -> bool {
        true
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_q(self))
    }
}

/// Formats a rational as `num/den` (always with a denominator, e.g. `1/1`).
pub fn format_q(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Absolute value of a rational.
pub fn abs_q(q: &Q) -> Q {
    q.abs()
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.7"` into an
/// exact rational. Decimals are converted digit by digit, so `"0.7"` is
/// exactly `7/10`.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational or decimal number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let q = Q::new(num, den);
    Ok(if neg { -q } else { q })
}

/// The pair `(α, γ)` in a chosen backend.
///
/// Construction validates `0 ≤ γ ≤ α ≤ 1`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Params<S> {
    /// Branching parameter α.
    pub alpha: S,
    /// Internal-edge parameter γ.
    pub gamma: S,
}

impl<S: Scalar> Params<S> {
    /// Validated constructor.
    pub fn new(alpha: S, gamma: S) -> Result<Self> {
        let zero = S::zero();
        let one = S::one();
        if !(zero <= gamma && gamma <= alpha && alpha <= one) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= gamma <= alpha <= 1, got alpha={alpha}, gamma={gamma}"
            )));
        }
        Ok(Params { alpha, gamma })
    }

    /// Weight of an external (leaf) edge: `1 − α`.
    pub fn leaf_weight(&self) -> S {
        S::one() - self.alpha.clone()
    }

    /// Weight of an internal edge: `γ`.
    pub fn internal_weight(&self) -> S {
        self.gamma.clone()
    }

    /// Total weight of a branch point with `c` children: `(c − 1)α − γ`.
    pub fn branch_weight(&self, c: usize) -> S {
        S::from_usize(c - 1) * self.alpha.clone() - self.gamma.clone()
    }

    /// Weight of the rightmost insertion gap of a branch point: `α − γ`.
    pub fn right_gap_weight(&self) -> S {
        self.alpha.clone() - self.gamma.clone()
    }

    /// Whether the pair is one of the degenerate classes whose chains have a
    /// restricted recurrent class: `α = 1`, `γ = 0`, or `γ = α`.
    pub fn is_degenerate(&self) -> bool {
        self.alpha == S::one() || self.gamma.is_zero() || self.gamma == self.alpha
    }
}

impl Params<Q> {
    /// Parses both parameters from `"p/q"` or decimal strings.
    pub fn parse(alpha: &str, gamma: &str) -> Result<Self> {
        Params::new(parse_rational(alpha)?, parse_rational(gamma)?)
    }

    /// Float copy of the parameters for Monte Carlo use.
    pub fn to_f64(&self) -> Params<f64> {
        Params {
            alpha: Scalar::to_f64(&self.alpha),
            gamma: Scalar::to_f64(&self.gamma),
        }
    }
}

/// Rising product `Π_{j=0}^{m−1} (x + j)`, i.e. `Γ(x + m)/Γ(x)`.
pub fn rising<S: Scalar>(x: &S, m: usize) -> S {
    let mut acc = S::one();
    for j in 0..m {
        acc = acc * (x.clone() + S::from_usize(j));
    }
    acc
}

/// Binomial coefficient as a scalar.
pub fn binomial<S: Scalar>(n: usize, k: usize) -> S {
    if k > n {
        return S::zero();
    }
    let k = k.min(n - k);
    let mut acc = S::one();
    for j in 1..=k {
        acc = acc * S::from_usize(n - k + j) / S::from_usize(j);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("2/3").unwrap(), Q::ratio(2, 3));
        assert_eq!(parse_rational("0.7").unwrap(), Q::ratio(7, 10));
        assert_eq!(parse_rational("1").unwrap(), Q::ratio(1, 1));
        assert_eq!(parse_rational(".25").unwrap(), Q::ratio(1, 4));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn params_domain() {
        assert!(Params::new(0.5, 0.5).is_ok());
        assert!(Params::new(0.4, 0.5).is_err());
        assert!(Params::new(1.2, 0.5).is_err());
        assert!(Params::new(0.5, -0.1).is_err());
        let p = Params::<Q>::parse("2/3", "1/3").unwrap();
        assert_eq!(p.branch_weight(3), Q::ratio(1, 1));
        assert!(Params::new(0.5, 0.5).unwrap().is_degenerate());
    }

    #[test]
    fn rising_and_binomial() {
        assert_eq!(rising(&Q::ratio(1, 2), 3), Q::ratio(15, 8));
        assert_eq!(binomial::<Q>(6, 2), Q::ratio(15, 1));
        assert_eq!(binomial::<f64>(5, 7), 0.0);
    }
}
