//! Exact rational scalars and fast-Cauchy codes for nonnegative reals.
//!
//! Every measure, capital and integral in this crate is a [`Rational`]. There
//! is no floating point anywhere in the library.
//!
//! A [`FastCauchyCode`] names a real by a stream `q_0, q_1, ...` with
//! `|q_n - q_m| <= 2^-m` for all `n >= m`. Streams are pure index-to-value
//! generators, so inspecting a finite prefix is the only way to read one.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("invalid rational literal {0:?}")]
    Parse(String),
    #[error("fast-Cauchy code violates |q_{later} - q_{earlier}| <= 2^-{earlier}")]
    InvalidCode { earlier: usize, later: usize },
    #[error("fast-Cauchy code has no entries")]
    EmptyCode,
}

/// Exact signed rational, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^exp` for any signed exponent.
    pub fn pow2(exp: i64) -> Self {
        let two = BigRational::from_integer(BigInt::from(2));
        Rational(num_traits::pow::Pow::pow(&two, exp as i32))
    }

    /// `numer / 2^exp`.
    pub fn dyadic(numer: i64, exp: u32) -> Self {
        Rational::from_integer(numer) * Rational::pow2(-(exp as i64))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn clamp_nonnegative(&self) -> Self {
        if self.is_negative() {
            Rational::zero()
        } else {
            self.clone()
        }
    }

    /// Lossy conversion for display in human-facing contexts only.
    pub fn to_f64_lossy(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ExactError::Parse(s.to_string());
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::one(), |acc, x| acc * x)
    }
}

type Generator = Arc<dyn Fn(usize) -> Rational + Send + Sync>;

#[derive(Clone)]
enum Source {
    /// Finite entries followed by a constant tail repeating the last entry.
    Finite(Vec<Rational>),
    Generated(Generator),
    Repaired(Box<FastCauchyCode>),
}

/// A rational stream intended to name a real at precision `2^-index`.
///
/// Validity is a predicate checked on inspected prefixes, never assumed.
#[derive(Clone)]
pub struct FastCauchyCode {
    source: Source,
}

impl fmt::Debug for FastCauchyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Finite(entries) => f.debug_struct("FastCauchyCode").field("entries", entries).field("tail", &"constant").finish(),
            Source::Generated(_) => f.write_str("FastCauchyCode(<generator>)"),
            Source::Repaired(inner) => f.debug_tuple("Repaired").field(inner).finish(),
        }
    }
}

impl FastCauchyCode {
    /// Finite entries with a constant tail. An empty list denotes the constant 0 stream.
    pub fn finite(entries: Vec<Rational>) -> Self {
        let entries = if entries.is_empty() {
            vec![Rational::zero()]
        } else {
            entries
        };
        FastCauchyCode { source: Source::Finite(entries) }
    }

    pub fn constant(value: Rational) -> Self {
        FastCauchyCode::finite(vec![value])
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(usize) -> Rational + Send + Sync + 'static,
    {
        FastCauchyCode { source: Source::Generated(Arc::new(f)) }
    }

    pub fn entry(&self, index: usize) -> Rational {
        match &self.source {
            Source::Finite(entries) => entries[index.min(entries.len() - 1)].clone(),
            Source::Generated(f) => f(index),
            Source::Repaired(raw) => repaired_entry(raw, index),
        }
    }

    pub fn prefix(&self, len: usize) -> Vec<Rational> {
        (0..len).map(|i| self.entry(i)).collect()
    }

    /// First pair `(m, n)` with `m < n < len` and `|q_n - q_m| > 2^-m`, scanning `n` upward.
    pub fn first_violation(&self, len: usize) -> Option<(usize, usize)> {
        first_violation_in(&self.prefix(len))
    }

    pub fn is_valid_prefix(&self, len: usize) -> bool {
        self.first_violation(len).is_none()
    }

    /// Materialize the first `len` entries as a finite code with a constant tail.
    pub fn materialize(&self, len: usize) -> FastCauchyCode {
        FastCauchyCode::finite(self.prefix(len.max(1)))
    }

    pub fn to_serialized(&self, len: usize) -> SerializedCode {
        let entries = match &self.source {
            Source::Finite(entries) => entries.clone(),
            _ => self.prefix(len.max(1)),
        };
        SerializedCode { entries, tail: TailMarker::Constant }
    }
}

fn first_violation_in(q: &[Rational]) -> Option<(usize, usize)> {
    for n in 1..q.len() {
        for m in 0..n {
            if (&q[n] - &q[m]).abs() > Rational::pow2(-(m as i64)) {
                return Some((m, n));
            }
        }
    }
    None
}

fn repaired_entry(raw: &FastCauchyCode, index: usize) -> Rational {
    let clamped: Vec<Rational> = (0..=index).map(|i| raw.entry(i).clamp_nonnegative()).collect();
    match first_violation_in(&clamped) {
        Some((_, n)) => clamped[n - 1].clone(),
        None => clamped[index].clone(),
    }
}

/// Totalize an arbitrary rational stream into a valid code for a nonnegative real.
///
/// Entries are clamped at 0 first; then the stream is frozen at `q_{n-1}` from the
/// first index `n` that violates the fast-Cauchy bound against an earlier entry.
/// Evaluation is lazy per index.
pub fn repair_fast_cauchy(raw: &FastCauchyCode) -> FastCauchyCode {
    FastCauchyCode { source: Source::Repaired(Box::new(raw.clone())) }
}

/// Read `q_index`, checking validity over `q_0..=q_index`.
pub fn approximate_limit(code: &FastCauchyCode, index: usize) -> Result<Rational, ExactError> {
    if let Some((earlier, later)) = code.first_violation(index + 1) {
        return Err(ExactError::InvalidCode { earlier, later });
    }
    Ok(code.entry(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMarker {
    Constant,
}

/// Wire form of a fast-Cauchy code: finite entries plus `"tail": "constant"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedCode {
    pub entries: Vec<Rational>,
    pub tail: TailMarker,
}

impl SerializedCode {
    pub fn into_code(self) -> Result<FastCauchyCode, ExactError> {
        if self.entries.is_empty() {
            return Err(ExactError::EmptyCode);
        }
        Ok(FastCauchyCode::finite(self.entries))
    }
}
