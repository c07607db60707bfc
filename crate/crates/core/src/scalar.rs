//! The scalar abstraction the exact-arithmetic parts of the crate are written
//! against.
//!
//! Tower models, renewal sequences, the product dynamic program and the
//! brute-force oracle only ever add and multiply probabilities, so they are
//! generic over [`Scalar`]. `f64` is the workhorse; `BigRational` lets the
//! oracle and the DP agree bit-for-bit on small dyadic models; `f32` is there
//! for cheap exploratory runs.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

/// A probability-valued number type.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Send + Sync + 'static {
    /// Converts from `f64`. Exact for rational scalars (every finite double is
    /// a dyadic rational).
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// `num / den` in this type.
    fn ratio(num: u64, den: u64) -> Self;

    /// Whether arithmetic in this type is exact.
    fn is_exact() -> bool {
        false
    }

    /// How far column weights may sum from one before a model is rejected.
    fn unit_tolerance() -> f64 {
        1e-12
    }

    fn from_usize(n: usize) -> Self {
        Self::ratio(n as u64, 1)
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn unit_tolerance() -> f64 {
        1e-5
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite probability")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Ratio::to_f64 gives up on very large numerators/denominators.
            let num = self.numer().to_f64().unwrap_or(f64::INFINITY);
            let den = self.denom().to_f64().unwrap_or(f64::INFINITY);
            num / den
        })
    }

    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn is_exact() -> bool {
        true
    }
}

/// Sum of a slice of scalars.
pub fn sum<S: Scalar>(xs: &[S]) -> S {
    xs.iter().fold(S::zero(), |acc, x| acc + x.clone())
}

/// `|a - b|` as an `f64`, computed in `S` first so exact types report exact
/// differences.
pub fn abs_diff<S: Scalar>(a: &S, b: &S) -> f64 {
    let d = if a > b { a.clone() - b.clone() } else { b.clone() - a.clone() };
    d.to_f64()
}

