//! Scalar abstractions.
//!
//! Numerical code (Chebyshev expansions, spectra, bound evaluators) is
//! written against [`Real`], so it runs in `f32` or `f64`. Switching weights
//! are written against [`Weight`], which additionally admits exact rationals
//! so detailed balance can be verified without rounding.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Floating-point scalar used by the numerical modules.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; every implementor can represent the value approximately.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Edge weight of the switching metagraph: floating or exact rational.
pub trait Weight: Num + Clone + PartialOrd + Debug + Send + Sync {
    /// The value `num / den`.
    fn ratio(num: u128, den: u128) -> Self;

    /// Tolerance used when comparing two weights; zero for exact types.
    fn tolerance() -> Self;

    fn to_f64_lossy(&self) -> f64;

    fn abs_diff(&self, other: &Self) -> Self {
        if self > other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }
}

impl Weight for f64 {
    fn ratio(num: u128, den: u128) -> Self {
        num as f64 / den as f64
    }
    fn tolerance() -> Self {
        1e-12
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Weight for f32 {
    fn ratio(num: u128, den: u128) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn tolerance() -> Self {
        1e-5
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Weight for BigRational {
    fn ratio(num: u128, den: u128) -> Self {
        Ratio::new(BigInt::from(num), BigInt::from(den))
    }
    fn tolerance() -> Self {
        num_traits::Zero::zero()
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Weight for Ratio<i128> {
    fn ratio(num: u128, den: u128) -> Self {
        Ratio::new(num as i128, den as i128)
    }
    fn tolerance() -> Self {
        num_traits::Zero::zero()
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}
