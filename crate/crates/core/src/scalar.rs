//! Floating-point scalar abstraction used by the statistics and detectors.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// floating point: f32 or f64
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Lossy conversion from `f64`; every implementor can represent (a rounding of) any f64.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 converts to every Scalar")
    }

    /// Widening conversion to `f64`.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("every Scalar converts to f64")
    }

    /// Standard normal CDF.
    #[inline]
    fn std_normal_cdf(self) -> Self {
        // evaluate the smaller tail directly to keep full relative accuracy
        let half_tail = Self::of(0.5) * (self.abs() / Self::of(std::f64::consts::SQRT_2)).erfc();
        if self < Self::zero() {
            half_tail
        } else {
            Self::one() - half_tail
        }
    }

    /// Standard normal density.
    #[inline]
    fn std_normal_pdf(self) -> Self {
        let inv_sqrt_2pi = Self::of(0.398_942_280_401_432_7);
        inv_sqrt_2pi * (Self::of(-0.5) * self * self).exp()
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        statrs::function::erf::erfc(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        statrs::function::erf::erfc(self as f64) as f32
    }
}
