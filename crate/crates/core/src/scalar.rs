//! Scalar abstraction over the supported floating-point precisions.
//!
//! Everything downstream of file parsing is generic over [`Scalar`], so the
//! whole pipeline can run in f32 (the on-disk precision) or f64 (when 64-bit
//! accumulation is wanted). Conversions are explicit: widening f32 -> f64 is
//! exact, narrowing rounds to nearest.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::Float;

pub trait Scalar:
    Float + AddAssign + Sum + Send + Sync + Debug + Display + 'static
{
    fn from_f32(v: f32) -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f32(self) -> f32;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f32(v: f32) -> Self {
        v
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f32(self) -> f32 {
        self
    }
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f32(v: f32) -> Self {
        f64::from(v)
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f32(self) -> f32 {
        self as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_round_trips_through_f64_exactly() {
        for v in [0.0f32, -1.5, 3.25e-7, f32::MAX, f32::MIN_POSITIVE] {
            assert_eq!(<f64 as Scalar>::from_f32(v).to_f32(), v);
        }
    }

    #[test]
    fn conversions_are_identity_at_native_width() {
        assert_eq!(<f32 as Scalar>::from_f32(2.5), 2.5f32);
        assert_eq!(<f64 as Scalar>::from_f64(2.5), 2.5f64);
    }
}
