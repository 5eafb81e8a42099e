//! Scalar abstractions.
//!
//! Probability and evidence arithmetic is written against [`Real`] (any
//! IEEE float), while exhaustive enumeration over codes is written against
//! [`Field`], which is also satisfied by [`crate::Rational`] so that
//! normalizers and conditional masses can be computed exactly.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field used by the enumeration code in [`crate::codes`].
pub trait Field:
    Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

impl<T> Field for T where
    T: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in target float")
}

/// Absolute tolerance for "sums to one" checks.
///
/// 1e-12 for `f64`; widened to a few ulps for narrower types.
pub fn normalization_tol<T: Real>() -> T {
    lit::<T>(1e-12).max(T::epsilon() * lit(16.0))
}

/// Tolerance applied by the supermartingale and liftability checkers.
pub fn check_tol<T: Real>() -> T {
    lit::<T>(1e-10).max(T::epsilon() * lit(64.0))
}

/// `log(sum(exp(terms)))`, stable, with `-inf` entries contributing nothing.
pub fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let max = terms.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || max == T::infinity() {
        return max;
    }
    let sum: T = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// `a * ln(a / b)` with `0 ln 0 = 0`.
pub(crate) fn xlogx_over<T: Real>(a: T, b: T) -> T {
    if a == T::zero() {
        T::zero()
    } else {
        a * (a.ln() - b.ln())
    }
}

/// Neumaier-compensated sum; order of `values` is the only source of
/// rounding differences, so callers keep it fixed.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Exact integer-pair view of a scalar, used when serializing masses.
pub trait AsFraction {
    fn as_fraction(&self) -> Option<(BigInt, BigInt)>;
}

impl AsFraction for BigRational {
    fn as_fraction(&self) -> Option<(BigInt, BigInt)> {
        Some((self.numer().clone(), self.denom().clone()))
    }
}

impl AsFraction for f64 {
    fn as_fraction(&self) -> Option<(BigInt, BigInt)> {
        BigRational::from_float(*self).map(|r| (r.numer().clone(), r.denom().clone()))
    }
}

impl AsFraction for f32 {
    fn as_fraction(&self) -> Option<(BigInt, BigInt)> {
        BigRational::from_float(*self).map(|r| (r.numer().clone(), r.denom().clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        assert_eq!(
            log_sum_exp::<f64>(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        let v = log_sum_exp(&[f64::NEG_INFINITY, 0.5f64.ln()]);
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
        let v = log_sum_exp(&[0.25f64.ln(), 0.75f64.ln()]);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_large_terms_do_not_overflow() {
        let v = log_sum_exp(&[1000.0f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let vals = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(vals), 1.0);
    }

    #[test]
    fn tolerances_widen_for_f32() {
        assert_eq!(normalization_tol::<f64>(), 1e-12);
        assert!(normalization_tol::<f32>() > 1e-7);
    }
}
