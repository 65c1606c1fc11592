//! Floating point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used by the models: `f32` or `f64`.
///
/// Besides the usual `num_traits` float surface this carries the handful of
/// special functions that have no generic implementation in `num_traits`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Natural log of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Regularized incomplete beta function `I_x(a, b)`.
    fn beta_reg(a: Self, b: Self, x: Self) -> Self;

    /// Converts an `f64` literal. Never fails for the two implementors.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// A tolerance no tighter than a few ulps of the type.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(8.0))
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }

    fn beta_reg(a: Self, b: Self, x: Self) -> Self {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            statrs::function::beta::beta_reg(a, b, x)
        }
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }

    fn beta_reg(a: Self, b: Self, x: Self) -> Self {
        f64::beta_reg(a as f64, b as f64, x as f64) as f32
    }
}

/// `ln(sum(exp(xs)))` with the maximum factored out.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let s: T = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_naive_and_survives_large_inputs() {
        let xs = [0.1_f64, -2.0, 1.5];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-15);
        let big = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(&big) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn f32_hooks_track_f64() {
        assert!((Scalar::erfc(0.5_f32) as f64 - Scalar::erfc(0.5_f64)).abs() < 1e-6);
        assert!((f32::beta_reg(2.0, 3.0, 0.4) as f64 - f64::beta_reg(2.0, 3.0, 0.4)).abs() < 1e-6);
    }
}
