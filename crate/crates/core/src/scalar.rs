//! Scalar abstraction shared by the numeric parts of the crate.
//!
//! Everything that is pure arithmetic (closed-form divergences, dense matrices,
//! design construction, operator norms, Gaussian kernels) is written against
//! [`Real`], so the same code runs in `f32` and `f64`. Polynomial closed forms
//! that need no transcendental functions are generic over [`Field`] instead,
//! which also admits exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Floating-point scalar used by the numeric kernels.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

/// Exact-or-approximate field: enough for polynomial closed forms.
pub trait Field: Num + Clone + FromPrimitive + Debug {}

impl<T> Field for T where T: Num + Clone + FromPrimitive + Debug {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: ToPrimitive>(x: T) -> f64 {
    x.to_f64().expect("scalar converts to f64")
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let v = to_f64(x);
    lit(0.5 * statrs::function::erf::erfc(-v / std::f64::consts::SQRT_2))
}

/// Standard normal density at `x - mean`.
pub fn normal_pdf<T: Real>(x: T, mean: T) -> T {
    let z = x - mean;
    let inv_sqrt_2pi: T = lit(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-(z * z) / lit(2.0)).exp()
}

/// Clamp a probability into `[1e-12, 1 - 1e-12]` before it reaches a sampler.
#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(1e-12, 1.0 - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_matches_reference_values() {
        assert!((normal_cdf(0.0f64) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(0.32f64) - 0.625_515_9).abs() < 1e-6);
        assert!((normal_cdf(-0.08f64) - 0.468_118_0).abs() < 1e-6);
        assert!((normal_cdf(0.5f32) - 0.691_462_5).abs() < 1e-6);
    }

    #[test]
    fn pdf_peak() {
        assert!((normal_pdf(1.0f64, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }
}
