//! Scalar abstraction shared by every numeric module.
//!
//! All network, concentration and capital code is written against [`Real`],
//! which is implemented for `f32` and `f64`. Special functions (the standard
//! normal CDF and its inverse) are evaluated in `f64` and converted back.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + for<'de> serde::Deserialize<'de>
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::lit(standard_normal().cdf(x.as_f64()))
}

/// Inverse of the standard normal CDF. Returns `-inf`/`inf` at 0 and 1.
pub fn norm_ppf<T: Real>(p: T) -> T {
    let p = p.as_f64();
    if p <= 0.0 {
        return T::neg_infinity();
    }
    if p >= 1.0 {
        return T::infinity();
    }
    let n = standard_normal();
    let mut x = n.inverse_cdf(p);
    // two Newton steps against the CDF bring the result to full precision
    for _ in 0..2 {
        let density = n.pdf(x);
        if density > 0.0 {
            x -= (n.cdf(x) - p) / density;
        }
    }
    T::lit(x)
}

/// Sum in ascending order of value. Used where results must not depend on
/// the order in which terms were produced.
pub(crate) fn canonical_sum<T: Real>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    values.iter().copied().sum()
}
