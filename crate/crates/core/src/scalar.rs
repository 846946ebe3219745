//! Numeric types the metric can be computed in.
//!
//! Every quantity the metric produces is a ratio of small integers, so the
//! recursion only needs field operations and an ordering. Floating point
//! types are the usual choice; [`BigRational`] gives exact results, which is
//! what the golden and oracle tests run on.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

/// A number type usable for similarity scores and assignment costs.
pub trait Scalar: Num + Clone + PartialOrd + Debug {
    /// The value `num / den`. `den` must be non-zero.
    fn from_ratio(num: usize, den: usize) -> Self;

    /// Nearest `f64`, used for reports and display.
    fn as_f64(&self) -> f64;

    /// Whether `self` is zero up to the rounding noise of the type.
    ///
    /// The assignment solver uses this to decide which edges have zero
    /// reduced cost. Exact types answer `self == 0`.
    fn is_negligible(&self) -> bool;

    fn from_count(n: usize) -> Self {
        Self::from_ratio(n, 1)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn from_ratio(num: usize, den: usize) -> Self {
        num as f64 / den as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-9
    }
}

impl Scalar for f32 {
    fn from_ratio(num: usize, den: usize) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn as_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-4
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: usize, den: usize) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    fn is_negligible(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}
