//! The floating-point abstraction every numerical routine is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float
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
    /// Converts an `f64` literal, panicking only if the target cannot represent it at all.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar literal out of range")
    }

    #[inline]
    fn from_count(v: usize) -> Self {
        Self::from_usize(v).expect("count out of range")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for "sums to one" style checks: 1e-12, widened to the type's resolution.
    #[inline]
    fn unit_tolerance() -> Self {
        let eps = Self::epsilon() * Self::lit(64.0);
        eps.max(Self::lit(1e-12))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Total order on finite scalars; NaN compares equal so sorting never panics.
pub(crate) fn cmp_scalar<S: Scalar>(a: &S, b: &S) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}

/// Lexicographic order on points, used to canonicalize atoms and break ties.
pub(crate) fn cmp_points<S: Scalar>(a: &[S], b: &[S]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match cmp_scalar(x, y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}
