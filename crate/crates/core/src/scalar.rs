//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point type the solver and diagnostics are generic over.
///
/// Implemented for `f32` and `f64`. Everything numerical in the crate is
/// written against this trait; the `*F64` aliases at the crate root fix it
/// to `f64`, which is what the CLI and the JSON interfaces use.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts a literal. Panics only if the literal is not representable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Maximum of an iterator, `zero` for an empty one. NaNs are ignored.
pub(crate) fn max_or_zero<T: Real>(it: impl IntoIterator<Item = T>) -> T {
    it.into_iter()
        .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
}
