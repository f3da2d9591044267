//! Scalar abstraction: the numeric kernels are generic over the float type.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Scalar used for edge weights, distances and statistics.
///
/// Implemented by `f32` and `f64`; the crate-level alias [`crate::Weight`]
/// pins `f64` for the experiment drivers and the CLI.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Lossy conversion from `f64`, panicking only for exotic scalar types.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 must convert into the scalar type")
}

/// Conversion from a count.
#[inline]
pub fn real_of_usize<R: Real>(x: usize) -> R {
    R::from_usize(x).expect("usize must convert into the scalar type")
}
