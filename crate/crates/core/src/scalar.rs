//! Scalar abstraction: the numeric element type of tensors and weights.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use rand::distributions::uniform::SampleUniform;

/// Floating-point scalar usable as a tensor element: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + SampleUniform
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from `f64` for constants and thresholds.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant not representable")
    }

    /// Conversion from `usize` for size-derived factors.
    fn from_usize_c(v: usize) -> Self {
        Self::from_usize(v).expect("usize not representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
