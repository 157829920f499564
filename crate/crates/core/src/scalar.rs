//! Scalar abstraction: all core math is generic over [`Real`]
//! (`f32`, `f64`, or any other float-like type from `num-traits`).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

pub trait Real:
    Float + NumAssign + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + NumAssign + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("constant not representable in scalar type")
}

/// `(t+1)` as a scalar, the base of every decaying weight sequence.
#[inline]
pub fn iter_base<T: Real>(t: usize) -> T {
    T::from_usize(t + 1).expect("iteration count not representable in scalar type")
}
