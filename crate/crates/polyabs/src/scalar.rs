//! Scalar abstraction for the crate.
//!
//! Every numeric routine is generic over [`Real`], a trait alias that bundles
//! the floating-point behaviour we rely on. It is blanket-implemented, so
//! `f32` and `f64` both qualify automatically.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar type underlying all computations.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum<Self> + Debug + Display + 'static
{
    /// Converts an `f64` constant into the scalar type.
    ///
    /// Panics if the value is not representable, which cannot happen for the
    /// finite literals this crate feeds it.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    /// The value as `f64`, for diagnostics and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum<Self> + Debug + Display + 'static
{
}
