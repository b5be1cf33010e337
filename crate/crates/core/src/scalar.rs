//! Numeric scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar type the optimization stack is generic over.
///
/// Blanket-implemented for every float that satisfies the bounds, which in
/// practice means `f32` and `f64`. Tolerances are tuned for `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `log2(x)`, the unit used for every reported rate.
    #[inline]
    fn bits(self) -> Self {
        self.log2()
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

/// Converts a dB value to linear scale, `10^(db/10)`.
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}
