use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point element type shared by images, spectra and tensors.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite conversion to f64")
    }

    /// Casts between scalar types by way of `f64`.
    #[inline]
    fn cast<U: Scalar>(self) -> U {
        U::lit(self.as_f64())
    }

    /// Clamps into `[lo, hi]`; NaN maps to `lo`.
    #[inline]
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        if self > hi {
            hi
        } else if self >= lo {
            self
        } else {
            lo
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_handles_nan() {
        assert_eq!(f64::NAN.clamp_to(0.0, 1.0), 0.0);
        assert_eq!(2.0f32.clamp_to(0.0, 1.0), 1.0);
        assert_eq!(0.25f64.clamp_to(0.0, 1.0), 0.25);
    }

    #[test]
    fn cast_round_trips_representable_values() {
        let x: f32 = 0.5f64.cast();
        assert_eq!(x, 0.5);
        assert_eq!(x.cast::<f64>(), 0.5);
    }
}
