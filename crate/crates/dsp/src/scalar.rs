//! Scalar abstraction shared by every signal routine in this crate.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating-point sample type: `f32` or `f64`.
pub trait Sample:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Debug + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion from a count or index.
    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite cast")
    }
}

impl Sample for f32 {}
impl Sample for f64 {}

/// `10 * log10(power)`, `-inf` for zero power.
pub fn power_db<T: Sample>(power: T) -> f64 {
    let p = power.as_f64();
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * p.log10()
    }
}

/// `20 * log10(amplitude)`, `-inf` for zero amplitude.
pub fn amplitude_db<T: Sample>(amplitude: T) -> f64 {
    let a = amplitude.as_f64();
    if a <= 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * a.log10()
    }
}

pub(crate) fn mean<T: Sample>(values: &[T]) -> T {
    if values.is_empty() {
        T::zero()
    } else {
        values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len())
    }
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    })
}
