//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the solvers are generic over.
///
/// Implemented for `f32` and `f64`. All reference tolerances in the test
/// suites are stated for `f64`; `f32` builds work but only meet the looser
/// single-precision bounds.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + Sum + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// CSV/JSON number text: plain decimals for moderate magnitudes, exponent
/// notation otherwise. Round-trips through `f64` parsing.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Square root of a quantity known to be nonnegative up to rounding.
///
/// Values in `[-1e-13 * scale, 0)` are clamped to zero; anything more
/// negative is reported as `None`.
pub(crate) fn guarded_sqrt<T: Real>(value: T, scale: T) -> Option<T> {
    if value >= T::zero() {
        Some(value.sqrt())
    } else if value >= -T::lit(1e-13) * scale.abs().max(T::one()) {
        Some(T::zero())
    } else {
        None
    }
}
