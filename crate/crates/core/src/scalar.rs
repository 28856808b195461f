//! Scalar abstraction: every numerical routine in this crate is generic over a
//! real scalar type, with `f32` and `f64` as the intended instantiations.

use nalgebra::RealField;

/// Real scalar type usable throughout the crate.
///
/// Blanket-implemented for every `Copy` type that satisfies nalgebra's
/// [`RealField`], in particular `f32` and `f64`.
pub trait Scalar: RealField + Copy {}

impl<T: RealField + Copy> Scalar for T {}

/// Convert an `f64` constant to the working scalar type.
#[inline]
pub fn conv<T: Scalar>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Lossy conversion back to `f64` (used for formatting and level indexing).
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    nalgebra::try_convert(x).unwrap_or(f64::NAN)
}
