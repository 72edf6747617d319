//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], which is implemented for `f32`
//! and `f64`. The tolerances quoted throughout the crate assume `f64`.

use nalgebra::{ComplexField, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

pub use nalgebra::Complex;

/// Real scalar usable for FFTs, dense linear algebra and transcendental functions.
pub trait Real: RealField + FftNum + ToPrimitive + Copy + Default {
    /// Converts an `f64` literal. Panics only for non-representable values, which
    /// never happens for the literals used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_index(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("index representable in scalar type")
    }

    #[inline]
    fn from_int(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Absolute value (`abs` is ambiguous between `Signed` and `ComplexField`).
    #[inline]
    fn mag(self) -> Self {
        ComplexField::abs(self)
    }

    #[inline]
    fn sgn(self) -> Self {
        ComplexField::signum(self)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{i phase}`.
#[inline]
pub(crate) fn expi<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

#[inline]
pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Euclidean norm of the first `dim` components.
#[inline]
pub(crate) fn norm2<T: Real>(v: &[T; 2], dim: usize) -> T {
    let mut s = T::zero();
    for c in v.iter().take(dim) {
        s += *c * *c;
    }
    s.sqrt()
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T; 2], b: &[T; 2], dim: usize) -> T {
    let mut s = T::zero();
    for k in 0..dim {
        s += a[k] * b[k];
    }
    s
}

/// Maps an angle-like coordinate to `[0, 2π)`.
#[inline]
pub(crate) fn wrap_2pi<T: Real>(x: T) -> T {
    let tp = T::two_pi();
    let r = x - (x / tp).floor() * tp;
    if r >= tp {
        r - tp
    } else {
        r
    }
}

/// Maps a torus coordinate to the centred chart `[-π, π)`.
#[inline]
pub(crate) fn wrap_centered<T: Real>(x: T) -> T {
    wrap_2pi(x + T::pi()) - T::pi()
}
