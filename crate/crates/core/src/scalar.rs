//! Floating point scalars used by the spectral, Salem and Brownian code.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftNum;

/// A real floating point type: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// One draw from the standard normal law.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    /// Lossy conversion from an unsigned integer.
    #[inline]
    fn of_u64(x: u64) -> Self {
        <Self as FromPrimitive>::from_u64(x).expect("u64 is representable")
    }

    /// Lossy conversion from a signed integer.
    #[inline]
    fn of_i64(x: i64) -> Self {
        <Self as FromPrimitive>::from_i64(x).expect("i64 is representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// `exp(-2πi · num / den)` with the angle reduced exactly in integers first.
#[inline]
pub fn unit_root<T: Real>(num: i128, den: u128) -> Complex<T> {
    let den_i = den as i128;
    let r = num.rem_euclid(den_i);
    // Map to (-den/2, den/2] so the angle stays small.
    let r = if 2 * r > den_i { r - den_i } else { r };
    let angle = -T::two_pi() * (T::of_i64(r as i64) / T::of_u64(den as u64));
    Complex::new(angle.cos(), angle.sin())
}

/// `(1 - e^{-2πi u}) / (2πi u)` for `u = num / den`, the transform of the unit
/// box `1_{[0,1]}` evaluated at `u`.
pub fn box_transform<T: Real>(num: i128, den: u128) -> Complex<T> {
    if num == 0 {
        return Complex::new(T::one(), T::zero());
    }
    let den_i = den as i128;
    if num % den_i == 0 {
        return Complex::new(T::zero(), T::zero());
    }
    // e^{-πiu} sin(πu) / (πu); the phase and sine use the residue mod 2·den.
    let two_den = 2 * den_i;
    let r = num.rem_euclid(two_den);
    let r = if r > den_i { r - two_den } else { r };
    let half_angle = T::PI() * (T::of_i64(r as i64) / T::of_u64(den as u64));
    let u = T::of(num as f64 / den as f64);
    let mag = half_angle.sin() / (T::PI() * u);
    Complex::new(half_angle.cos() * mag, -half_angle.sin() * mag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_transform_matches_integral() {
        // ∫_0^1 e^{-2πiux} dx at u = 1/2 is (1 - e^{-πi}) / (πi) = -2i/π.
        let v: Complex<f64> = box_transform(1, 2);
        assert!(v.re.abs() < 1e-15);
        assert!((v.im + 2.0 / std::f64::consts::PI).abs() < 1e-15);
        let z: Complex<f64> = box_transform(6, 3);
        assert_eq!(z, Complex::new(0.0, 0.0));
    }

    #[test]
    fn unit_root_reduces_exactly() {
        let a: Complex<f64> = unit_root(1, 4);
        let b: Complex<f64> = unit_root(1 + 4 * 1_000_000_007, 4);
        assert_eq!(a, b);
        assert!((a.im + 1.0).abs() < 1e-15);
    }
}
