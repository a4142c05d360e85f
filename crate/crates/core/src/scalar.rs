//! Field scalars shared by the real (cut gauge) and complex (Peierls gauge)
//! code paths.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;

pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Debug
    + Default
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
{
    const IS_COMPLEX: bool;

    fn from_real(x: f64) -> Self;
    /// Narrowing conversion; `None` if the imaginary part cannot be dropped
    /// within `tol` (relative).
    fn from_complex(z: Complex64, tol: f64) -> Option<Self>;
    fn to_complex(self) -> Complex64;
    fn conjugate(self) -> Self;
    fn modulus_sq(self) -> f64;
    fn real_part(self) -> f64;
    fn scale_by(self, s: f64) -> Self;
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn modulus(self) -> f64 {
        self.modulus_sq().sqrt()
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_real(x: f64) -> Self {
        x
    }
    fn from_complex(z: Complex64, tol: f64) -> Option<Self> {
        (z.im.abs() <= tol * z.norm().max(1.0)).then_some(z.re)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn conjugate(self) -> Self {
        self
    }
    fn modulus_sq(self) -> f64 {
        self * self
    }
    fn real_part(self) -> f64 {
        self
    }
    fn scale_by(self, s: f64) -> Self {
        self * s
    }
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>() - 0.5
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_complex(z: Complex64, _tol: f64) -> Option<Self> {
        Some(z)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn modulus_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn real_part(self) -> f64 {
        self.re
    }
    fn scale_by(self, s: f64) -> Self {
        self * s
    }
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }
}

/// Hermitian inner product `Σ conj(x_i) y_i`.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a.conjugate() * b).sum()
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.modulus_sq()).sum::<f64>().sqrt()
}

/// `y ← y + a x`
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
