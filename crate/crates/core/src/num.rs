//! Scalar abstraction shared by every numeric module.
//!
//! All of the numerics are written against [`Real`], so the same code runs
//! in `f32` for cheap exploratory sweeps and in `f64` for anything that has
//! to meet the tolerances quoted in the test-suite.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// `1 - sin(x)/x`, accurate for small `x`.
pub fn one_minus_sinc<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < lit(2e-2) {
        // 1 - sinc x = x^2/6 - x^4/120 + x^6/5040 - x^8/362880
        let x2 = x * x;
        x2 * (lit::<T>(1.0 / 6.0)
            - x2 * (lit::<T>(1.0 / 120.0) - x2 * (lit::<T>(1.0 / 5040.0) - x2 * lit::<T>(1.0 / 362_880.0))))
    } else {
        T::one() - x.sin() / x
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc<T: Real>(x: T) -> T {
    T::one() - one_minus_sinc(x)
}

/// `1 - cos(x)`, accurate for small `x`.
#[inline]
pub fn one_minus_cos<T: Real>(x: T) -> T {
    let h = (x * lit(0.5)).sin();
    lit::<T>(2.0) * h * h
}

/// `(e^{a t} - e^{b t}) / (a - b)`, continuous across `a == b`.
pub fn exp_diff_quotient<T: Real>(a: T, b: T, t: T) -> T {
    let d = a - b;
    if (d * t).abs() < lit(1e-8) {
        // e^{bt} (e^{dt} - 1)/d ~ t e^{bt} (1 + dt/2)
        t * (b * t).exp() * (T::one() + d * t * lit(0.5))
    } else {
        (b * t).exp() * (d * t).exp_m1() / d
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    sxy / sxx
}

pub type Vec3<T> = [T; 3];

#[inline]
pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<T: Real>(a: Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm2<T: Real>(a: Vec3<T>) -> T {
    dot(a, a)
}

#[inline]
pub fn scale<T: Real>(s: T, a: Vec3<T>) -> Vec3<T> {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
