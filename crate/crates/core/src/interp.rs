//! Piecewise-cubic interpolation on a fixed, strictly increasing grid.
//!
//! Both schemes are linear in the data once the auxiliary per-node vector
//! (second derivatives for the spline, slopes for PCHIP) is known, so a
//! [`Sample`] can be precomputed for a fixed evaluation point and reused
//! across many data vectors on the same grid.

use serde::{Deserialize, Serialize};

use crate::num::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// C² cubic spline with not-a-knot end conditions.
    #[default]
    Spline,
    /// Shape-preserving monotone cubic Hermite (Fritsch–Carlson).
    Pchip,
}

/// Precomputed interpolation weights for one evaluation point:
/// `value = w[0]·y[j] + w[1]·y[j+1] + w[2]·aux[j] + w[3]·aux[j+1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub j: usize,
    pub w: [T; 4],
}

impl<T: Real> Sample<T> {
    #[inline]
    pub fn apply(&self, y: &[T], aux: &[T]) -> T {
        let j = self.j;
        self.w[0] * y[j] + self.w[1] * y[j + 1] + self.w[2] * aux[j] + self.w[3] * aux[j + 1]
    }
}

/// Index `j` with `xs[j] <= x <= xs[j+1]`, clamped to the grid.
pub fn locate<T: Real>(xs: &[T], x: T) -> usize {
    let n = xs.len();
    debug_assert!(n >= 2);
    let p = xs.partition_point(|&v| v <= x);
    p.clamp(1, n - 1) - 1
}

impl Interpolation {
    /// Per-node auxiliary vector for data `y` on grid `xs`.
    pub fn aux<T: Real>(self, xs: &[T], y: &[T]) -> Vec<T> {
        match self {
            Interpolation::Spline => spline_second_derivatives(xs, y),
            Interpolation::Pchip => pchip_slopes(xs, y),
        }
    }

    /// Interpolation weights at `x` (clamped into the grid range).
    pub fn sample<T: Real>(self, xs: &[T], x: T) -> Sample<T> {
        let n = xs.len();
        let x = x.max(xs[0]).min(xs[n - 1]);
        let j = locate(xs, x);
        let h = xs[j + 1] - xs[j];
        let t = (x - xs[j]) / h;
        match self {
            Interpolation::Spline => {
                let a = T::one() - t;
                let b = t;
                let h26 = h * h / lit(6.0);
                Sample { j, w: [a, b, (a * a * a - a) * h26, (b * b * b - b) * h26] }
            }
            Interpolation::Pchip => {
                let t2 = t * t;
                let t3 = t2 * t;
                let two = lit::<T>(2.0);
                let three = lit::<T>(3.0);
                let h00 = two * t3 - three * t2 + T::one();
                let h10 = t3 - two * t2 + t;
                let h01 = -two * t3 + three * t2;
                let h11 = t3 - t2;
                Sample { j, w: [h00, h01, h10 * h, h11 * h] }
            }
        }
    }
}

fn spline_second_derivatives<T: Real>(xs: &[T], y: &[T]) -> Vec<T> {
    let n = xs.len();
    assert_eq!(n, y.len());
    let mut m = vec![T::zero(); n];
    if n < 3 {
        return m;
    }
    let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let six = lit::<T>(6.0);
    if n == 3 {
        // Single interior equation with natural ends.
        m[1] = six * (delta[1] - delta[0]) / (lit::<T>(2.0) * (h[0] + h[1]));
        return m;
    }
    let k = n - 2;
    let mut lo = vec![T::zero(); k];
    let mut di = vec![T::zero(); k];
    let mut up = vec![T::zero(); k];
    let mut rhs = vec![T::zero(); k];
    for r in 0..k {
        let i = r + 1;
        lo[r] = h[i - 1];
        di[r] = lit::<T>(2.0) * (h[i - 1] + h[i]);
        up[r] = h[i];
        rhs[r] = six * (delta[i] - delta[i - 1]);
    }
    // not-a-knot: M0 = ((h0+h1) M1 - h0 M2)/h1
    di[0] = di[0] + lo[0] * (h[0] + h[1]) / h[1];
    up[0] = up[0] - lo[0] * h[0] / h[1];
    // M_{n-1} = ((h_{n-2}+h_{n-3}) M_{n-2} - h_{n-2} M_{n-3}) / h_{n-3}
    let (ha, hb) = (h[n - 3], h[n - 2]);
    di[k - 1] = di[k - 1] + up[k - 1] * (ha + hb) / ha;
    lo[k - 1] = lo[k - 1] - up[k - 1] * hb / ha;
    let sol = thomas(&lo, &di, &up, &rhs);
    m[1..n - 1].copy_from_slice(&sol);
    m[0] = ((h[0] + h[1]) * m[1] - h[0] * m[2]) / h[1];
    m[n - 1] = ((ha + hb) * m[n - 2] - hb * m[n - 3]) / ha;
    m
}

fn thomas<T: Real>(lo: &[T], di: &[T], up: &[T], rhs: &[T]) -> Vec<T> {
    let k = di.len();
    let mut c = vec![T::zero(); k];
    let mut d = vec![T::zero(); k];
    c[0] = up[0] / di[0];
    d[0] = rhs[0] / di[0];
    for i in 1..k {
        let denom = di[i] - lo[i] * c[i - 1];
        c[i] = up[i] / denom;
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / denom;
    }
    let mut x = vec![T::zero(); k];
    x[k - 1] = d[k - 1];
    for i in (0..k - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn pchip_slopes<T: Real>(xs: &[T], y: &[T]) -> Vec<T> {
    let n = xs.len();
    let mut d = vec![T::zero(); n];
    if n < 2 {
        return d;
    }
    let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    let two = lit::<T>(2.0);
    for k in 1..n - 1 {
        let (m0, m1) = (delta[k - 1], delta[k]);
        if m0 * m1 <= T::zero() {
            d[k] = T::zero();
        } else {
            let w1 = two * h[k] + h[k - 1];
            let w2 = h[k] + two * h[k - 1];
            d[k] = (w1 + w2) / (w1 / m0 + w2 / m1);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end<T: Real>(h0: T, h1: T, m0: T, m1: T) -> T {
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let d = ((two * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        T::zero()
    } else if m0.signum() != m1.signum() && d.abs() > three * m0.abs() {
        three * m0
    } else {
        d
    }
}

/// Interpolant bundled with its data.
#[derive(Debug, Clone)]
pub struct Interpolant<T> {
    kind: Interpolation,
    xs: Vec<T>,
    ys: Vec<T>,
    aux: Vec<T>,
}

impl<T: Real> Interpolant<T> {
    pub fn new(kind: Interpolation, xs: Vec<T>, ys: Vec<T>) -> Self {
        let aux = kind.aux(&xs, &ys);
        Self { kind, xs, ys, aux }
    }

    pub fn eval(&self, x: T) -> T {
        self.kind.sample(&self.xs, x).apply(&self.ys, &self.aux)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        // deliberately non-uniform
        (0..n).map(|i| (i as f64 / (n - 1) as f64).powf(1.3) * 3.0).collect()
    }

    #[test]
    fn spline_reproduces_cubics() {
        let xs = grid(12);
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.25 * x * x * x;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let it = Interpolant::new(Interpolation::Spline, xs, ys);
        for k in 0..100 {
            let x = 3.0 * k as f64 / 99.0;
            assert!((it.eval(x) - f(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn spline_fourth_order_convergence() {
        let f = |x: f64| (-x * x / 2.0).exp();
        let err = |n: usize| {
            let xs: Vec<f64> = (0..n).map(|i| 5.0 * i as f64 / (n - 1) as f64).collect();
            let ys = xs.iter().map(|&x| f(x)).collect();
            let it = Interpolant::new(Interpolation::Spline, xs, ys);
            (0..997).map(|k| 5.0 * k as f64 / 996.0).map(|x| (it.eval(x) - f(x)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(41), err(81));
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn pchip_is_monotone_on_monotone_data() {
        let xs = grid(10);
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 1.5 { 0.0 } else { 1.0 }).collect();
        let it = Interpolant::new(Interpolation::Pchip, xs, ys);
        let mut prev = -1.0;
        for k in 0..500 {
            let v = it.eval(3.0 * k as f64 / 499.0);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn interpolants_hit_nodes() {
        let xs = grid(7);
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        for kind in [Interpolation::Spline, Interpolation::Pchip] {
            let it = Interpolant::new(kind, xs.clone(), ys.clone());
            for (x, y) in xs.iter().zip(&ys) {
                assert!((it.eval(*x) - y).abs() < 1e-14);
            }
        }
    }
}
