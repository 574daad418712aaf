//! Quadrature rules: fixed Gauss–Legendre and adaptive Gauss–Kronrod.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Integral value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub abs_err: T,
}

impl<T: Real> Estimate<T> {
    pub fn new(value: T, abs_err: T) -> Self {
        Self { value, abs_err }
    }

    pub fn exact(value: T) -> Self {
        Self { value, abs_err: T::zero() }
    }
}

impl<T: Real> std::ops::Add for Estimate<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.abs_err + rhs.abs_err)
    }
}

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        // Newton iteration on P_n in f64, then narrowed to T.
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let m = (n + 1) / 2;
        let nf = n as f64;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// 7-point Gauss / 15-point Kronrod abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    let fc = f(mid);
    let mut resk = fc * lit(WGK[7]);
    let mut resg = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        resk = resk + s * lit(WGK[j]);
        if j % 2 == 1 {
            resg = resg + s * lit(WG[j / 2]);
        }
    }
    let value = resk * half;
    let err = ((resk - resg) * half).abs();
    (value, err)
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    err: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_segments: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self { abs: lit(1e-12), rel: lit(1e-12), max_segments: 4000 }
    }
}

impl<T: Real> Tolerance<T> {
    pub fn abs(abs: T) -> Self {
        Self { abs, rel: T::zero(), ..Default::default() }
    }

    fn target(&self, value: T) -> T {
        self.abs.max(self.rel * value.abs())
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration with bisection of
/// the worst segment. Integrable endpoint singularities are handled by
/// repeated bisection; no extrapolation is attempted.
pub fn adaptive<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: Tolerance<T>) -> Result<Estimate<T>> {
    if a == b {
        return Ok(Estimate::exact(T::zero()));
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let floor = lit::<T>(50.0) * T::epsilon();
    while total_err > tol.target(total) {
        if heap.len() >= tol.max_segments {
            return Err(Error::Quadrature {
                value: total.as_f64(),
                residual: total_err.as_f64(),
                tolerance: tol.target(total).as_f64(),
            });
        }
        let seg = heap.pop().expect("non-empty heap");
        let mid = (seg.a + seg.b) * lit(0.5);
        if (seg.b - seg.a).abs() <= floor * mid.abs().max(T::min_positive_value()) {
            // Cannot subdivide any further; accept what we have.
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        total = total - seg.value + v1 + v2;
        total_err = total_err - seg.err + e1 + e2;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
    }
    // Recompute sums to shed accumulated cancellation in the running totals.
    let value = heap.iter().map(|s| s.value).sum();
    let abs_err = heap.iter().map(|s| s.err).sum();
    Ok(Estimate { value, abs_err })
}

/// Adaptive integration over consecutive breakpoints `pts[0] < pts[1] < ...`.
pub fn adaptive_pieces<T: Real, F: FnMut(T) -> T>(mut f: F, pts: &[T], tol: Tolerance<T>) -> Result<Estimate<T>> {
    let mut acc = Estimate::exact(T::zero());
    let pieces = T::from_usize_lossy(pts.len().saturating_sub(1).max(1));
    let sub = Tolerance { abs: tol.abs / pieces, ..tol };
    for w in pts.windows(2) {
        acc = acc + adaptive(&mut f, w[0], w[1], sub)?;
    }
    Ok(acc)
}

/// `∫_y^∞ sin(x) x^{-p} dx` for `p > 1`, via the asymptotic expansion
/// past a switch point and adaptive quadrature before it.
pub fn sin_power_tail<T: Real>(y: T, p: T) -> Result<Estimate<T>> {
    let switch = lit::<T>(60.0);
    if y >= switch {
        return Ok(Estimate::new(sin_tail_asymptotic(y, p), lit::<T>(1e-16) * y.powf(-p)));
    }
    // Integrate whole periods up to the switch point.
    let period = T::PI();
    let mut pts = vec![y];
    let mut x = y;
    while x < switch {
        x = (x + period).min(switch);
        pts.push(x);
    }
    let head = adaptive_pieces(|x: T| x.sin() * x.powf(-p), &pts, Tolerance::abs(lit(1e-15)))?;
    let tail = sin_tail_asymptotic(switch, p);
    Ok(Estimate::new(head.value + tail, head.abs_err + lit::<T>(1e-16)))
}

fn sin_tail_asymptotic<T: Real>(y: T, p: T) -> T {
    // ∫_y^∞ e^{ix} x^{-p} dx = i e^{iy} Σ_k (-i)^k (p)_k y^{-p-k}
    let (mut re, mut im) = (T::zero(), T::zero());
    let mut coeff = y.powf(-p);
    let mut k = 0usize;
    let mut last = T::infinity();
    while k < 40 {
        // (-i)^k cycles through 1, -i, -1, i
        let (cr, ci) = match k % 4 {
            0 => (T::one(), T::zero()),
            1 => (T::zero(), -T::one()),
            2 => (-T::one(), T::zero()),
            _ => (T::zero(), T::one()),
        };
        let term = coeff.abs();
        if term > last {
            break;
        }
        re = re + cr * coeff;
        im = im + ci * coeff;
        if term < T::epsilon() * lit(1e-3) * y.powf(-p) {
            break;
        }
        last = term;
        coeff = coeff * (p + T::from_usize_lossy(k)) / y;
        k += 1;
    }
    // multiply (re + i im) by i e^{iy} = i(cos y + i sin y) = -sin y + i cos y
    let (s, c) = (y.sin(), y.cos());
    // Im part of (-s + i c)(re + i im) = c re - s im
    c * re - s * im
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::<f64>::new(10);
        // exact for degree <= 19
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(19));
        let exact = (2.0f64.powi(20) - 1.0) / 20.0;
        assert!((v - exact).abs() / exact < 1e-13);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_large_order_weights_positive() {
        let gl = GaussLegendre::<f64>::new(128);
        assert!(gl.weights.iter().all(|&w| w > 0.0));
        let v = gl.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10, "{est:?}");
    }

    #[test]
    fn adaptive_reports_failure() {
        let tol = Tolerance { abs: 1e-14, rel: 0.0, max_segments: 3 };
        let res = adaptive(|x: f64| (50.0 * x).sin() / (x + 1e-3), 0.0, 10.0, tol);
        assert!(matches!(res, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn sin_tail_matches_brute_force() {
        // ∫_y^∞ sin x x^{-p} dx, brute-forced by period sums far out
        for &(y, p) in &[(5.0f64, 2.5f64), (60.0, 3.0), (120.0, 2.2), (0.7, 2.9)] {
            let v = sin_power_tail(y, p).unwrap().value;
            let mut pts = vec![y];
            let mut x = y;
            while x < 4000.0 {
                x += std::f64::consts::PI;
                pts.push(x);
            }
            let brute = adaptive_pieces(|x: f64| x.sin() * x.powf(-p), &pts, Tolerance::abs(1e-14)).unwrap();
            // remainder after 4000 is bounded by 4000^{-p}
            assert!((v - brute.value).abs() < 2.0 * 4000f64.powf(-p) + 1e-13, "y={y} p={p} {v} {}", brute.value);
        }
    }
}
