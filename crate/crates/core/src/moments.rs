//! Physical-space moments read off characteristic functions.
//!
//! The bridge is the identity
//!
//! ```text
//! ∫ (1 − cos ξ·v) |ξ|^{−3−α} dξ = c(α) |v|^α,
//! c(α) = ∫_{R³} (1 − cos ζ₁) |ζ|^{−3−α} dζ = 4π ∫_0^∞ (1 − sinc x) x^{−1−α} dx,
//! ```
//!
//! so `‖Re φ − 1‖_{M^α} = c(α) ∫|v|^α dF` for any probability measure `F`.

use std::any::TypeId;
use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;

use crate::charfun::{mnorm_re, CharFn, Finiteness, RadialCharFn};
use crate::error::{domain, Error, Result};
use crate::num::{lit, ls_slope, one_minus_sinc, Real};
use crate::quad::{adaptive_pieces, sin_power_tail, Estimate, Tolerance};

type CacheKey = (TypeId, u64);

fn levy_cache() -> &'static RwLock<HashMap<CacheKey, (f64, f64)>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, (f64, f64)>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `c(α)` with its quadrature error; cached per `(scalar type, α)`.
pub fn levy_constant<T: Real>(alpha: T) -> Result<Estimate<T>> {
    if !(alpha > T::zero() && alpha < lit(2.0)) {
        return Err(Error::Divergence(format!("c(alpha) diverges for alpha = {alpha} outside (0, 2)")));
    }
    let key = (TypeId::of::<T>(), alpha.as_f64().to_bits());
    if let Some(&(v, e)) = levy_cache().read().expect("cache lock").get(&key) {
        return Ok(Estimate::new(T::lit(v), T::lit(e)));
    }
    let est = levy_constant_uncached(alpha)?;
    levy_cache()
        .write()
        .expect("cache lock")
        .entry(key)
        .or_insert((est.value.as_f64(), est.abs_err.as_f64()));
    Ok(est)
}

fn levy_constant_uncached<T: Real>(alpha: T) -> Result<Estimate<T>> {
    let a = lit::<T>(0.1);
    // ∫_0^a (1 − sinc x) x^{−1−α} dx termwise: 1 − sinc x = Σ_{k≥1} (−1)^{k+1} x^{2k}/(2k+1)!
    let mut head = T::zero();
    let mut fact = lit::<T>(6.0);
    for k in 1..=8usize {
        let p = lit::<T>(2.0 * k as f64) - alpha;
        let term = a.powf(p) / (p * fact);
        head = if k % 2 == 1 { head + term } else { head - term };
        fact = fact * lit::<T>(((2 * k + 2) * (2 * k + 3)) as f64);
    }
    let x_end = lit::<T>(60.0);
    let mut pts = vec![a];
    let mut x = a;
    while x < x_end {
        x = (x + T::PI()).min(x_end);
        pts.push(x);
    }
    let tol = Tolerance { abs: lit(1e-15), rel: lit(1e-15), max_segments: 20_000 };
    let body = adaptive_pieces(|x: T| one_minus_sinc(x) * x.powf(-T::one() - alpha), &pts, tol)?;
    let sine = sin_power_tail(x_end, lit::<T>(2.0) + alpha)?;
    let tail = x_end.powf(-alpha) / alpha - sine.value;
    let four_pi = lit::<T>(4.0) * T::PI();
    Ok(Estimate::new(
        four_pi * (head + body.value + tail),
        four_pi * (body.abs_err + sine.abs_err + T::epsilon() * head),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate<T = f64> {
    /// `∫|v|^α dF` of the symmetrised measure; `+∞` unless finite.
    pub value: T,
    pub finiteness: Finiteness,
    pub error_bound: T,
    /// `true` when `F` is not symmetric, so `value` refers to `(F + F(−·))/2`.
    pub symmetrized: bool,
}

/// `∫|v|^α dF = ‖Re φ − 1‖_{M^α} / c(α)`.
pub fn moment_from_charfn<T: Real, F: CharFn<T> + ?Sized>(f: &F, alpha: T) -> Result<MomentEstimate<T>> {
    let c = levy_constant(alpha)?;
    let m = mnorm_re(f, alpha)?;
    let symmetrized = match (f.as_analytic(), f.as_radial()) {
        (Some(a), _) => !a.is_symmetric(),
        (None, Some(r)) => !r.is_real(),
        _ => false,
    };
    if !m.is_finite() {
        return Ok(MomentEstimate { value: T::infinity(), finiteness: m.finiteness, error_bound: T::infinity(), symmetrized });
    }
    let value = m.value / c.value;
    // tail estimate is inside the value; its gap to the bound is the residual risk
    let tail_gap = (m.tail_bound - m.tail).max(T::zero());
    let err = (m.abs_err + tail_gap) / c.value + value * c.abs_err / c.value;
    Ok(MomentEstimate { value, finiteness: Finiteness::Finite, error_bound: err, symmetrized })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMoment<T = f64> {
    /// `∫|v|² dF = −3φ''(0)`; `+∞` unless finite.
    pub value: T,
    pub finiteness: Finiteness,
    /// Log-log slope of the deficit at the origin (2 for finite energy).
    pub local_exponent: Option<T>,
}

const C2_SLACK: f64 = 0.05;

/// `−3φ''(0)` from `1 − φ ≈ c r²` on the five smallest positive radii.
pub fn second_moment<T: Real>(f: &RadialCharFn<T>) -> SecondMoment<T> {
    let r = &f.radii()[1..6];
    let u = &f.deficit_re()[1..6];
    if u.iter().all(|v| *v == T::zero()) {
        return SecondMoment { value: T::zero(), finiteness: Finiteness::Finite, local_exponent: None };
    }
    if u.iter().any(|v| *v <= T::zero()) {
        return SecondMoment { value: T::nan(), finiteness: Finiteness::Inconclusive, local_exponent: None };
    }
    let lx: Vec<T> = r.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = u.iter().map(|x| x.ln()).collect();
    let e = ls_slope(&lx, &ly);
    if e < lit::<T>(2.0 - C2_SLACK) {
        return SecondMoment { value: T::infinity(), finiteness: Finiteness::Infinite, local_exponent: Some(e) };
    }
    let num: T = r.iter().zip(u).map(|(x, v)| *v * *x * *x).sum();
    let den: T = r.iter().map(|x| x.powi(4)).sum();
    SecondMoment { value: lit::<T>(6.0) * num / den, finiteness: Finiteness::Finite, local_exponent: Some(e) }
}

/// `ψ/ψ(0)` for `ψ = (1 − Δ)^n φ`.
#[derive(Debug, Clone)]
pub struct Lift<T = f64> {
    pub profile: RadialCharFn<T>,
    pub psi0: T,
    /// Sup-norm gap between 7- and 5-point stencils, the error estimate of `profile`.
    pub error_estimate: T,
}

/// Default acceptance threshold for [`laplacian_lift`].
pub const LIFT_TOLERANCE: f64 = 1e-6;

pub fn laplacian_lift<T: Real>(f: &RadialCharFn<T>, n: usize) -> Result<Lift<T>> {
    laplacian_lift_with_tol(f, n, lit(LIFT_TOLERANCE))
}

/// Finite-difference `(1 − Δ)^n` on the grid with `Δ = ∂_r² + (2/r)∂_r`
/// (`3∂_r²` at the origin), using even reflection through `r = 0`.
pub fn laplacian_lift_with_tol<T: Real>(f: &RadialCharFn<T>, n: usize, tol: T) -> Result<Lift<T>> {
    if n == 0 {
        return domain("lift order must be positive");
    }
    if !f.is_real() {
        return domain("the radial lift needs a real profile");
    }
    let radii = f.radii().to_vec();
    let mut d = f.deficit_re().to_vec();
    let mut psi0 = T::one();
    let mut err = T::zero();
    for _ in 0..n {
        let (lap7, lap5) = (radial_laplacian(&radii, &d, 7), radial_laplacian(&radii, &d, 5));
        let gap = lap7.iter().zip(&lap5).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        // ψ = c(1 − d) ⇒ (1 − Δ)ψ = c(1 + Δd(0)) − c(d − (Δd − Δd(0)))
        let scale = T::one() + lap7[0];
        let next: Vec<T> = d.iter().zip(&lap7).map(|(di, li)| (*di - (*li - lap7[0])) / scale).collect();
        err = err / scale.abs() + lit::<T>(2.0) * gap / scale.abs();
        psi0 = psi0 * scale;
        d = next;
    }
    if err > tol {
        return Err(Error::Numeric {
            what: format!("finite-difference lift of order {n}"),
            estimate: err.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    let profile =
        RadialCharFn::from_deficit(radii, d, vec![T::zero(); f.len()], f.interpolation(), format!("lift{n}({})", f.provenance()))?;
    Ok(Lift { profile, psi0, error_estimate: err })
}

/// `Δu` at every node from `m`-point Fornberg stencils.
fn radial_laplacian<T: Real>(r: &[T], u: &[T], m: usize) -> Vec<T> {
    let n = r.len();
    let half = m / 2;
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        // stencil: nearest m points of the reflected grid {±r_j}
        let (xs, ys) = stencil(r, u, i, m, half);
        let w = fornberg(r[i], &xs, 2);
        let d1: T = w[1].iter().zip(&ys).map(|(a, b)| *a * *b).sum();
        let d2: T = w[2].iter().zip(&ys).map(|(a, b)| *a * *b).sum();
        out[i] = if i == 0 { lit::<T>(3.0) * d2 } else { d2 + lit::<T>(2.0) * d1 / r[i] };
    }
    out
}

fn stencil<T: Real>(r: &[T], u: &[T], i: usize, m: usize, half: usize) -> (Vec<T>, Vec<T>) {
    let n = r.len();
    if i >= half && i + half < n {
        return (r[i - half..=i + half].to_vec(), u[i - half..=i + half].to_vec());
    }
    if i < half {
        // reflect: indices −(half−i)..(half+i) map to r_{|k|} with sign
        let mut xs = Vec::with_capacity(m);
        let mut ys = Vec::with_capacity(m);
        let lo = i as isize - half as isize;
        for k in lo..=(i + half) as isize {
            let j = k.unsigned_abs();
            xs.push(if k < 0 { -r[j] } else { r[j] });
            ys.push(u[j]);
        }
        return (xs, ys);
    }
    (r[n - m..].to_vec(), u[n - m..].to_vec())
}

/// Fornberg weights for derivatives `0..=order` at `x0` on nodes `xs`.
fn fornberg<T: Real>(x0: T, xs: &[T], order: usize) -> Vec<Vec<T>> {
    let n = xs.len();
    let mut c = vec![vec![T::zero(); n]; order + 1];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (T::from_usize_lossy(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - T::from_usize_lossy(k) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_matches_central_differences() {
        let xs = [-1.0, 0.0, 1.0];
        let w = fornberg(0.0, &xs, 2);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn series_head_matches_quadrature() {
        // ∫_0^0.1 (1 − sinc x) x^{−2} dx against adaptive quadrature
        let q = crate::quad::adaptive(
            |x: f64| one_minus_sinc(x) / (x * x),
            0.0,
            0.1,
            Tolerance::abs(1e-15),
        )
        .unwrap();
        let c = levy_constant_uncached(1.0f64).unwrap();
        assert!(c.value > 0.0);
        assert!((q.value - (0.1f64 / 6.0 - 0.1f64.powi(3) / 360.0)).abs() < 1e-9);
    }
}
