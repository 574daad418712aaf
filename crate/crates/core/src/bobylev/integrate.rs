//! Time integration of `∂_t u = Q(u) − γ_2 u` (deficit form of
//! `∂_t φ = G_n(φ) − γ_2 φ`).
//!
//! The primary path solves the Duhamel form on each step,
//!
//! ```text
//! u(τ) = e^{−γ_2 τ} u_0 + ∫_0^τ e^{−γ_2(τ−s)} Q(u(s)) ds,
//! ```
//!
//! by Picard iteration on Chebyshev–Lobatto collocation nodes. Classical
//! RK4 on the differential form is kept as an independent cross-check.

use log::debug;

use super::collision::CollisionPlan;
use crate::charfun::RadialCharFn;
use crate::error::{Error, Result};
use crate::num::{lit, Real};
use crate::quad::GaussLegendre;

/// Collocation weights for one `(Δt, γ_2)` pair.
#[derive(Debug, Clone)]
pub struct DuhamelRule<T = f64> {
    pub dt: T,
    pub gamma2: T,
    /// Lobatto nodes on `[0, Δt]`, first 0, last `Δt`.
    pub nodes: Vec<T>,
    decay: Vec<T>,
    /// `w[i][j] = ∫_0^{τ_i} e^{−γ_2(τ_i − s)} ℓ_j(s) ds`.
    weights: Vec<Vec<T>>,
}

impl<T: Real> DuhamelRule<T> {
    pub fn new(dt: T, gamma2: T, order: usize) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if order < 2 {
            return Err(Error::Domain("collocation order must be at least 2".into()));
        }
        let p = order;
        let half = lit::<T>(0.5);
        let nodes: Vec<T> = (0..p)
            .map(|j| {
                let c = (T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(p - 1)).cos();
                dt * half * (T::one() - c)
            })
            .collect();
        let lagrange = |j: usize, s: T| {
            let mut v = T::one();
            for (k, &tk) in nodes.iter().enumerate() {
                if k != j {
                    v = v * (s - tk) / (nodes[j] - tk);
                }
            }
            v
        };
        let gl = GaussLegendre::<T>::new(p + 16);
        let mut weights = vec![vec![T::zero(); p]; p];
        for i in 1..p {
            let ti = nodes[i];
            for (j, w) in weights[i].iter_mut().enumerate() {
                *w = gl.integrate(T::zero(), ti, |s| (-gamma2 * (ti - s)).exp() * lagrange(j, s));
            }
        }
        let decay = nodes.iter().map(|&t| (-gamma2 * t).exp()).collect();
        Ok(Self { dt, gamma2, nodes, decay, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// Outcome of one Picard solve.
#[derive(Debug, Clone)]
pub struct PicardOutcome<T> {
    pub deficit: Vec<T>,
    pub iterations: usize,
    pub last_update: T,
}

/// Picard iteration of the collocated Duhamel map, started from the
/// constant-in-time extension of `u0`.
pub fn picard_solve<T: Real>(
    plan: &CollisionPlan<T>,
    rule: &DuhamelRule<T>,
    u0: &[T],
    tol: T,
    max_iters: usize,
) -> Result<PicardOutcome<T>> {
    let p = rule.order();
    let n = u0.len();
    let mut stages: Vec<Vec<T>> = vec![u0.to_vec(); p];
    let q0 = plan.loss_deficit(u0);
    let mut qs: Vec<Vec<T>> = vec![q0; p];
    let mut next = vec![T::zero(); n];
    let mut last = T::infinity();
    for it in 1..=max_iters {
        if it > 1 {
            for j in 1..p {
                plan.loss_deficit_into(&stages[j], &mut qs[j]);
            }
        }
        let mut update = T::zero();
        for i in 1..p {
            let (d, w) = (rule.decay[i], &rule.weights[i]);
            for (k, out) in next.iter_mut().enumerate() {
                let mut acc = d * u0[k];
                for (j, q) in qs.iter().enumerate() {
                    acc = acc + w[j] * q[k];
                }
                *out = acc;
            }
            let diff = next.iter().zip(&stages[i]).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
            update = update.max(diff);
            stages[i].copy_from_slice(&next);
        }
        last = update;
        if update < tol {
            let deficit = stages.pop().expect("at least two stages");
            return Ok(PicardOutcome { deficit, iterations: it, last_update: update });
        }
    }
    Err(Error::PicardNoConvergence { iterations: max_iters, last_update: last.as_f64() })
}

/// Sets `u(0) = 0` and clamps `u` into `[0, 2]` (i.e. `|φ| ≤ 1` for real
/// `φ`). Returns the largest correction.
pub fn enforce_range<T: Real>(u: &mut [T]) -> T {
    let mut worst = u[0].abs();
    u[0] = T::zero();
    let two = lit::<T>(2.0);
    for v in u.iter_mut().skip(1) {
        let c = v.max(T::zero()).min(two);
        worst = worst.max((c - *v).abs());
        *v = c;
    }
    if worst > T::zero() {
        debug!("range clip of magnitude {worst:e}");
    }
    worst
}

/// Result of [`duhamel_step`].
#[derive(Debug, Clone)]
pub struct Step<T = f64> {
    pub phi: RadialCharFn<T>,
    pub iterations: usize,
    pub clip: T,
}

/// One Duhamel step of length `rule.dt` from `phi`.
pub fn duhamel_step<T: Real>(
    phi: &RadialCharFn<T>,
    plan: &CollisionPlan<T>,
    rule: &DuhamelRule<T>,
    picard_tol: T,
    max_iters: usize,
) -> Result<Step<T>> {
    if !phi.is_real() {
        return Err(Error::Domain("the isotropic solver needs a real profile".into()));
    }
    let mut out = picard_solve(plan, rule, phi.deficit_re(), picard_tol, max_iters)?;
    let clip = enforce_range(&mut out.deficit);
    let phi = phi.with_real_deficit(out.deficit, phi.provenance().to_string())?;
    Ok(Step { phi, iterations: out.iterations, clip })
}

fn rhs<T: Real>(plan: &CollisionPlan<T>, u: &[T]) -> Vec<T> {
    let g = plan.gamma2();
    let mut q = plan.loss_deficit(u);
    for (qi, ui) in q.iter_mut().zip(u) {
        *qi = *qi - g * *ui;
    }
    q
}

/// One classical RK4 step of `∂_t u = Q(u) − γ_2 u`.
pub fn rk4_step<T: Real>(plan: &CollisionPlan<T>, u: &[T], h: T) -> Vec<T> {
    let half = lit::<T>(0.5);
    let axpy = |a: T, x: &[T], y: &[T]| -> Vec<T> { y.iter().zip(x).map(|(yi, xi)| *yi + a * *xi).collect() };
    let k1 = rhs(plan, u);
    let k2 = rhs(plan, &axpy(h * half, &k1, u));
    let k3 = rhs(plan, &axpy(h * half, &k2, u));
    let k4 = rhs(plan, &axpy(h, &k3, u));
    let sixth = h / lit(6.0);
    let mut out: Vec<T> = (0..u.len())
        .map(|i| u[i] + sixth * (k1[i] + lit::<T>(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect();
    out[0] = T::zero();
    out
}

/// RK4 from `phi` over `duration` with `γ_2 h ≤ rate_step`.
pub fn rk4_integrate<T: Real>(phi: &RadialCharFn<T>, plan: &CollisionPlan<T>, duration: T, rate_step: T) -> Result<RadialCharFn<T>> {
    if !phi.is_real() {
        return Err(Error::Domain("the isotropic solver needs a real profile".into()));
    }
    if duration == T::zero() {
        return Ok(phi.clone());
    }
    let steps = (duration * plan.gamma2() / rate_step).ceil().max(T::one());
    let m = steps.to_usize().unwrap_or(1);
    let h = duration / T::from_usize_lossy(m);
    let mut u = phi.deficit_re().to_vec();
    for _ in 0..m {
        u = rk4_step(plan, &u, h);
    }
    phi.with_real_deficit(u, phi.provenance().to_string())
}
