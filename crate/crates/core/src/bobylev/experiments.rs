use log::warn;
use serde::{Deserialize, Serialize};

use super::evolve::{evolve, EvolutionTrace};
use super::SolveConfig;
use crate::charfun::{knorm, knorm_diff, mnorm_re_diff, RadialCharFn};
use crate::error::{Error, Result};
use crate::kernel::AngularKernel;
use crate::num::{exp_diff_quotient, lit, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct StabilityOptions<T = f64> {
    /// The unquantified constant in front of `A` and `B`.
    pub constant: T,
    /// Relative slack allowed on both right sides.
    pub rel_slack: T,
    /// Absolute slack (discretization floor) on both right sides.
    pub abs_slack: T,
}

impl<T: Real> Default for StabilityOptions<T> {
    fn default() -> Self {
        Self { constant: T::one(), rel_slack: lit(1e-3), abs_slack: lit(1e-12) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow<T = f64> {
    pub t: T,
    /// `‖φ(t) − φ̃(t)‖_α` and `e^{λ_α t}‖φ_0 − φ̃_0‖_α`.
    pub alpha_lhs: T,
    pub alpha_rhs: T,
    /// `‖φ(t) − φ̃(t)‖_{M̃^α}` and its bound.
    pub fourier_lhs: T,
    pub fourier_rhs: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport<T = f64> {
    pub rows: Vec<StabilityRow<T>>,
    pub lambda_alpha: T,
    pub lambda_beta: T,
    pub a: T,
    pub b: T,
    pub options: StabilityOptions<T>,
    pub alpha_holds: bool,
    pub fourier_holds: bool,
    /// Smallest `(1 + slack)·rhs − lhs` over rows, per bound.
    pub alpha_margin: T,
    pub fourier_margin: T,
    pub first_violation: Option<T>,
}

fn tilde_distance<T: Real>(a: &RadialCharFn<T>, b: &RadialCharFn<T>, alpha: T) -> Result<T> {
    let m = mnorm_re_diff(a, b, alpha)?;
    let k = knorm_diff(a, b, alpha)?;
    Ok(if m.is_finite() && k.is_finite() { m.value + k.value } else { T::infinity() })
}

/// Evolves both data with the same configuration and compares
/// `‖φ(t) − φ̃(t)‖_α ≤ e^{λ_α t}‖φ_0 − φ̃_0‖_α` and the `M̃^α` bound
/// `e^{λ_α t}D_0 + (e^{2λ_β t} − e^{λ_α t})/(2λ_β − λ_α)·A + (e^{λ_β t} − e^{λ_α t})/(λ_β − λ_α)·B`
/// at every snapshot.
pub fn stability_experiment<T: Real>(
    phi0: &RadialCharFn<T>,
    psi0: &RadialCharFn<T>,
    kernel: &AngularKernel<T>,
    cfg: &SolveConfig<T>,
    opts: &StabilityOptions<T>,
) -> Result<StabilityReport<T>> {
    if !phi0.same_grid(psi0) {
        return Err(Error::Domain("stability experiment needs both data on one grid".into()));
    }
    let ta = evolve(phi0, kernel, cfg)?;
    let tb = evolve(psi0, kernel, cfg)?;
    stability_from_traces(&ta, &tb, cfg, opts)
}

fn stability_from_traces<T: Real>(
    ta: &EvolutionTrace<T>,
    tb: &EvolutionTrace<T>,
    cfg: &SolveConfig<T>,
    opts: &StabilityOptions<T>,
) -> Result<StabilityReport<T>> {
    let (alpha, beta, eps) = (cfg.alpha, cfg.beta, cfg.epsilon);
    let (la, lb) = (ta.constants.lambda_alpha, ta.constants.lambda_beta);
    let (p0, q0) = (&ta.snapshots[0], &tb.snapshots[0]);
    let d0_alpha = knorm_diff(p0, q0, alpha)?.value;
    let d0_tilde = tilde_distance(p0, q0, alpha)?;
    let d0_beta = knorm_diff(p0, q0, beta)?.value;
    let (kp, kq) = (knorm(p0, beta)?.value, knorm(q0, beta)?.value);
    let c = opts.constant;
    let a = c * kp.max(kq) * d0_beta;
    let b = c * (d0_beta + kq.powf(T::one() - eps) * d0_beta.powf(eps));
    let mut rows = Vec::with_capacity(ta.times.len());
    let (mut alpha_margin, mut fourier_margin) = (T::infinity(), T::infinity());
    let mut first_violation = None;
    for (i, &t) in ta.times.iter().enumerate() {
        let (p, q) = (&ta.snapshots[i], &tb.snapshots[i]);
        let alpha_lhs = knorm_diff(p, q, alpha)?.value;
        let alpha_rhs = (la * t).exp() * d0_alpha;
        let fourier_lhs = tilde_distance(p, q, alpha)?;
        let fourier_rhs = (la * t).exp() * d0_tilde
            + exp_diff_quotient(lit::<T>(2.0) * lb, la, t) * a
            + exp_diff_quotient(lb, la, t) * b;
        let slack = T::one() + opts.rel_slack;
        let ma = slack * alpha_rhs + opts.abs_slack - alpha_lhs;
        let mf = slack * fourier_rhs + opts.abs_slack - fourier_lhs;
        alpha_margin = alpha_margin.min(ma);
        fourier_margin = fourier_margin.min(mf);
        if (ma < T::zero() || !(mf >= T::zero())) && first_violation.is_none() {
            first_violation = Some(t);
        }
        rows.push(StabilityRow { t, alpha_lhs, alpha_rhs, fourier_lhs, fourier_rhs });
    }
    Ok(StabilityReport {
        rows,
        lambda_alpha: la,
        lambda_beta: lb,
        a,
        b,
        options: opts.clone(),
        alpha_holds: alpha_margin >= T::zero(),
        fourier_holds: fourier_margin >= T::zero(),
        alpha_margin,
        fourier_margin,
        first_violation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffLevel<T = f64> {
    pub n: T,
    pub gamma2: T,
    pub lambda_beta: T,
    /// `max ‖φ(t) − φ(s)‖_β / (|t − s| e^{λ_β max{s,t}})` over snapshot pairs.
    pub continuity_constant: T,
    #[serde(skip)]
    pub trace: EvolutionTrace<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffPair<T = f64> {
    pub n_low: T,
    pub n_high: T,
    /// Largest nodewise gap over all snapshots.
    pub sup_gap: T,
    /// `(t, ‖φ_high(t) − φ_low(t)‖_β)`.
    pub beta_gaps: Vec<(T, T)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport<T = f64> {
    pub levels: Vec<CutoffLevel<T>>,
    pub pairs: Vec<CutoffPair<T>>,
    /// `λ_β` of the kernel without cutoff, used in the continuity fit.
    pub lambda_beta_limit: T,
    pub monotone: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> CutoffReport<T> {
    /// β-norm gap of pair `k` at time `t`.
    pub fn beta_gap_at(&self, k: usize, t: T) -> Option<T> {
        let tol = lit::<T>(1e-9);
        self.pairs.get(k)?.beta_gaps.iter().find(|(s, _)| (*s - t).abs() <= tol).map(|(_, g)| *g)
    }
}

/// Evolves `φ_0` with `b_n = min{b, n}` for each level and compares
/// consecutive levels.
pub fn cutoff_limit<T: Real>(
    phi0: &RadialCharFn<T>,
    kernel: &AngularKernel<T>,
    levels: &[T],
    cfg: &SolveConfig<T>,
) -> Result<CutoffReport<T>> {
    if levels.len() < 2 || levels.windows(2).any(|w| !(w[1] > w[0])) || !(levels[0] > T::zero()) {
        return Err(Error::Domain("cutoff levels must be positive and strictly increasing (at least two)".into()));
    }
    let base = kernel.clone().without_cutoff();
    let lambda_beta_limit = if base.is_bounded() {
        base.rate_constants(&[cfg.beta])?.rows[0].lambda.value
    } else {
        base.lambda_limit(cfg.beta)?.value
    };
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let kn = base.clone().with_cutoff(n);
        let trace = evolve(phi0, &kn, cfg)?;
        let mut cc = T::zero();
        for i in 0..trace.times.len() {
            for j in (i + 1)..trace.times.len() {
                let (s, t) = (trace.times[i], trace.times[j]);
                let d = knorm_diff(&trace.snapshots[j], &trace.snapshots[i], cfg.beta)?.value;
                cc = cc.max(d / ((t - s) * (lambda_beta_limit * t).exp()));
            }
        }
        out.push(CutoffLevel {
            n,
            gamma2: trace.constants.gamma2,
            lambda_beta: trace.constants.lambda_beta,
            continuity_constant: cc,
            trace,
        });
    }
    let mut pairs = Vec::with_capacity(levels.len() - 1);
    for w in out.windows(2) {
        let (lo, hi) = (&w[0].trace, &w[1].trace);
        let mut sup_gap = T::zero();
        let mut beta_gaps = Vec::with_capacity(lo.times.len());
        for (i, &t) in lo.times.iter().enumerate() {
            sup_gap = sup_gap.max(hi.snapshots[i].sup_distance(&lo.snapshots[i]));
            beta_gaps.push((t, knorm_diff(&hi.snapshots[i], &lo.snapshots[i], cfg.beta)?.value));
        }
        pairs.push(CutoffPair { n_low: w[0].n, n_high: w[1].n, sup_gap, beta_gaps });
    }
    let mut warnings = Vec::new();
    for k in 1..pairs.len() {
        for (i, &(t, g)) in pairs[k].beta_gaps.iter().enumerate() {
            let prev = pairs[k - 1].beta_gaps[i].1;
            if g > prev {
                let msg = format!(
                    "beta gap grows from {prev:e} (n = {}) to {g:e} (n = {}) at t = {t}",
                    pairs[k - 1].n_high, pairs[k].n_high
                );
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    Ok(CutoffReport { monotone: warnings.is_empty(), levels: out, pairs, lambda_beta_limit, warnings })
}
