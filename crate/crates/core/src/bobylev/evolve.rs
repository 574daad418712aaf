use log::{debug, warn};
use serde::Serialize;

use super::collision::CollisionPlan;
use super::integrate::{duhamel_step, rk4_integrate, DuhamelRule};
use super::schedule::{initial_constant, Schedule, ScheduleRates};
use super::{ExponentCheck, Integrator, SolveConfig, StepMode};
use crate::charfun::{classify, knorm, mnorm_re, AnalyticCharFn, GridSpec, NormValue, RadialCharFn};
use crate::error::{Error, Result};
use crate::interp::Interpolation;
use crate::kernel::AngularKernel;
use crate::moments::{second_moment, SecondMoment};
use crate::num::{lit, Real};

#[derive(Debug, Clone, Serialize)]
pub struct TraceConstants<T = f64> {
    /// `γ_2^n` from adaptive quadrature.
    pub gamma2: T,
    /// `γ_2^n` as seen by the θ-rule of the solver.
    pub gamma2_rule: T,
    pub gamma_alpha: T,
    pub gamma_beta: T,
    pub lambda_alpha: T,
    pub lambda_beta: T,
    pub collision_residual: T,
    pub exponents: ExponentCheck<T>,
    /// `C` and `C_n(0)` of the contraction schedule, when used.
    pub schedule_constant: Option<T>,
    pub c_n0: Option<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord<T = f64> {
    pub t: T,
    pub dt: T,
    pub picard_iterations: usize,
    pub clip: T,
    /// `‖1 − φ(t)‖_β` and its bound `e^{λ_β t}‖1 − φ_0‖_β`.
    pub knorm_beta: T,
    pub growth_bound: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics<T = f64> {
    pub t: T,
    pub knorm_beta: T,
    pub growth_bound: T,
    pub mnorm_alpha: NormValue<T>,
    pub second_moment: SecondMoment<T>,
    /// Accepted steps and Picard iterations since the previous snapshot.
    pub steps: usize,
    pub picard_iterations: usize,
    pub last_dt: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionTrace<T = f64> {
    pub times: Vec<T>,
    #[serde(skip)]
    pub snapshots: Vec<RadialCharFn<T>>,
    pub diagnostics: Vec<Diagnostics<T>>,
    pub steps: Vec<StepRecord<T>>,
    pub constants: TraceConstants<T>,
    pub config: SolveConfig<T>,
    pub clip_total: T,
    pub clip_max: T,
    /// Smallest `bound − measured` of the growth check over accepted steps.
    pub growth_margin: T,
}

impl<T: Real> EvolutionTrace<T> {
    /// Snapshot recorded at `t` (to within `1e-9` of the horizon).
    pub fn at(&self, t: T) -> Option<&RadialCharFn<T>> {
        let tol = lit::<T>(1e-9) * self.config.horizon.max(T::one());
        self.times.iter().position(|s| (*s - t).abs() <= tol).map(|i| &self.snapshots[i])
    }

    pub fn last(&self) -> &RadialCharFn<T> {
        self.snapshots.last().expect("trace holds the initial snapshot")
    }
}

/// Evolves a sampled initial datum. `φ_0` must be real and classify into
/// `K^α ∩ M̃^α`.
pub fn evolve<T: Real>(phi0: &RadialCharFn<T>, kernel: &AngularKernel<T>, cfg: &SolveConfig<T>) -> Result<EvolutionTrace<T>> {
    let c = classify(phi0, cfg.alpha)?;
    if !(c.in_k_alpha && c.in_m_tilde_alpha) {
        return Err(Error::Domain(format!(
            "initial datum {} is not in M~^alpha for alpha = {} (in K^alpha: {}, in M~^alpha: {})",
            phi0.provenance(),
            cfg.alpha,
            c.in_k_alpha,
            c.in_m_tilde_alpha
        )));
    }
    run(phi0, kernel, cfg)
}

/// Isotropizes a closed-form initial datum onto `grid` and evolves it.
/// A single Dirac mass away from the origin is rejected.
pub fn evolve_family<T: Real>(
    family: &AnalyticCharFn<T>,
    grid: &GridSpec<T>,
    interpolation: Interpolation,
    kernel: &AngularKernel<T>,
    cfg: &SolveConfig<T>,
) -> Result<EvolutionTrace<T>> {
    family.validate()?;
    if matches!(family, AnalyticCharFn::ShiftedDirac { .. }) {
        return Err(Error::Domain("a single Dirac mass away from the origin is not an admissible initial datum".into()));
    }
    let c = classify(family, cfg.alpha)?;
    if !(c.in_k_alpha && c.in_m_tilde_alpha) {
        return Err(Error::Domain(format!("initial datum {family} is not in M~^alpha for alpha = {}", cfg.alpha)));
    }
    grid.validate()?;
    let phi0 = family.isotropized(grid.radii(), interpolation)?;
    run(&phi0, kernel, cfg)
}

fn run<T: Real>(phi0: &RadialCharFn<T>, kernel: &AngularKernel<T>, cfg: &SolveConfig<T>) -> Result<EvolutionTrace<T>> {
    let exponents = cfg.validate(kernel)?;
    if !phi0.is_real() {
        return Err(Error::Domain("the isotropic solver needs a real initial profile".into()));
    }
    let rates = kernel.rate_constants(&[cfg.alpha, cfg.beta])?;
    let (gamma_alpha, gamma_beta) = (rates.rows[0].gamma.value, rates.rows[1].gamma.value);
    let (lambda_alpha, lambda_beta) = (rates.rows[0].lambda.value, rates.rows[1].lambda.value);
    let plan = CollisionPlan::for_profile(phi0, kernel, cfg.theta_order)?;
    let residual = plan.residual(phi0.deficit_re(), kernel)?;
    let tol = cfg.collision_tolerance(phi0.interpolation());
    if residual > tol {
        return Err(Error::Numeric { what: "gain operator quadrature".into(), estimate: residual.as_f64(), tolerance: tol.as_f64() });
    }
    let k0 = knorm(phi0, cfg.beta)?.value;
    let (mut schedule, schedule_constant, c_n0) = match cfg.step_mode {
        StepMode::Adaptive => (None, None, None),
        StepMode::ContractionSchedule => {
            let c = cfg.schedule_constant.unwrap_or(lit::<T>(10.0) * gamma_alpha);
            let c0 = initial_constant(gamma_alpha, c, k0, cfg.epsilon);
            let s = Schedule::new(ScheduleRates { c0, lambda_beta, gamma_beta, epsilon: cfg.epsilon })?;
            (Some(s), Some(c), Some(c0))
        }
    };
    let constants = TraceConstants {
        gamma2: rates.gamma2.value,
        gamma2_rule: plan.gamma2(),
        gamma_alpha,
        gamma_beta,
        lambda_alpha,
        lambda_beta,
        collision_residual: residual,
        exponents,
        schedule_constant,
        c_n0,
    };

    let mut trace = EvolutionTrace {
        times: Vec::new(),
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        steps: Vec::new(),
        constants,
        config: cfg.clone(),
        clip_total: T::zero(),
        clip_max: T::zero(),
        growth_margin: T::infinity(),
    };
    let mut phi = phi0.clone();
    let mut t = T::zero();
    let mut since = (0usize, 0usize, T::zero());
    record(&mut trace, &phi, t, k0, k0, since, cfg)?;

    let gamma = plan.gamma2();
    let mut rule: Option<DuhamelRule<T>> = None;
    let mut sched_left = T::zero();
    let intervals = cfg.snapshots;
    for k in 1..=intervals {
        let t_end = cfg.horizon * T::from_usize_lossy(k) / T::from_usize_lossy(intervals);
        let t_start = t;
        let span = t_end - t_start;
        let nominal = {
            let m = (span * gamma / cfg.rate_step).ceil().max(T::one());
            span / m
        };
        let mut dt_adapt = nominal;
        let close = lit::<T>(1e-12) * cfg.horizon;
        while t_end - t > close {
            let remaining = t_end - t;
            let dt = match (&mut schedule, cfg.integrator) {
                (Some(s), _) => {
                    if sched_left <= close {
                        sched_left = s.next().expect("schedule is infinite").length;
                    }
                    sched_left.min(remaining)
                }
                (None, _) => dt_adapt.min(remaining),
            };
            let dt = if remaining - dt <= close { remaining } else { dt };
            let (next, iters, clip) = match cfg.integrator {
                Integrator::Rk4 => (rk4_integrate(&phi, &plan, dt, cfg.rk4_rate_step)?, 0, T::zero()),
                Integrator::Duhamel => {
                    let needs = rule.as_ref().map_or(true, |r| r.dt != dt);
                    if needs {
                        rule = Some(DuhamelRule::new(dt, gamma, cfg.time_order)?);
                    }
                    let r = rule.as_ref().expect("rule just built");
                    match duhamel_step(&phi, &plan, r, cfg.picard_tol, cfg.max_picard_iters) {
                        Ok(s) => (s.phi, s.iterations, s.clip),
                        Err(Error::PicardNoConvergence { iterations, last_update }) => {
                            if schedule.is_some() || dt * lit(0.5) < cfg.min_step {
                                return Err(Error::PicardNoConvergence { iterations, last_update });
                            }
                            debug!("Picard failed at t = {t}, dt = {dt}; halving");
                            dt_adapt = dt * lit(0.5);
                            continue;
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            t = if t_end - (t + dt) <= close { t_end } else { t + dt };
            if schedule.is_some() {
                sched_left = sched_left - dt;
            }
            phi = next;
            trace.clip_total = trace.clip_total + clip;
            trace.clip_max = trace.clip_max.max(clip);
            let kb = knorm(&phi, cfg.beta)?.value;
            let bound = (lambda_beta * t).exp() * k0;
            trace.growth_margin = trace.growth_margin.min(bound - kb);
            trace.steps.push(StepRecord { t, dt, picard_iterations: iters, clip, knorm_beta: kb, growth_bound: bound });
            if kb > bound + cfg.growth_slack * bound.max(T::one()) {
                return Err(Error::GrowthBound { time: t.as_f64(), measured: kb.as_f64(), bound: bound.as_f64() });
            }
            since = (since.0 + 1, since.1 + iters, dt);
        }
        let bound = (lambda_beta * t).exp() * k0;
        let kb = trace.steps.last().map_or(k0, |s| s.knorm_beta);
        record(&mut trace, &phi, t, kb, bound, since, cfg)?;
        since = (0, 0, T::zero());
    }
    if trace.clip_total > lit(1e-8) {
        warn!("range clipping totalled {:e} over the run", trace.clip_total.as_f64());
    }
    Ok(trace)
}

fn record<T: Real>(
    trace: &mut EvolutionTrace<T>,
    phi: &RadialCharFn<T>,
    t: T,
    kb: T,
    bound: T,
    since: (usize, usize, T),
    cfg: &SolveConfig<T>,
) -> Result<()> {
    let mnorm_alpha = mnorm_re(phi, cfg.alpha)?;
    let d = Diagnostics {
        t,
        knorm_beta: kb,
        growth_bound: bound,
        mnorm_alpha,
        second_moment: second_moment(phi),
        steps: since.0,
        picard_iterations: since.1,
        last_dt: since.2,
    };
    trace.times.push(t);
    trace.snapshots.push(phi.clone());
    trace.diagnostics.push(d);
    Ok(())
}
