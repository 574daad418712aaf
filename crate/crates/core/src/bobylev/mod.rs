//! Fourier-space solver for the homogeneous Boltzmann equation with
//! Maxwellian molecules and a cut-off angular kernel:
//!
//! ```text
//! ∂_t φ = G_n(φ) − γ_2^n φ,   φ(0) = φ_0.
//! ```
//!
//! The state is a real isotropic [`RadialCharFn`](crate::charfun::RadialCharFn);
//! everything is computed on the deficit `u = 1 − φ`.

mod collision;
mod evolve;
mod experiments;
mod integrate;
mod schedule;

pub use collision::{collision_gn, CollisionPlan, GainProfile, THETA_ORDER};
pub use evolve::{evolve, evolve_family, Diagnostics, EvolutionTrace, StepRecord, TraceConstants};
pub use experiments::{
    cutoff_limit, stability_experiment, CutoffLevel, CutoffPair, CutoffReport, StabilityOptions, StabilityReport, StabilityRow,
};
pub use integrate::{duhamel_step, enforce_range, picard_solve, rk4_integrate, rk4_step, DuhamelRule, PicardOutcome, Step};
pub use schedule::{contraction_schedule, initial_constant, Schedule, ScheduleRates, ScheduleTerm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Interpolation;
use crate::kernel::AngularKernel;
use crate::num::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Uniform steps with `γ_2 Δt ≤ rate_step`, halved on Picard failure.
    #[default]
    Adaptive,
    /// Steps of the contraction intervals `T_m`.
    ContractionSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Picard iteration on the Duhamel form.
    #[default]
    Duhamel,
    /// Classical RK4 on the differential form.
    Rk4,
}

fn default_alpha<T: Real>() -> T {
    lit(1.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SolveConfig<T = f64> {
    pub alpha: T,
    pub beta: T,
    pub epsilon: T,
    pub horizon: T,
    pub picard_tol: T,
    pub max_picard_iters: usize,
    pub step_mode: StepMode,
    pub integrator: Integrator,
    /// Gauss–Legendre order per smooth piece of `b_n`.
    pub theta_order: usize,
    /// Number of Lobatto collocation nodes per step.
    pub time_order: usize,
    /// Largest `γ_2 Δt` in adaptive mode.
    pub rate_step: T,
    /// Largest `γ_2 h` for RK4.
    pub rk4_rate_step: T,
    /// Adaptive halving stops here.
    pub min_step: T,
    /// Snapshots are recorded at `horizon · k / snapshots`.
    pub snapshots: usize,
    /// The constant `C` in `C_n(0)`; defaults to `10 γ_α^n`.
    pub schedule_constant: Option<T>,
    /// `δ` in `ε ≤ 1 − (α_0 + δ)/β` when `α_0` is only an infimum.
    pub alpha0_margin: T,
    pub growth_slack: T,
    /// Largest admissible θ-quadrature residual of the gain operator;
    /// by default `1e-8` for splines and `1e-6` for PCHIP, whose
    /// derivative kinks slow the θ-rule down.
    pub collision_tol: Option<T>,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            beta: T::one(),
            epsilon: lit(0.3),
            horizon: T::one(),
            picard_tol: lit(1e-10),
            max_picard_iters: 60,
            step_mode: StepMode::Adaptive,
            integrator: Integrator::Duhamel,
            theta_order: THETA_ORDER,
            time_order: 8,
            rate_step: lit(0.1),
            rk4_rate_step: lit(0.005),
            min_step: lit(1e-9),
            snapshots: 10,
            schedule_constant: None,
            alpha0_margin: lit(1e-3),
            growth_slack: lit(1e-6),
            collision_tol: None,
        }
    }
}

/// Exponent constraints resolved against a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentCheck<T = f64> {
    /// Singularity infimum of the kernel without cutoff.
    pub alpha0: T,
    /// Margin added to `alpha0` in the `ε` bound (0 when `alpha0 = 0`).
    pub margin: T,
    pub epsilon_max: T,
}

impl<T: Real> SolveConfig<T> {
    /// Checks `2 > α > β > max{α_0, α/2}` and `ε ∈ (0, 1 − (α_0 + δ)/β]`
    /// plus the numerical settings.
    pub fn collision_tolerance(&self, interpolation: Interpolation) -> T {
        self.collision_tol.unwrap_or_else(|| match interpolation {
            Interpolation::Spline => lit(1e-8),
            Interpolation::Pchip => lit(1e-6),
        })
    }

    pub fn validate(&self, kernel: &AngularKernel<T>) -> Result<ExponentCheck<T>> {
        let alpha0 = kernel.clone().without_cutoff().singularity_index()?.infimum;
        let (a, b, e) = (self.alpha, self.beta, self.epsilon);
        let half = lit::<T>(0.5);
        if !(a < lit(2.0) && a > b && b > alpha0.max(a * half)) {
            return Err(Error::Domain(format!(
                "exponents must satisfy 2 > alpha > beta > max{{alpha0, alpha/2}}: alpha = {a}, beta = {b}, alpha0 = {alpha0}"
            )));
        }
        let margin = if alpha0 > T::zero() { self.alpha0_margin } else { T::zero() };
        let epsilon_max = (T::one() - (alpha0 + margin) / b).min(T::one());
        if !(e > T::zero() && e <= epsilon_max && e < T::one()) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, 1 - (alpha0 + delta)/beta] = (0, {epsilon_max}], got {e}"
            )));
        }
        let positive = [self.horizon, self.picard_tol, self.rate_step, self.rk4_rate_step, self.min_step, self.collision_tol.unwrap_or(T::one())];
        if positive.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::Domain(
                "horizon, picard_tol, rate_step, rk4_rate_step, min_step and collision_tol must be positive".into(),
            ));
        }
        if self.theta_order < 2 || self.time_order < 2 || self.snapshots == 0 || self.max_picard_iters == 0 {
            return Err(Error::Domain("theta_order, time_order >= 2; snapshots, max_picard_iters >= 1".into()));
        }
        Ok(ExponentCheck { alpha0, margin, epsilon_max })
    }
}
