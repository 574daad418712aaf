//! Contraction intervals `T_m` solving
//!
//! ```text
//! C_0 e^{λ_β (T_1 + ⋯ + T_m)} T_m + γ_β T_m + (γ_β T_m)^ε = 1/2.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleTerm<T = f64> {
    pub m: usize,
    pub length: T,
    /// `T_1 + ⋯ + T_m`.
    pub cumulative: T,
    /// Left side minus `1/2` at the computed `T_m`.
    pub residual: T,
}

/// Rate data for the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleRates<T = f64> {
    pub c0: T,
    pub lambda_beta: T,
    pub gamma_beta: T,
    pub epsilon: T,
}

impl<T: Real> ScheduleRates<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c0 > T::zero()
            && self.lambda_beta > T::zero()
            && self.gamma_beta > T::zero()
            && self.epsilon > T::zero()
            && self.epsilon < T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "schedule needs positive rates and epsilon in (0, 1): {self:?}"
            )))
        }
    }

    /// Left side of the contraction condition minus `1/2`.
    pub fn excess(&self, prior: T, t: T) -> T {
        self.c0 * (self.lambda_beta * (prior + t)).exp() * t + self.gamma_beta * t + (self.gamma_beta * t).powf(self.epsilon)
            - lit(0.5)
    }

    /// `T` with `excess(prior, T) = 0`; the excess is increasing in `T`.
    pub fn next_length(&self, prior: T) -> T {
        let mut hi = T::one();
        while self.excess(prior, hi) < T::zero() {
            hi = hi * lit(2.0);
        }
        let mut lo = T::zero();
        for _ in 0..2000 {
            let mid = (lo + hi) * lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.excess(prior, mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if self.excess(prior, hi).abs() < self.excess(prior, lo).abs() {
            hi
        } else {
            lo
        }
    }
}

/// Stateful generator of successive `T_m`.
#[derive(Debug, Clone)]
pub struct Schedule<T = f64> {
    rates: ScheduleRates<T>,
    m: usize,
    cumulative: T,
}

impl<T: Real> Schedule<T> {
    pub fn new(rates: ScheduleRates<T>) -> Result<Self> {
        rates.validate()?;
        Ok(Self { rates, m: 0, cumulative: T::zero() })
    }
}

impl<T: Real> Iterator for Schedule<T> {
    type Item = ScheduleTerm<T>;

    fn next(&mut self) -> Option<Self::Item> {
        let length = self.rates.next_length(self.cumulative);
        let residual = self.rates.excess(self.cumulative, length);
        self.m += 1;
        self.cumulative = self.cumulative + length;
        Some(ScheduleTerm { m: self.m, length, cumulative: self.cumulative, residual })
    }
}

/// The first `m_max` contraction intervals.
pub fn contraction_schedule<T: Real>(
    c0: T,
    lambda_beta: T,
    gamma_beta: T,
    epsilon: T,
    m_max: usize,
) -> Result<Vec<ScheduleTerm<T>>> {
    Ok(Schedule::new(ScheduleRates { c0, lambda_beta, gamma_beta, epsilon })?.take(m_max).collect())
}

/// `C_n(0) = (γ_α + C)(3 + k + k^{1−ε})` with `k = ‖1 − φ_0‖_β`.
pub fn initial_constant<T: Real>(gamma_alpha: T, c: T, knorm_beta: T, epsilon: T) -> T {
    (gamma_alpha + c) * (lit::<T>(3.0) + knorm_beta + knorm_beta.powf(T::one() - epsilon))
}
