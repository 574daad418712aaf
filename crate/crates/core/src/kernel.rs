//! Angular collision kernels `b(cos θ)` on the symmetrized range
//! `θ ∈ (0, π/2]`, their cutoff approximations `b_n = min{b, n}`, and the
//! rate constants derived from them.
//!
//! Rate constants (all per unit steradian measure):
//!
//! ```text
//! γ_α^n = 2π ∫_0^{π/2} b_n(cos θ) (sin^α(θ/2) + cos^α(θ/2)) sin θ dθ
//! λ_α^n = γ_α^n − γ_2^n
//! ```
//!
//! `λ_α^n` is integrated directly rather than formed as a difference, so
//! that `λ_2^n` vanishes to rounding and small `λ` keep full relative
//! accuracy even when `γ_2^n` is large.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::num::{lit, Real};
use crate::quad::{adaptive_pieces, Estimate, Tolerance};

/// Bounded factor multiplying the pure power law away from `θ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegularPart<T> {
    Unit,
    /// `cos^p θ` with `p ≥ 0`.
    CosPower { p: T },
}

impl<T> Default for RegularPart<T> {
    fn default() -> Self {
        RegularPart::Unit
    }
}

impl<T: Real> RegularPart<T> {
    fn eval(&self, theta: T) -> T {
        match *self {
            RegularPart::Unit => T::one(),
            RegularPart::CosPower { p } => theta.cos().max(T::zero()).powf(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form", bound(deserialize = "T: Deserialize<'de>"))]
pub enum KernelForm<T> {
    Constant { level: T },
    /// `b(cos θ) = K θ^{-2-2s} · regular(θ)`, so that `b θ^{2+2s} → K`.
    PowerLaw {
        s: T,
        k: T,
        #[serde(default)]
        regular: RegularPart<T>,
    },
    /// Piecewise-linear table on `(0, π/2]`. Below the first knot the table
    /// is continued by the power law through its first two knots.
    Tabulated { theta: Vec<T>, values: Vec<T> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularKernel<T = f64> {
    pub form: KernelForm<T>,
    /// Cutoff level `n`; `None` means the kernel is used as is.
    pub cutoff: Option<T>,
}

/// Result of [`AngularKernel::singularity_index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityIndex<T> {
    /// Every exponent strictly above this makes `sin^{α0}(θ/2) b sin θ` integrable.
    pub infimum: T,
    /// Smallest exponent on the scan grid `{0.05 k : k = 1..40}` above the infimum.
    pub grid_exponent: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow<T> {
    pub alpha: T,
    pub gamma: Estimate<T>,
    pub lambda: Estimate<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelConstants<T = f64> {
    pub cutoff: Option<T>,
    pub gamma2: Estimate<T>,
    pub rows: Vec<RateRow<T>>,
}

impl<T: Real> KernelConstants<T> {
    fn row(&self, alpha: T) -> Option<&RateRow<T>> {
        self.rows.iter().find(|r| (r.alpha - alpha).abs() <= lit(1e-12))
    }

    pub fn gamma(&self, alpha: T) -> Option<T> {
        self.row(alpha).map(|r| r.gamma.value)
    }

    pub fn lambda(&self, alpha: T) -> Option<T> {
        self.row(alpha).map(|r| r.lambda.value)
    }

    pub fn exponents(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.alpha).collect()
    }
}

fn rate_tol<T: Real>() -> T {
    lit::<T>(1e-12).max(T::epsilon() * lit(64.0))
}

impl<T: Real> AngularKernel<T> {
    pub fn constant(level: T) -> Self {
        Self { form: KernelForm::Constant { level }, cutoff: None }
    }

    pub fn power_law(s: T, k: T) -> Self {
        Self { form: KernelForm::PowerLaw { s, k, regular: RegularPart::Unit }, cutoff: None }
    }

    pub fn power_law_with(s: T, k: T, regular: RegularPart<T>) -> Self {
        Self { form: KernelForm::PowerLaw { s, k, regular }, cutoff: None }
    }

    /// Table already expressed on `(0, π/2]`.
    pub fn tabulated(theta: Vec<T>, values: Vec<T>) -> Result<Self> {
        let k = Self { form: KernelForm::Tabulated { theta, values }, cutoff: None };
        k.validate()?;
        Ok(k)
    }

    /// Table over `[0, π]`, folded onto `[0, π/2]` via
    /// `b̃(θ) = b(θ) + b(π − θ)`.
    pub fn tabulated_full_range(theta: Vec<T>, values: Vec<T>) -> Result<Self> {
        let pi = T::PI();
        let half = T::FRAC_PI_2();
        if theta.len() != values.len() || theta.len() < 2 {
            return domain("tabulated kernel needs matching theta/value arrays with >= 2 knots");
        }
        if theta.windows(2).any(|w| w[1] <= w[0]) || theta[0] < T::zero() || theta[theta.len() - 1] > pi {
            return domain("tabulated theta must be strictly increasing within [0, pi]");
        }
        let full = Self { form: KernelForm::Tabulated { theta: theta.clone(), values: values.clone() }, cutoff: None };
        let mut knots: Vec<T> = theta
            .iter()
            .map(|&t| if t > half { pi - t } else { t })
            .filter(|&t| t > T::zero() || theta[0] == T::zero())
            .collect();
        knots.push(half);
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        knots.dedup_by(|a, b| (*a - *b).abs() <= lit(1e-14));
        let folded: Vec<T> = knots
            .iter()
            .map(|&t| table_value(&full.form, t) + table_value(&full.form, pi - t))
            .collect();
        Self::tabulated(knots, folded)
    }

    pub fn with_cutoff(mut self, n: T) -> Self {
        self.cutoff = Some(n);
        self
    }

    pub fn without_cutoff(mut self) -> Self {
        self.cutoff = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.cutoff {
            if !(n > T::zero()) {
                return domain("cutoff level must be positive");
            }
        }
        match &self.form {
            KernelForm::Constant { level } => {
                if !(*level >= T::zero()) {
                    return domain("constant kernel level must be nonnegative");
                }
            }
            KernelForm::PowerLaw { s, k, regular } => {
                if !(*s > T::zero() && *s < T::one()) {
                    return domain("power-law exponent s must lie in (0, 1)");
                }
                if !(*k > T::zero()) {
                    return domain("power-law prefactor K must be positive");
                }
                if let RegularPart::CosPower { p } = regular {
                    if !(*p >= T::zero()) {
                        return domain("cos-power regular part needs p >= 0");
                    }
                }
            }
            KernelForm::Tabulated { theta, values } => {
                if theta.len() != values.len() || theta.len() < 2 {
                    return domain("tabulated kernel needs matching theta/value arrays with >= 2 knots");
                }
                if theta.windows(2).any(|w| w[1] <= w[0]) {
                    return domain("tabulated theta must be strictly increasing");
                }
                if theta[0] < T::zero() || theta[theta.len() - 1] > T::FRAC_PI_2() + lit(1e-12) {
                    return domain("tabulated theta must lie in [0, pi/2]; use tabulated_full_range for [0, pi]");
                }
                if values.iter().any(|v| !(*v >= T::zero())) {
                    return domain("tabulated kernel values must be nonnegative");
                }
            }
        }
        Ok(())
    }

    /// `b(cos θ)` without the cutoff; `+∞` at `θ = 0` for singular forms.
    pub fn raw(&self, theta: T) -> T {
        match &self.form {
            KernelForm::Constant { level } => *level,
            KernelForm::PowerLaw { s, k, regular } => {
                *k * theta.powf(-(lit::<T>(2.0) + lit::<T>(2.0) * *s)) * regular.eval(theta)
            }
            KernelForm::Tabulated { .. } => table_value(&self.form, theta),
        }
    }

    /// `min{b, n}` (or `b` when no cutoff is set), with no domain check.
    #[inline]
    pub fn value(&self, theta: T) -> T {
        let b = self.raw(theta);
        match self.cutoff {
            Some(n) => b.min(n),
            None => b,
        }
    }

    /// Checked evaluation on `θ ∈ (0, π/2]`.
    pub fn eval_b(&self, theta: T) -> Result<T> {
        if !(theta > T::zero() && theta <= T::FRAC_PI_2() + lit(1e-14)) {
            return domain(format!("theta = {theta} outside (0, pi/2]"));
        }
        Ok(self.value(theta))
    }

    /// Exponent `p` with `b ~ θ^{-p}` as `θ → 0` (zero for bounded forms).
    fn singular_power(&self) -> T {
        match &self.form {
            KernelForm::Constant { .. } => T::zero(),
            KernelForm::PowerLaw { s, .. } => lit::<T>(2.0) + lit::<T>(2.0) * *s,
            KernelForm::Tabulated { theta, values } => table_power(theta, values).map(|(_, p)| p).unwrap_or(T::zero()),
        }
    }

    /// Whether `b_n` is bounded, i.e. usable for the cutoff machinery.
    pub fn is_bounded(&self) -> bool {
        self.cutoff.is_some() || self.singular_power() <= T::zero()
    }

    /// Interior points of `(0, π/2)` where `b_n` is not smooth.
    pub fn breakpoints(&self) -> Vec<T> {
        let half = T::FRAC_PI_2();
        let mut pts = Vec::new();
        if let KernelForm::Tabulated { theta, .. } = &self.form {
            pts.extend(theta.iter().copied().filter(|&t| t > T::zero() && t < half));
        }
        if let Some(n) = self.cutoff {
            pts.extend(self.cutoff_crossings(n));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup_by(|a, b| (*a - *b).abs() <= lit(1e-14));
        pts
    }

    fn cutoff_crossings(&self, n: T) -> Vec<T> {
        let half = T::FRAC_PI_2();
        match &self.form {
            KernelForm::Constant { .. } => Vec::new(),
            KernelForm::PowerLaw { s, k, regular } => {
                let p = lit::<T>(2.0) + lit::<T>(2.0) * *s;
                if let RegularPart::Unit = regular {
                    let t = (*k / n).powf(T::one() / p);
                    return if t < half { vec![t] } else { Vec::new() };
                }
                // Monotone decreasing: bisection for raw(θ) = n.
                if self.raw(half) >= n {
                    return Vec::new();
                }
                let (mut lo, mut hi) = (T::zero(), half);
                for _ in 0..200 {
                    let mid = (lo + hi) * lit(0.5);
                    if self.raw(mid) > n {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                vec![(lo + hi) * lit(0.5)]
            }
            KernelForm::Tabulated { theta, values } => {
                let mut out = Vec::new();
                for i in 0..theta.len() - 1 {
                    let (a, b) = (values[i] - n, values[i + 1] - n);
                    if a * b < T::zero() {
                        let t = theta[i] + (theta[i + 1] - theta[i]) * a / (a - b);
                        out.push(t);
                    }
                }
                if let Some((_, p)) = table_power(theta, values) {
                    if p > T::zero() && values[0] < n {
                        // power-law continuation below the first knot crosses n
                        let t = theta[0] * (values[0] / n).powf(T::one() / p);
                        out.push(t);
                    }
                }
                out
            }
        }
    }

    pub fn singularity_index(&self) -> Result<SingularityIndex<T>> {
        let infimum = if self.cutoff.is_some() {
            T::zero()
        } else {
            (self.singular_power() - lit(2.0)).max(T::zero())
        };
        let slack = lit::<T>(1e-12);
        let grid_exponent = (1..=40)
            .map(|k| lit::<T>(0.05) * T::from_usize_lossy(k))
            .find(|&a| a > infimum + slack);
        match grid_exponent {
            Some(g) => Ok(SingularityIndex { infimum, grid_exponent: g }),
            None => Err(Error::Classification(format!(
                "no exponent in (0, 2] makes the kernel integrable (infimum {infimum})"
            ))),
        }
    }

    fn pieces(&self) -> Vec<T> {
        let mut pts = vec![T::zero()];
        pts.extend(self.breakpoints());
        pts.push(T::FRAC_PI_2());
        pts
    }

    /// `γ_α^n`, `λ_α^n` for each exponent, plus `γ_2^n`.
    pub fn rate_constants(&self, exponents: &[T]) -> Result<KernelConstants<T>> {
        self.validate()?;
        if !self.is_bounded() {
            return Err(Error::NonCutoff(
                "rate constants need a bounded kernel; set a cutoff or use lambda_limit".into(),
            ));
        }
        let pts = self.pieces();
        let tol = Tolerance::abs(rate_tol());
        let two_pi = T::two_pi();
        let gamma2 = adaptive_pieces(|t: T| self.value(t) * t.sin(), &pts, tol)?;
        let gamma2 = Estimate::new(two_pi * gamma2.value, two_pi * gamma2.abs_err);
        let mut rows = Vec::with_capacity(exponents.len());
        for &alpha in exponents {
            if !(alpha >= T::zero() && alpha <= lit(2.0)) {
                return domain(format!("exponent {alpha} outside [0, 2]"));
            }
            let lam = adaptive_pieces(|t: T| self.value(t) * angular_factor(alpha, t) * t.sin(), &pts, tol)?;
            let lambda = Estimate::new(two_pi * lam.value, two_pi * lam.abs_err);
            let gamma = Estimate::new(lambda.value + gamma2.value, lambda.abs_err + gamma2.abs_err);
            rows.push(RateRow { alpha, gamma, lambda });
        }
        Ok(KernelConstants { cutoff: self.cutoff, gamma2, rows })
    }

    /// `λ_α` for the kernel as given (typically without cutoff), integrating
    /// the weak singularity at `θ = 0` after a power substitution.
    pub fn lambda_limit(&self, alpha: T) -> Result<Estimate<T>> {
        self.validate()?;
        if !(alpha <= lit(2.0)) {
            return domain(format!("exponent {alpha} above 2"));
        }
        let idx = self.singularity_index()?;
        if !(alpha > idx.infimum) {
            return Err(Error::Divergence(format!(
                "lambda_{alpha} diverges: exponent must exceed the singularity infimum {}",
                idx.infimum
            )));
        }
        let f = |t: T| self.value(t) * angular_factor(alpha, t) * t.sin();
        let p = if self.cutoff.is_some() { T::zero() } else { self.singular_power() };
        // integrand ~ θ^{α + 1 - p} near 0
        let local = alpha + T::one() - p;
        let tol = Tolerance::abs(rate_tol());
        let mut pts = self.pieces();
        let split = lit::<T>(0.25).min(pts[1]);
        let head = if local < T::zero() {
            let m = lit::<T>(2.0) / (local + T::one());
            let upper = split.powf(T::one() / m);
            let g = |u: T| {
                if u <= T::zero() {
                    return T::zero();
                }
                let t = u.powf(m);
                f(t) * m * u.powf(m - T::one())
            };
            adaptive_pieces(g, &[T::zero(), upper], tol)?
        } else {
            adaptive_pieces(f, &[T::zero(), split], tol)?
        };
        if split < pts[1] {
            pts[0] = split;
        } else {
            pts.remove(0);
        }
        let rest = adaptive_pieces(f, &pts, tol)?;
        let two_pi = T::two_pi();
        Ok(Estimate::new(two_pi * (head.value + rest.value), two_pi * (head.abs_err + rest.abs_err)))
    }
}

/// `sin^α(θ/2) + cos^α(θ/2) − 1`, accurate as `θ → 0`.
pub fn angular_factor<T: Real>(alpha: T, theta: T) -> T {
    let h = theta * lit(0.5);
    let s = h.sin();
    let c = h.cos();
    let sa = if alpha == T::zero() { T::one() } else { s.powf(alpha) };
    sa + (alpha * c.ln()).exp_m1()
}

fn table_power<T: Real>(theta: &[T], values: &[T]) -> Option<(T, T)> {
    if theta[0] <= T::zero() || values[0] <= T::zero() || values[1] <= T::zero() {
        return None;
    }
    let p = -(values[1] / values[0]).ln() / (theta[1] / theta[0]).ln();
    Some((theta[0], p))
}

fn table_value<T: Real>(form: &KernelForm<T>, t: T) -> T {
    let KernelForm::Tabulated { theta, values } = form else {
        unreachable!("table_value on non-tabulated kernel")
    };
    let n = theta.len();
    if t <= theta[0] {
        return match table_power(theta, values) {
            Some((t0, p)) if p > T::zero() => {
                if t <= T::zero() {
                    T::infinity()
                } else {
                    values[0] * (t / t0).powf(-p)
                }
            }
            _ => values[0],
        };
    }
    if t >= theta[n - 1] {
        return values[n - 1];
    }
    let j = crate::interp::locate(theta, t);
    let w = (t - theta[j]) / (theta[j + 1] - theta[j]);
    values[j] + w * (values[j + 1] - values[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    type K = AngularKernel<f64>;

    #[test]
    fn eval_examples() {
        let c = K::constant(1.0);
        assert_eq!(c.eval_b(PI / 4.0).unwrap(), 1.0);
        let p = K::power_law(0.25, 1.0);
        let t = 1e-4;
        let v = p.eval_b(t).unwrap() * t.powf(2.5);
        assert!((0.99..=1.01).contains(&v));
        let pc = p.clone().with_cutoff(5.0);
        assert_eq!(pc.eval_b(t).unwrap(), 5.0);
        assert!(matches!(c.eval_b(0.0), Err(Error::Domain(_))));
        assert!(matches!(c.eval_b(2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn power_law_asymptotics_with_regular_part() {
        let p = K::power_law_with(0.4, 2.0, RegularPart::CosPower { p: 3.0 });
        for k in 3..8 {
            let t = 10f64.powi(-k);
            let v = p.eval_b(t).unwrap() * t.powf(2.8);
            assert!((v - 2.0).abs() < 1e-5, "{v}");
        }
    }

    #[test]
    fn singularity_index_examples() {
        let a = K::power_law(0.25, 1.0).singularity_index().unwrap();
        assert!((a.infimum - 0.5).abs() < 1e-15);
        assert!((a.grid_exponent - 0.55).abs() < 1e-12);
        let b = K::constant(1.0).singularity_index().unwrap();
        assert_eq!(b.infimum, 0.0);
        let c = K::power_law(0.9, 1.0).singularity_index().unwrap();
        assert!((c.infimum - 1.8).abs() < 1e-15);
    }

    #[test]
    fn tabulated_without_integrable_exponent_is_rejected() {
        // b ~ θ^{-4.5}: needs α0 > 2.5
        let theta: Vec<f64> = vec![0.01, 0.02, 0.5, PI / 2.0];
        let values: Vec<f64> = theta.iter().map(|t| t.powf(-4.5)).collect();
        let k = K::tabulated(theta, values).unwrap();
        assert!(matches!(k.singularity_index(), Err(Error::Classification(_))));
    }

    #[test]
    fn tabulated_singularity_from_slope() {
        let theta: Vec<f64> = vec![0.01, 0.02, 0.5, PI / 2.0];
        let values: Vec<f64> = theta.iter().map(|t| t.powf(-3.0)).collect();
        let k = K::tabulated(theta, values).unwrap();
        let idx = k.singularity_index().unwrap();
        assert!((idx.infimum - 1.0).abs() < 1e-9);
        assert!(!k.is_bounded());
    }

    #[test]
    fn constant_kernel_rates() {
        let k = K::constant(1.0);
        let c = k.rate_constants(&[0.0, 1.0, 2.0]).unwrap();
        assert!(c.lambda(2.0).unwrap().abs() <= 1e-12);
        assert!((c.gamma2.value - 2.0 * PI).abs() <= 1e-10);
        assert!((c.lambda(1.0).unwrap() - 2.0 * PI / 3.0).abs() <= 1e-10);
        assert!((c.lambda(0.0).unwrap() - 2.0 * PI).abs() <= 1e-10);
        assert_eq!(c.gamma(0.0).unwrap(), 2.0 * c.gamma2.value);
    }

    #[test]
    fn non_cutoff_singular_kernel_refuses_rates() {
        let k = K::power_law(0.25, 1.0);
        assert!(matches!(k.rate_constants(&[1.0]), Err(Error::NonCutoff(_))));
    }

    #[test]
    fn lambda_limit_examples() {
        let k = K::power_law(0.25, 1.0);
        assert!(k.lambda_limit(2.0).unwrap().value.abs() < 1e-12);
        assert!(matches!(k.lambda_limit(0.4), Err(Error::Divergence(_))));
        let lim = k.lambda_limit(1.0).unwrap().value;
        let mut prev = 0.0;
        for n in [10.0, 100.0, 1000.0] {
            let v = k.clone().with_cutoff(n).rate_constants(&[1.0]).unwrap().lambda(1.0).unwrap();
            assert!(v > prev && v < lim);
            prev = v;
        }
    }

    #[test]
    fn fold_full_range_table() {
        // b ≡ 1 on [0, π] folds to b̃ ≡ 2 on [0, π/2]
        let theta: Vec<f64> = (0..=10).map(|i| PI * i as f64 / 10.0).collect();
        let values = vec![1.0; theta.len()];
        let k = K::tabulated_full_range(theta, values).unwrap();
        for t in [0.1, 0.7, 1.5] {
            assert!((k.eval_b(t).unwrap() - 2.0).abs() < 1e-14);
        }
        let c = k.rate_constants(&[2.0]).unwrap();
        assert!((c.gamma2.value - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn cutoff_breakpoint_matches_crossing() {
        let k = K::power_law_with(0.25, 1.0, RegularPart::CosPower { p: 1.0 }).with_cutoff(10.0);
        let bp = k.breakpoints();
        assert_eq!(bp.len(), 1);
        assert!((k.raw(bp[0]) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn single_precision_constants() {
        let k = AngularKernel::<f32>::constant(1.0);
        let c = k.rate_constants(&[1.0]).unwrap();
        assert!((c.lambda(1.0).unwrap() - 2.0 * std::f32::consts::PI / 3.0).abs() < 1e-5);
    }
}
