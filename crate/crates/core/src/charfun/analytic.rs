//! Closed-form characteristic functions.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{CharFn, GridSpec, RadialCharFn, TailModel};
use crate::error::{Error, Result};
use crate::interp::Interpolation;
use crate::num::{dot, lit, norm, one_minus_cos, one_minus_sinc, scale, Real, Vec3};

fn unit<T: Real>() -> T {
    T::one()
}

fn e_z<T: Real>() -> Vec3<T> {
    [T::zero(), T::zero(), T::one()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum AnalyticCharFn<T = f64> {
    /// `e^{−σ²|ξ|²/2}`.
    Gaussian { variance: T },
    /// `e^{−(scale·|ξ|)^index}`.
    Stable {
        index: T,
        #[serde(default = "unit")]
        scale: T,
    },
    /// `(δ_{ae} + δ_{−ae})/2`, i.e. `cos(a ξ·e)`.
    DiracPair {
        radius: T,
        #[serde(default = "e_z")]
        axis: Vec3<T>,
    },
    /// `δ_a`, i.e. `e^{−iξ·a}`.
    ShiftedDirac { shift: Vec3<T> },
    PointMass,
    Mixture { components: Vec<Component<T>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Component<T = f64> {
    pub weight: T,
    #[serde(flatten)]
    pub family: AnalyticCharFn<T>,
}

impl<T: Real> AnalyticCharFn<T> {
    pub fn gaussian(variance: T) -> Self {
        Self::Gaussian { variance }
    }

    pub fn stable(index: T) -> Self {
        Self::Stable { index, scale: T::one() }
    }

    pub fn dirac_pair(radius: T) -> Self {
        Self::DiracPair { radius, axis: e_z() }
    }

    pub fn shifted_dirac(shift: Vec3<T>) -> Self {
        Self::ShiftedDirac { shift }
    }

    pub fn mixture(parts: Vec<(T, AnalyticCharFn<T>)>) -> Self {
        Self::Mixture { components: parts.into_iter().map(|(weight, family)| Component { weight, family }).collect() }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Gaussian { variance } => format!("gaussian({variance})"),
            Self::Stable { index, scale } => format!("stable({index}, scale {scale})"),
            Self::DiracPair { radius, .. } => format!("dirac_pair({radius})"),
            Self::ShiftedDirac { shift } => format!("shifted_dirac({}, {}, {})", shift[0], shift[1], shift[2]),
            Self::PointMass => "point_mass".into(),
            Self::Mixture { components } => {
                let parts: Vec<String> =
                    components.iter().map(|c| format!("{}*{}", c.weight, c.family.name())).collect();
                format!("mixture[{}]", parts.join(" + "))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidCharFn(m.into()));
        match self {
            Self::Gaussian { variance } if !(*variance > T::zero()) => bad("gaussian variance must be positive"),
            Self::Stable { index, scale }
                if !(*index > T::zero() && *index < lit(2.0) && *scale > T::zero()) =>
            {
                bad("stable index must lie in (0, 2) with positive scale")
            }
            Self::DiracPair { radius, axis } => {
                if !(*radius > T::zero()) {
                    return bad("dirac_pair radius must be positive");
                }
                if (norm(*axis) - T::one()).abs() > lit(1e-12) {
                    return bad("dirac_pair axis must be a unit vector");
                }
                Ok(())
            }
            Self::ShiftedDirac { shift } if !shift.iter().all(|v| v.is_finite()) => bad("shift must be finite"),
            Self::Mixture { components } => {
                if components.is_empty() {
                    return bad("mixture needs at least one component");
                }
                let mut total = T::zero();
                for c in components {
                    if !(c.weight > T::zero()) {
                        return bad("mixture weights must be positive");
                    }
                    if matches!(c.family, Self::Mixture { .. }) {
                        return bad("nested mixtures are not supported");
                    }
                    c.family.validate()?;
                    total = total + c.weight;
                }
                if (total - T::one()).abs() > lit(1e-12) {
                    return Err(Error::InvalidCharFn(format!("mixture weights sum to {total}, expected 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `1 − φ(ξ)`.
    pub fn deficit(&self, xi: Vec3<T>) -> Complex<T> {
        match self {
            Self::Gaussian { variance } => Complex::new(-(-*variance * dot(xi, xi) * lit(0.5)).exp_m1(), T::zero()),
            Self::Stable { index, scale } => Complex::new(-(-(*scale * norm(xi)).powf(*index)).exp_m1(), T::zero()),
            Self::DiracPair { radius, axis } => Complex::new(one_minus_cos(*radius * dot(xi, *axis)), T::zero()),
            Self::ShiftedDirac { shift } => {
                let x = dot(xi, *shift);
                Complex::new(one_minus_cos(x), x.sin())
            }
            Self::PointMass => Complex::new(T::zero(), T::zero()),
            Self::Mixture { components } => {
                components.iter().fold(Complex::new(T::zero(), T::zero()), |acc, c| acc + c.family.deficit(xi) * c.weight)
            }
        }
    }

    /// Sphere average of `Re(1 − φ(rω))`; this is the deficit of the
    /// rotation-averaged measure.
    pub fn radial_deficit_avg(&self, r: T) -> T {
        match self {
            Self::Gaussian { .. } | Self::Stable { .. } => self.deficit([T::zero(), T::zero(), r]).re,
            Self::DiracPair { radius, .. } => one_minus_sinc(*radius * r),
            Self::ShiftedDirac { shift } => one_minus_sinc(norm(*shift) * r),
            Self::PointMass => T::zero(),
            Self::Mixture { components } => {
                components.iter().map(|c| c.weight * c.family.radial_deficit_avg(r)).sum()
            }
        }
    }

    pub fn is_isotropic(&self) -> bool {
        match self {
            Self::Gaussian { .. } | Self::Stable { .. } | Self::PointMass => true,
            Self::DiracPair { .. } => false,
            Self::ShiftedDirac { shift } => norm(*shift) == T::zero(),
            Self::Mixture { components } => components.iter().all(|c| c.family.is_isotropic()),
        }
    }

    /// `Im φ ≡ 0`, i.e. the measure is invariant under `v ↦ −v`.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::ShiftedDirac { shift } => norm(*shift) == T::zero(),
            Self::Mixture { components } => components.iter().all(|c| c.family.is_symmetric()),
            _ => true,
        }
    }

    pub fn contains_shifted_dirac(&self) -> bool {
        match self {
            Self::ShiftedDirac { shift } => norm(*shift) > T::zero(),
            Self::Mixture { components } => components.iter().any(|c| c.family.contains_shifted_dirac()),
            _ => false,
        }
    }

    pub fn directions(&self) -> Vec<Vec3<T>> {
        let mut out = Vec::new();
        self.collect_directions(&mut out);
        if out.is_empty() {
            out.push(e_z());
        }
        out
    }

    fn collect_directions(&self, out: &mut Vec<Vec3<T>>) {
        let mut push = |d: Vec3<T>| {
            if !out.iter().any(|o| (dot(*o, d) - T::one()).abs() < lit(1e-12)) {
                out.push(d);
            }
        };
        match self {
            Self::DiracPair { axis, .. } => push(*axis),
            Self::ShiftedDirac { shift } if norm(*shift) > T::zero() => push(scale(T::one() / norm(*shift), *shift)),
            Self::Mixture { components } => components.iter().for_each(|c| c.family.collect_directions(out)),
            _ => {}
        }
    }

    /// `∫|v|² dF`, `+∞` for stable laws.
    pub fn second_moment(&self) -> T {
        match self {
            Self::Gaussian { variance } => lit::<T>(3.0) * *variance,
            Self::Stable { .. } => T::infinity(),
            Self::DiracPair { radius, .. } => *radius * *radius,
            Self::ShiftedDirac { shift } => dot(*shift, *shift),
            Self::PointMass => T::zero(),
            Self::Mixture { components } => components.iter().map(|c| c.weight * c.family.second_moment()).sum(),
        }
    }

    /// Samples the rotation-averaged deficit on `radii`.
    pub fn isotropized(&self, radii: Vec<T>, interpolation: Interpolation) -> Result<RadialCharFn<T>> {
        self.validate()?;
        RadialCharFn::from_deficit_fn(radii, |r| self.radial_deficit_avg(r), interpolation, self.name())
    }

    /// Samples on a grid; only isotropic families are represented exactly.
    pub fn to_radial(&self, grid: &GridSpec<T>, interpolation: Interpolation) -> Result<RadialCharFn<T>> {
        if !self.is_isotropic() {
            return Err(Error::InvalidCharFn(format!(
                "{} is not isotropic; use isotropized() for its rotation average",
                self.name()
            )));
        }
        grid.validate()?;
        self.isotropized(grid.radii(), interpolation)
    }

    fn component_list(&self) -> Vec<(T, &AnalyticCharFn<T>)> {
        match self {
            Self::Mixture { components } => components.iter().map(|c| (c.weight, &c.family)).collect(),
            other => vec![(T::one(), other)],
        }
    }

    /// Per-component large-`r` model of the averaged deficit.
    pub(crate) fn component_tails(&self) -> Vec<(T, TailModel<T>, Box<dyn Fn(T) -> T + Send + Sync + '_>)> {
        self.component_list()
            .into_iter()
            .map(|(w, f)| {
                let g: Box<dyn Fn(T) -> T + Send + Sync> = Box::new(move |r| f.radial_deficit_avg(r));
                (w, f.own_tail(), g)
            })
            .collect()
    }

    fn own_tail(&self) -> TailModel<T> {
        let forty = lit::<T>(40.0);
        match self {
            Self::Gaussian { variance } => {
                TailModel { limit: T::one(), sincs: vec![], decay_radius: (lit::<T>(2.0) * forty / *variance).sqrt() }
            }
            Self::Stable { index, scale } => {
                TailModel { limit: T::one(), sincs: vec![], decay_radius: forty.powf(T::one() / *index) / *scale }
            }
            Self::DiracPair { radius, .. } => {
                TailModel { limit: T::one(), sincs: vec![(T::one(), *radius)], decay_radius: T::zero() }
            }
            Self::ShiftedDirac { shift } => {
                TailModel { limit: T::one(), sincs: vec![(T::one(), norm(*shift))], decay_radius: T::zero() }
            }
            Self::PointMass => TailModel { limit: T::zero(), sincs: vec![], decay_radius: T::zero() },
            Self::Mixture { .. } => unreachable!("mixtures are split into components"),
        }
    }

    /// `(1 − Δ)^n φ`, normalised by its value at the origin.
    pub fn lift(&self, n: usize) -> Result<LiftedProfile<T>> {
        self.validate()?;
        let mut parts = Vec::new();
        for (w, f) in self.component_list() {
            let (psi0, part) = match f {
                Self::Gaussian { variance } => {
                    let a = *variance * lit(0.5);
                    let mut q = vec![T::one()];
                    for _ in 0..n {
                        q = one_minus_laplacian_gauss(&q, a);
                    }
                    let q0 = q[0];
                    let qn: Vec<T> = q.iter().map(|c| *c / q0).collect();
                    (q0, LiftedPart::GaussPoly { a, q: qn })
                }
                Self::Stable { .. } => {
                    return Err(Error::Unsupported(
                        "stable laws are not differentiable at the origin; the lift does not exist".into(),
                    ))
                }
                Self::DiracPair { radius, axis } => {
                    ((T::one() + *radius * *radius).powi(n as i32), LiftedPart::Cos { a: *radius, axis: *axis })
                }
                Self::ShiftedDirac { shift } => {
                    ((T::one() + dot(*shift, *shift)).powi(n as i32), LiftedPart::Shift { shift: *shift })
                }
                Self::PointMass => (T::one(), LiftedPart::One),
                Self::Mixture { .. } => unreachable!("validated as flat"),
            };
            parts.push((w * psi0, part));
        }
        let psi0: T = parts.iter().map(|(w, _)| *w).sum();
        let parts = parts.into_iter().map(|(w, p)| (w / psi0, p)).collect();
        Ok(LiftedProfile { order: n, psi0, parts, name: format!("lift{n}({})", self.name()) })
    }
}

/// `Q ↦ Q − [4s(Q'' − 2aQ' + a²Q) + 6(Q' − aQ)]`, the action of `1 − Δ` on
/// `Q(s)e^{−as}` with `s = r²`, in polynomial coefficients of `s`.
fn one_minus_laplacian_gauss<T: Real>(q: &[T], a: T) -> Vec<T> {
    let m = q.len();
    let coef = |i: usize| if i < m { q[i] } else { T::zero() };
    let d1 = |i: usize| T::from_usize_lossy(i + 1) * coef(i + 1);
    let d2 = |i: usize| T::from_usize_lossy((i + 1) * (i + 2)) * coef(i + 2);
    let mut out = vec![T::zero(); m + 1];
    for (k, o) in out.iter_mut().enumerate() {
        // s^k coefficient of 4s(Q''−2aQ'+a²Q) comes from index k−1
        let inner = if k == 0 {
            T::zero()
        } else {
            let j = k - 1;
            lit::<T>(4.0) * (d2(j) - lit::<T>(2.0) * a * d1(j) + a * a * coef(j))
        };
        let lin = lit::<T>(6.0) * (d1(k) - a * coef(k));
        *o = coef(k) - inner - lin;
    }
    while out.len() > 1 && out[out.len() - 1] == T::zero() {
        out.pop();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum LiftedPart<T> {
    /// `Q(r²) e^{−a r²}` with `Q(0) = 1`.
    GaussPoly { a: T, q: Vec<T> },
    Cos { a: T, axis: Vec3<T> },
    Shift { shift: Vec3<T> },
    One,
}

impl<T: Real> LiftedPart<T> {
    fn deficit(&self, xi: Vec3<T>) -> Complex<T> {
        match self {
            Self::GaussPoly { a, q } => Complex::new(gauss_poly_deficit(*a, q, dot(xi, xi)), T::zero()),
            Self::Cos { a, axis } => Complex::new(one_minus_cos(*a * dot(xi, *axis)), T::zero()),
            Self::Shift { shift } => {
                let x = dot(xi, *shift);
                Complex::new(one_minus_cos(x), x.sin())
            }
            Self::One => Complex::new(T::zero(), T::zero()),
        }
    }

    fn avg(&self, r: T) -> T {
        match self {
            Self::GaussPoly { a, q } => gauss_poly_deficit(*a, q, r * r),
            Self::Cos { a, .. } => one_minus_sinc(*a * r),
            Self::Shift { shift } => one_minus_sinc(norm(*shift) * r),
            Self::One => T::zero(),
        }
    }
}

/// `1 − Q(s)e^{−as}` without cancellation at small `s`.
fn gauss_poly_deficit<T: Real>(a: T, q: &[T], s: T) -> T {
    let mut tail = T::zero();
    for c in q.iter().skip(1).rev() {
        tail = tail * s + *c;
    }
    let qs = T::one() + tail * s;
    -(tail * s) - qs * (-a * s).exp_m1()
}

/// Normalised lift `ψ/ψ(0)` of an analytic family, with `ψ(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProfile<T = f64> {
    pub order: usize,
    pub psi0: T,
    parts: Vec<(T, LiftedPart<T>)>,
    name: String,
}

impl<T: Real> LiftedProfile<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Unnormalised `ψ(r)` along `e_z`.
    pub fn psi(&self, r: T) -> T {
        self.psi0 * (T::one() - self.deficit_at([T::zero(), T::zero(), r]).re)
    }

    pub fn radial_deficit_avg(&self, r: T) -> T {
        self.parts.iter().map(|(w, p)| *w * p.avg(r)).sum()
    }

    pub fn to_radial(&self, radii: Vec<T>, interpolation: Interpolation) -> Result<RadialCharFn<T>> {
        RadialCharFn::from_deficit_fn(radii, |r| self.radial_deficit_avg(r), interpolation, self.name.clone())
    }
}

impl<T: Real> CharFn<T> for LiftedProfile<T> {
    fn deficit_at(&self, xi: Vec3<T>) -> Complex<T> {
        self.parts.iter().fold(Complex::new(T::zero(), T::zero()), |acc, (w, p)| acc + p.deficit(xi) * *w)
    }

    fn is_isotropic(&self) -> bool {
        self.parts.iter().all(|(_, p)| matches!(p, LiftedPart::GaussPoly { .. } | LiftedPart::One))
    }

    fn probe_directions(&self) -> Vec<Vec3<T>> {
        let mut out: Vec<Vec3<T>> = self
            .parts
            .iter()
            .filter_map(|(_, p)| match p {
                LiftedPart::Cos { axis, .. } => Some(*axis),
                LiftedPart::Shift { shift } if norm(*shift) > T::zero() => Some(scale(T::one() / norm(*shift), *shift)),
                _ => None,
            })
            .collect();
        if out.is_empty() {
            out.push(e_z());
        }
        out
    }

    fn abs_re_deficit_avg(&self, r: T) -> T {
        self.radial_deficit_avg(r).abs()
    }

    fn re_deficit_avg(&self, r: T) -> T {
        self.radial_deficit_avg(r)
    }

    fn tail_model(&self) -> Option<TailModel<T>> {
        let mut limit = T::zero();
        let mut sincs = Vec::new();
        let mut decay = T::zero();
        for (w, p) in &self.parts {
            match p {
                LiftedPart::GaussPoly { a, q } => {
                    limit = limit + *w;
                    decay = decay.max(gauss_poly_decay(*a, q));
                }
                LiftedPart::Cos { a, .. } => {
                    limit = limit + *w;
                    sincs.push((*w, *a));
                }
                LiftedPart::Shift { shift } => {
                    limit = limit + *w;
                    sincs.push((*w, norm(*shift)));
                }
                LiftedPart::One => {}
            }
        }
        Some(TailModel { limit, sincs, decay_radius: decay })
    }
}

/// Radius beyond which `|Q(r²)|e^{−ar²} < 1e-17`.
fn gauss_poly_decay<T: Real>(a: T, q: &[T]) -> T {
    let mut r = T::one();
    let small = lit::<T>(1e-17);
    let val = |r: T| {
        let s = r * r;
        let mut p = T::zero();
        for c in q.iter().rev() {
            p = p * s + *c;
        }
        p.abs() * (-a * s).exp()
    };
    // value is eventually monotone; step outward until small, then confirm
    while !(val(r) < small && val(r * lit(1.5)) < small) {
        r = r * lit(1.1);
        if r > lit(1e6) {
            break;
        }
    }
    r
}

impl<T: Real> std::fmt::Display for AnalyticCharFn<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type A = AnalyticCharFn<f64>;

    #[test]
    fn gaussian_lift_matches_symbolic_derivative() {
        let l = A::gaussian(1.0).lift(1).unwrap();
        assert!((l.psi0 - 4.0).abs() < 1e-15);
        for k in 0..50 {
            let r = 0.1 * k as f64;
            let exact = (4.0 - r * r) * (-r * r / 2.0).exp();
            assert!((l.psi(r) - exact).abs() < 1e-13, "r={r}");
        }
    }

    #[test]
    fn second_lift_of_gaussian() {
        let l = A::gaussian(1.0).lift(2).unwrap();
        let l1 = A::gaussian(1.0).lift(1).unwrap();
        let h = 1e-3;
        for &r in &[0.5, 1.0, 2.0] {
            let f = |x: f64| l1.psi(x);
            let lap = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h) + (f(r + h) - f(r - h)) / (h * r);
            assert!((l.psi(r) - (f(r) - lap)).abs() < 1e-4, "r={r}");
        }
    }

    #[test]
    fn mixture_rules() {
        let m = A::mixture(vec![(0.5, A::gaussian(1.0)), (0.5, A::dirac_pair(2.0))]);
        m.validate().unwrap();
        assert!((m.second_moment() - 3.5).abs() < 1e-15);
        assert!(!m.is_isotropic());
        assert!(m.is_symmetric());
        let bad = A::mixture(vec![(0.5, A::gaussian(1.0)), (0.4, A::dirac_pair(2.0))]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn serde_roundtrip_with_flattened_components() {
        let m = A::mixture(vec![(0.25, A::stable(1.5)), (0.75, A::dirac_pair(2.0))]);
        let s = serde_json::to_string(&m).unwrap();
        let back: A = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let g: A = serde_json::from_str(r#"{"family":"stable","index":1.0}"#).unwrap();
        assert_eq!(g, A::stable(1.0));
    }

    #[test]
    fn shifted_dirac_deficit_is_complex() {
        let d = A::shifted_dirac([0.0, 0.0, 1.0]);
        let u = d.deficit([0.0, 0.0, 0.3]);
        assert!((u.re - (1.0 - 0.3f64.cos())).abs() < 1e-15);
        assert!((u.im - 0.3f64.sin()).abs() < 1e-15);
        assert!(!d.is_symmetric());
    }
}
