//! Characteristic functions of probability measures on R³: sampled radial
//! profiles, closed-form families, and the norms that classify them.
//!
//! Every representation stores the *deficit* `1 − φ` rather than `φ`
//! itself. Near `ξ = 0` the deficit carries full relative precision, which
//! the small-`|ξ|` behaviour of both norms (and the energy diagnostic)
//! depends on.
//!
//! Only `φ(0) = 1` and `|φ| ≤ 1` are enforced; positive definiteness is
//! not checked.

mod analytic;
pub mod io;
mod norms;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{Interpolation, Sample};
use crate::num::{lit, scale, Real, Vec3};

pub use analytic::{AnalyticCharFn, Component, LiftedProfile};
pub use norms::{
    classify, dis_distance, knorm, knorm_diff, mean_obstruction, mnorm_re, mnorm_re_diff, Classification,
    Finiteness, MeanObstruction, NormValue,
};

/// Layout of the radial grid: `0`, then radii `r_min · q^k` while the
/// geometric spacing stays below the uniform spacing `h = r_max /
/// uniform_nodes`, then multiples of `h` up to `r_max`.
///
/// The geometric run keeps the relative spacing fixed, so profiles that
/// behave like `r^p` at the origin are interpolated with the same relative
/// accuracy at every scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec<T = f64> {
    pub r_max: T,
    pub uniform_nodes: usize,
    pub r_min_factor: T,
    pub geometric_ratio: T,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self { r_max: lit(20.0), uniform_nodes: 800, r_min_factor: lit(1e-6), geometric_ratio: lit(1.04) }
    }
}

impl<T: Real> GridSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > T::zero()) {
            return Err(Error::Domain("grid r_max must be positive".into()));
        }
        if self.uniform_nodes < 4 {
            return Err(Error::Domain("grid needs >= 4 uniform nodes".into()));
        }
        if !(self.geometric_ratio > T::one() && self.geometric_ratio <= lit(2.0)) {
            return Err(Error::Domain("grid geometric_ratio must lie in (1, 2]".into()));
        }
        let h = self.uniform_spacing();
        if !(self.r_min_factor > T::zero() && self.r_min_factor * self.r_max * (self.geometric_ratio - T::one()) < h) {
            return Err(Error::Domain("grid r_min must lie below the geometric/uniform crossover".into()));
        }
        Ok(())
    }

    pub fn uniform_spacing(&self) -> T {
        self.r_max / T::from_usize_lossy(self.uniform_nodes)
    }

    pub fn radii(&self) -> Vec<T> {
        let h = self.uniform_spacing();
        let q = self.geometric_ratio;
        let mut radii = vec![T::zero()];
        let mut r = self.r_min_factor * self.r_max;
        while r * (q - T::one()) < h {
            radii.push(r);
            r = r * q;
        }
        let last = radii[radii.len() - 1];
        let mut k = (last / h).floor().to_usize().unwrap_or(0) + 1;
        loop {
            let x = h * T::from_usize_lossy(k);
            if x > self.r_max * (T::one() + lit(1e-12)) {
                break;
            }
            if x - last >= h * lit(0.5) {
                radii.push(x);
            }
            k += 1;
        }
        debug_assert!(radii.windows(2).all(|w| w[1] > w[0]));
        radii
    }
}

/// Isotropic characteristic function sampled on a radial grid.
#[derive(Debug, Clone)]
pub struct RadialCharFn<T = f64> {
    radii: Vec<T>,
    deficit_re: Vec<T>,
    deficit_im: Vec<T>,
    interpolation: Interpolation,
    aux_re: Vec<T>,
    aux_im: Vec<T>,
    provenance: String,
}

fn tiny<T: Real>() -> T {
    lit::<T>(1e-12).max(T::epsilon() * lit(16.0))
}

impl<T: Real> RadialCharFn<T> {
    /// Builds from deficits `1 − φ(r_i)`. Radii must start at 0 and
    /// increase strictly.
    pub fn from_deficit(
        radii: Vec<T>,
        mut deficit_re: Vec<T>,
        mut deficit_im: Vec<T>,
        interpolation: Interpolation,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let n = radii.len();
        if n < 4 || deficit_re.len() != n || deficit_im.len() != n {
            return Err(Error::InvalidCharFn("need >= 4 radii with matching value arrays".into()));
        }
        if radii[0] != T::zero() || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCharFn("radii must start at 0 and increase strictly".into()));
        }
        let eps = tiny::<T>();
        if deficit_re[0].abs() > eps || deficit_im[0].abs() > eps {
            return Err(Error::InvalidCharFn(format!(
                "phi(0) = {} + {}i, expected 1",
                T::one() - deficit_re[0],
                -deficit_im[0]
            )));
        }
        deficit_re[0] = T::zero();
        deficit_im[0] = T::zero();
        for i in 0..n {
            let (ur, ui) = (deficit_re[i], deficit_im[i]);
            if !ur.is_finite() || !ui.is_finite() {
                return Err(Error::InvalidCharFn(format!("non-finite value at r = {}", radii[i])));
            }
            if ui.abs() < eps {
                deficit_im[i] = T::zero();
            }
            let modulus = Complex::new(T::one() - ur, -ui).norm();
            if modulus > T::one() + eps {
                return Err(Error::InvalidCharFn(format!(
                    "|phi| = {modulus} > 1 at r = {}",
                    radii[i]
                )));
            }
        }
        let aux_re = interpolation.aux(&radii, &deficit_re);
        let aux_im = if deficit_im.iter().all(|v| *v == T::zero()) {
            vec![T::zero(); n]
        } else {
            interpolation.aux(&radii, &deficit_im)
        };
        Ok(Self { radii, deficit_re, deficit_im, interpolation, aux_re, aux_im, provenance: provenance.into() })
    }

    /// Builds from values `φ(r_i)`.
    pub fn from_values(radii: Vec<T>, values: &[Complex<T>], interpolation: Interpolation, provenance: impl Into<String>) -> Result<Self> {
        let re = values.iter().map(|v| T::one() - v.re).collect();
        let im = values.iter().map(|v| -v.im).collect();
        Self::from_deficit(radii, re, im, interpolation, provenance)
    }

    /// Real profile from a deficit function evaluated on `radii`.
    pub fn from_deficit_fn(radii: Vec<T>, f: impl Fn(T) -> T, interpolation: Interpolation, provenance: impl Into<String>) -> Result<Self> {
        let re: Vec<T> = radii.iter().map(|&r| if r == T::zero() { T::zero() } else { f(r) }).collect();
        let im = vec![T::zero(); radii.len()];
        Self::from_deficit(radii, re, im, interpolation, provenance)
    }

    /// The constant `φ ≡ 1` (point mass at the origin).
    pub fn identity(radii: Vec<T>) -> Self {
        let n = radii.len();
        Self::from_deficit(radii, vec![T::zero(); n], vec![T::zero(); n], Interpolation::Spline, "point_mass")
            .expect("identity is a valid characteristic function")
    }

    /// Same grid, new real deficits (used by the solver).
    pub fn with_real_deficit(&self, deficit_re: Vec<T>, provenance: impl Into<String>) -> Result<Self> {
        let n = self.radii.len();
        Self::from_deficit(self.radii.clone(), deficit_re, vec![T::zero(); n], self.interpolation, provenance)
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn r_max(&self) -> T {
        self.radii[self.radii.len() - 1]
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, p: impl Into<String>) {
        self.provenance = p.into();
    }

    pub fn deficit_re(&self) -> &[T] {
        &self.deficit_re
    }

    pub fn deficit_im(&self) -> &[T] {
        &self.deficit_im
    }

    pub fn aux_re(&self) -> &[T] {
        &self.aux_re
    }

    pub fn is_real(&self) -> bool {
        self.deficit_im.iter().all(|v| *v == T::zero())
    }

    /// Node value `φ(r_i)`.
    pub fn value(&self, i: usize) -> Complex<T> {
        Complex::new(T::one() - self.deficit_re[i], -self.deficit_im[i])
    }

    pub fn values(&self) -> Vec<Complex<T>> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Tail bound `|φ − 1| ≤ 2` used beyond the last radius.
    pub fn tail_bound(&self) -> T {
        lit(2.0)
    }

    /// Interpolated deficit `1 − φ(r)`; `r` is clamped into `[0, r_max]`.
    pub fn eval_deficit(&self, r: T) -> Complex<T> {
        let s = self.interpolation.sample(&self.radii, r);
        self.apply_sample(&s)
    }

    #[inline]
    pub fn apply_sample(&self, s: &Sample<T>) -> Complex<T> {
        let re = s.apply(&self.deficit_re, &self.aux_re);
        let im = if self.is_real() { T::zero() } else { s.apply(&self.deficit_im, &self.aux_im) };
        Complex::new(re, im)
    }

    pub fn eval(&self, r: T) -> Complex<T> {
        let u = self.eval_deficit(r);
        Complex::new(T::one() - u.re, -u.im)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.radii == other.radii
    }

    /// Largest nodewise `|φ − ψ|` on a shared grid.
    pub fn sup_distance(&self, other: &Self) -> T {
        assert!(self.same_grid(other), "sup_distance needs a shared grid");
        (0..self.len())
            .map(|i| Complex::new(self.deficit_re[i] - other.deficit_re[i], self.deficit_im[i] - other.deficit_im[i]).norm())
            .fold(T::zero(), T::max)
    }
}

/// Anything the norms can evaluate: a deficit `1 − φ(ξ)` at any `ξ ∈ R³`.
pub trait CharFn<T: Real>: Sync {
    fn deficit_at(&self, xi: Vec3<T>) -> Complex<T>;

    fn is_isotropic(&self) -> bool;

    /// Directions that capture the supremum over the sphere.
    fn probe_directions(&self) -> Vec<Vec3<T>> {
        vec![[T::zero(), T::zero(), T::one()]]
    }

    /// Sphere average of `|Re(1 − φ(rω))|`.
    fn abs_re_deficit_avg(&self, r: T) -> T {
        sphere_average(|w| self.deficit_at(scale(r, w)).re.abs())
    }

    /// Sphere average of `Re(1 − φ(rω))`.
    fn re_deficit_avg(&self, r: T) -> T {
        sphere_average(|w| self.deficit_at(scale(r, w)).re)
    }

    /// Large-`r` behaviour of [`CharFn::abs_re_deficit_avg`], when known.
    fn tail_model(&self) -> Option<TailModel<T>> {
        None
    }

    fn as_radial(&self) -> Option<&RadialCharFn<T>> {
        None
    }

    fn as_analytic(&self) -> Option<&AnalyticCharFn<T>> {
        None
    }
}

/// For `r ≥ decay_radius` the averaged deficit equals
/// `limit − Σ w·sinc(a r)` up to terms below `1e-17`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailModel<T> {
    pub limit: T,
    pub sincs: Vec<(T, T)>,
    pub decay_radius: T,
}

/// Average over the unit sphere: Gauss–Legendre in `cos` of the polar
/// angle, trapezoid in azimuth.
pub fn sphere_average<T: Real>(f: impl Fn(Vec3<T>) -> T) -> T {
    use std::sync::OnceLock;
    static RULE: OnceLock<crate::quad::GaussLegendre<f64>> = OnceLock::new();
    let gl = RULE.get_or_init(|| crate::quad::GaussLegendre::new(48));
    let m = 48;
    let mut acc = T::zero();
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        let mu = lit::<T>(*x);
        let rho = (T::one() - mu * mu).max(T::zero()).sqrt();
        let mut ring = T::zero();
        for j in 0..m {
            let phi = T::two_pi() * T::from_usize_lossy(j) / T::from_usize_lossy(m);
            ring = ring + f([rho * phi.cos(), rho * phi.sin(), mu]);
        }
        acc = acc + lit::<T>(*w) * ring / T::from_usize_lossy(m);
    }
    acc * lit(0.5)
}

impl<T: Real> CharFn<T> for RadialCharFn<T> {
    fn deficit_at(&self, xi: Vec3<T>) -> Complex<T> {
        self.eval_deficit(crate::num::norm(xi))
    }

    fn is_isotropic(&self) -> bool {
        true
    }

    fn abs_re_deficit_avg(&self, r: T) -> T {
        self.eval_deficit(r).re.abs()
    }

    fn re_deficit_avg(&self, r: T) -> T {
        self.eval_deficit(r).re
    }

    fn as_radial(&self) -> Option<&RadialCharFn<T>> {
        Some(self)
    }
}

impl<T: Real> CharFn<T> for AnalyticCharFn<T> {
    fn deficit_at(&self, xi: Vec3<T>) -> Complex<T> {
        self.deficit(xi)
    }

    fn is_isotropic(&self) -> bool {
        AnalyticCharFn::is_isotropic(self)
    }

    fn probe_directions(&self) -> Vec<Vec3<T>> {
        self.directions()
    }

    fn abs_re_deficit_avg(&self, r: T) -> T {
        self.radial_deficit_avg(r).abs()
    }

    fn re_deficit_avg(&self, r: T) -> T {
        self.radial_deficit_avg(r)
    }

    fn as_analytic(&self) -> Option<&AnalyticCharFn<T>> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_layout() {
        let g = GridSpec::<f64>::default();
        g.validate().unwrap();
        let r = g.radii();
        assert_eq!(r[0], 0.0);
        assert!((r[1] - 2e-5).abs() < 1e-18);
        assert!((r[r.len() - 1] - 20.0).abs() < 1e-12);
        let h = g.uniform_spacing();
        let steps: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|&d| d <= h * 1.5 + 1e-12));
        // relative spacing never exceeds the geometric ratio
        assert!(r.windows(2).skip(1).all(|w| w[1] / w[0] <= 1.04 + 1e-12));
    }

    #[test]
    fn rejects_invalid_profiles() {
        let radii = GridSpec::<f64>::default().radii();
        let n = radii.len();
        let mut re = vec![0.0; n];
        re[0] = 0.1;
        assert!(RadialCharFn::from_deficit(radii.clone(), re, vec![0.0; n], Interpolation::Spline, "x").is_err());
        let mut re = vec![0.0; n];
        re[10] = -0.5; // |φ| = 1.5
        assert!(RadialCharFn::from_deficit(radii.clone(), re, vec![0.0; n], Interpolation::Spline, "x").is_err());
        let mut im = vec![0.0; n];
        im[5] = 1e-14;
        let f = RadialCharFn::from_deficit(radii, vec![0.0; n], im, Interpolation::Spline, "x").unwrap();
        assert!(f.is_real());
    }
}
