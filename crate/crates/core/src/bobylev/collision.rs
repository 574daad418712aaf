//! Isotropic gain operator
//!
//! ```text
//! G_n(φ)(r) = 2π ∫_0^{π/2} b_n(cos θ) φ(r cos(θ/2)) φ(r sin(θ/2)) sin θ dθ
//! ```
//!
//! evaluated in deficit form: with `u = 1 − φ`,
//! `G_n(φ) = γ_2 − Q(u)` and `Q(u) = Σ_k w_k (u_c + u_s − u_c u_s)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::charfun::RadialCharFn;
use crate::error::{Error, Result};
use crate::interp::{Interpolation, Sample};
use crate::kernel::AngularKernel;
use crate::num::{lit, Real};
use crate::quad::GaussLegendre;

/// Default Gauss–Legendre order per smooth piece of `b_n`.
pub const THETA_ORDER: usize = 64;

/// Precomputed θ-quadrature and interpolation weights for one grid and kernel.
#[derive(Debug, Clone)]
pub struct CollisionPlan<T = f64> {
    radii: Vec<T>,
    interpolation: Interpolation,
    /// `(θ_k, 2π b_n(θ_k) sin θ_k · gl_k)`.
    theta: Vec<(T, T)>,
    gamma2: T,
    order: usize,
    /// Node-major; `theta.len()` pairs `(r cos θ/2, r sin θ/2)` per node.
    samples: Vec<[Sample<T>; 2]>,
}

/// `G_n(φ)` on the grid nodes.
#[derive(Debug, Clone, Serialize)]
pub struct GainProfile<T = f64> {
    #[serde(skip)]
    pub radii: Vec<T>,
    pub values: Vec<T>,
    /// `γ_2^n` as integrated by the same θ-rule.
    pub gamma2: T,
    /// Sup-norm gap to the rule of twice the order.
    pub residual: T,
}

impl<T: Real> GainProfile<T> {
    /// `G_n(φ)/γ_2^n`, itself a characteristic function.
    pub fn normalized(&self, interpolation: Interpolation) -> Result<RadialCharFn<T>> {
        let deficit = self.values.iter().map(|g| T::one() - *g / self.gamma2).collect();
        let n = self.radii.len();
        RadialCharFn::from_deficit(self.radii.clone(), deficit, vec![T::zero(); n], interpolation, "gain")
    }
}

impl<T: Real> CollisionPlan<T> {
    pub fn new(radii: &[T], interpolation: Interpolation, kernel: &AngularKernel<T>, theta_order: usize) -> Result<Self> {
        kernel.validate()?;
        if !kernel.is_bounded() {
            return Err(Error::NonCutoff("the gain operator needs a bounded kernel; evolve through a cutoff sequence".into()));
        }
        if theta_order < 2 {
            return Err(Error::Domain("theta order must be at least 2".into()));
        }
        let gl = GaussLegendre::<T>::new(theta_order);
        let mut pts = vec![T::zero()];
        pts.extend(kernel.breakpoints());
        pts.push(T::FRAC_PI_2());
        let two_pi = T::two_pi();
        let mut theta = Vec::with_capacity(theta_order * (pts.len() - 1));
        for w in pts.windows(2) {
            for (t, wt) in gl.mapped(w[0], w[1]) {
                theta.push((t, two_pi * kernel.value(t) * t.sin() * wt));
            }
        }
        let gamma2 = theta.iter().map(|(_, w)| *w).sum();
        let half = lit::<T>(0.5);
        let mut samples = Vec::with_capacity(radii.len() * theta.len());
        for &r in radii {
            for &(t, _) in &theta {
                let (s, c) = (t * half).sin_cos();
                samples.push([interpolation.sample(radii, r * c), interpolation.sample(radii, r * s)]);
            }
        }
        Ok(Self { radii: radii.to_vec(), interpolation, theta, gamma2, order: theta_order, samples })
    }

    pub fn for_profile(phi: &RadialCharFn<T>, kernel: &AngularKernel<T>, theta_order: usize) -> Result<Self> {
        Self::new(phi.radii(), phi.interpolation(), kernel, theta_order)
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Gauss–Legendre order per smooth piece of `b_n`.
    pub fn theta_order(&self) -> usize {
        self.order
    }

    /// Total number of θ nodes.
    pub fn theta_nodes(&self) -> usize {
        self.theta.len()
    }

    /// `Σ w_k`, the discrete `γ_2^n`.
    pub fn gamma2(&self) -> T {
        self.gamma2
    }

    /// `Q(u) = γ_2 − G_n(1 − u)` at every node.
    pub fn loss_deficit(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); u.len()];
        self.loss_deficit_into(u, &mut out);
        out
    }

    pub fn loss_deficit_into(&self, u: &[T], out: &mut [T]) {
        assert_eq!(u.len(), self.radii.len(), "deficit length must match the plan grid");
        let aux = self.interpolation.aux(&self.radii, u);
        let k = self.theta.len();
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            if i == 0 {
                *o = T::zero();
                return;
            }
            let row = &self.samples[i * k..(i + 1) * k];
            let mut acc = T::zero();
            for (s, &(_, w)) in row.iter().zip(&self.theta) {
                let uc = s[0].apply(u, &aux);
                let us = s[1].apply(u, &aux);
                acc = acc + w * (uc + us - uc * us);
            }
            *o = acc;
        });
    }

    /// Sup-norm gap between this rule and one of twice the order on `u`.
    pub fn residual(&self, u: &[T], kernel: &AngularKernel<T>) -> Result<T> {
        let fine = Self::new(&self.radii, self.interpolation, kernel, 2 * self.order)?;
        let a = self.loss_deficit(u);
        let b = fine.loss_deficit(u);
        let dg = (self.gamma2 - fine.gamma2).abs();
        Ok(a.iter().zip(&b).map(|(x, y)| (*x - *y).abs()).fold(dg, T::max))
    }
}

/// `G_n(φ)` for a real isotropic profile, with the doubled-order residual.
/// Fails when the residual exceeds `tol`.
pub fn collision_gn<T: Real>(
    phi: &RadialCharFn<T>,
    kernel: &AngularKernel<T>,
    theta_order: usize,
    tol: T,
) -> Result<GainProfile<T>> {
    if !phi.is_real() {
        return Err(Error::Domain("the isotropic gain operator needs a real profile".into()));
    }
    let plan = CollisionPlan::for_profile(phi, kernel, theta_order)?;
    let u = phi.deficit_re();
    let q = plan.loss_deficit(u);
    let residual = plan.residual(u, kernel)?;
    if residual > tol {
        return Err(Error::Numeric { what: "gain operator quadrature".into(), estimate: residual.as_f64(), tolerance: tol.as_f64() });
    }
    let values = q.iter().map(|v| plan.gamma2 - *v).collect();
    Ok(GainProfile { radii: phi.radii().to_vec(), values, gamma2: plan.gamma2, residual })
}
