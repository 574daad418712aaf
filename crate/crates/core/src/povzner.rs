//! Collision geometry in velocity space and the Povzner-type splitting of
//! the weighted moment flux
//!
//! ```text
//! K(v, v_*) = ∫_{S²} b_n {Ψ(|v'|²) + Ψ(|v_*'|²) − Ψ(|v|²) − Ψ(|v_*|²)} dσ = −H + G,
//! Ψ(x) = (1 + x)^{n + α/2}.
//! ```
//!
//! Angles follow the symmetrized convention: `θ ∈ [0, π/2]` with the folded
//! kernel, so every σ-integral is `2 ∫_0^{π/2} ∫_0^π (…) sin θ dϕ dθ`.
//!
//! `−H ≤ 0` is a consequence of the convexity of `Ψ` for exponents `≥ 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::AngularKernel;
use crate::num::{add, cross, lit, norm, norm2, scale, sub, Real, Vec3};
use crate::quad::{adaptive, GaussLegendre, Tolerance};

/// Orthonormal frame `k = (v − v_*)/|v − v_*|`, `i = v × v_*/|v × v_*|`,
/// `h = i × k`. When `v × v_* = 0`, `i` is a fixed completion orthogonal to `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionFrame<T = f64> {
    pub v: Vec3<T>,
    pub v_star: Vec3<T>,
    pub k: Vec3<T>,
    pub i: Vec3<T>,
    pub h: Vec3<T>,
    pub degenerate: bool,
}

/// A unit vector orthogonal to the unit vector `k`.
pub fn orthogonal_unit<T: Real>(k: Vec3<T>) -> Vec3<T> {
    // cross with the axis least aligned with k
    let a = k.map(|c| c.abs());
    let e = if a[0] <= a[1] && a[0] <= a[2] {
        [T::one(), T::zero(), T::zero()]
    } else if a[1] <= a[2] {
        [T::zero(), T::one(), T::zero()]
    } else {
        [T::zero(), T::zero(), T::one()]
    };
    let c = cross(k, e);
    scale(T::one() / norm(c), c)
}

impl<T: Real> CollisionFrame<T> {
    pub fn new(v: Vec3<T>, v_star: Vec3<T>) -> Result<Self> {
        let d = sub(v, v_star);
        let g = norm(d);
        if !(g > T::zero()) || !g.is_finite() {
            return Err(Error::Domain("collision frame needs distinct finite velocities".into()));
        }
        let k = scale(T::one() / g, d);
        let c = cross(v, v_star);
        let cn = norm(c);
        let degenerate = !(cn > lit::<T>(1e-300).max(T::min_positive_value()) * g);
        let i = if degenerate { orthogonal_unit(k) } else { scale(T::one() / cn, c) };
        let h = cross(i, k);
        Ok(Self { v, v_star, k, i, h, degenerate })
    }

    /// `σ(θ, ϕ) = k cos θ + sin θ (h cos ϕ + i sin ϕ)`.
    pub fn sigma(&self, theta: T, phi: T) -> Vec3<T> {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        add(scale(ct, self.k), scale(st, add(scale(cp, self.h), scale(sp, self.i))))
    }

    pub fn post(&self, theta: T, phi: T) -> (Vec3<T>, Vec3<T>) {
        collide(self.v, self.v_star, self.sigma(theta, phi))
    }
}

fn collide<T: Real>(v: Vec3<T>, v_star: Vec3<T>, sigma: Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let half = lit::<T>(0.5);
    let center = scale(half, add(v, v_star));
    let r = scale(half * norm(sub(v, v_star)), sigma);
    (add(center, r), sub(center, r))
}

/// `v' = (v + v_*)/2 + |v − v_*|/2 σ`, `v_*' = (v + v_*)/2 − |v − v_*|/2 σ`.
pub fn post_collision<T: Real>(v: Vec3<T>, v_star: Vec3<T>, sigma: Vec3<T>) -> Result<(Vec3<T>, Vec3<T>)> {
    if !((norm(sigma) - T::one()).abs() <= lit::<T>(1e-12).max(T::epsilon() * lit(16.0))) {
        return Err(Error::Domain(format!("sigma must be a unit vector, |sigma| = {}", norm(sigma))));
    }
    Ok(collide(v, v_star, sigma))
}

/// `|v'|² = Y(θ) + Z cos ϕ` and `|v_*'|² = Y(π − θ) − Z cos ϕ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YZ<T = f64> {
    pub y: T,
    pub y_reflected: T,
    pub z: T,
}

pub fn yz_decomposition<T: Real>(v: Vec3<T>, v_star: Vec3<T>, theta: T) -> YZ<T> {
    let (a, b) = (norm2(v), norm2(v_star));
    let h = theta * lit(0.5);
    let (s2, c2) = (h.sin().powi(2), h.cos().powi(2));
    YZ { y: a * c2 + b * s2, y_reflected: b * c2 + a * s2, z: norm(cross(v, v_star)) * theta.sin() }
}

/// `Ψ(x) = (1 + x)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psi<T = f64> {
    pub p: T,
}

impl<T: Real> Psi<T> {
    /// `Ψ_{2n+α}` with `p = n + α/2`.
    pub fn moment(n: u32, alpha: T) -> Self {
        Self { p: T::from_u32(n).expect("small integer") + alpha * lit(0.5) }
    }

    pub fn value(&self, x: T) -> T {
        (T::one() + x).powf(self.p)
    }

    pub fn second_derivative(&self, x: T) -> T {
        if self.p == T::one() {
            return T::zero();
        }
        self.p * (self.p - T::one()) * (T::one() + x).powf(self.p - lit(2.0))
    }

    /// `Ψ(x + d) − Ψ(x)` without cancellation.
    pub fn increment(&self, x: T, d: T) -> T {
        let base = T::one() + x;
        base.powf(self.p) * (self.p * (d / base).ln_1p()).exp_m1()
    }
}

/// Quadrature settings for [`povzner_split`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PovznerQuadrature<T = f64> {
    /// Gauss–Legendre order per smooth piece of `b_n` in θ.
    pub theta_order: usize,
    /// Relative tolerance of the adaptive ϕ-integrals.
    pub phi_tol: T,
    /// Largest admissible `|K − (−H + G)|` relative to `1 + |K| + |H| + |G|`.
    pub tolerance: T,
}

impl<T: Real> Default for PovznerQuadrature<T> {
    fn default() -> Self {
        Self { theta_order: 64, phi_tol: lit(1e-14), tolerance: lit(1e-10) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PovznerSplit<T = f64> {
    /// Spherical quadrature of the full flux.
    pub k: T,
    /// θ-only part; `≤ 0` for convex `Ψ`.
    pub minus_h: T,
    /// `K + H`.
    pub g: T,
    /// `G` from its integrated-by-parts ϕ formula.
    pub g_direct: T,
    /// `|g − g_direct|`.
    pub reconstruction: T,
}

struct ThetaRule<T> {
    nodes: Vec<(T, T)>,
}

impl<T: Real> ThetaRule<T> {
    /// Nodes `θ_j` and weights `b_n(θ_j) sin θ_j w_j` on `[0, π/2]`.
    fn new(kernel: &AngularKernel<T>, order: usize) -> Result<Self> {
        kernel.validate()?;
        if !kernel.is_bounded() {
            return Err(Error::NonCutoff("the Povzner split needs a cut-off kernel".into()));
        }
        let gl = GaussLegendre::<T>::new(order);
        let mut pts = vec![T::zero()];
        pts.extend(kernel.breakpoints());
        pts.push(T::FRAC_PI_2());
        let mut nodes = Vec::with_capacity(order * (pts.len() - 1));
        for w in pts.windows(2) {
            for (t, wt) in gl.mapped(w[0], w[1]) {
                nodes.push((t, kernel.value(t) * t.sin() * wt));
            }
        }
        Ok(Self { nodes })
    }
}

fn phi_integral<T: Real>(f: impl FnMut(T) -> T, b: T, rel: T) -> Result<T> {
    let tol = Tolerance { abs: lit::<T>(1e-300), rel, max_segments: 400 };
    Ok(adaptive(f, T::zero(), b, tol)?.value)
}

/// `(K, −H, G)` for `Ψ(x) = (1 + x)^p` with an explicit exponent.
pub fn povzner_split_with<T: Real>(
    v: Vec3<T>,
    v_star: Vec3<T>,
    kernel: &AngularKernel<T>,
    psi: Psi<T>,
    quad: &PovznerQuadrature<T>,
) -> Result<PovznerSplit<T>> {
    let rule = ThetaRule::new(kernel, quad.theta_order)?;
    split_with_rule(v, v_star, &rule, psi, quad)
}

fn split_with_rule<T: Real>(
    v: Vec3<T>,
    v_star: Vec3<T>,
    rule: &ThetaRule<T>,
    psi: Psi<T>,
    quad: &PovznerQuadrature<T>,
) -> Result<PovznerSplit<T>> {
    if !(psi.p >= T::one()) {
        return Err(Error::Domain(format!("Psi exponent must be >= 1, got {}", psi.p)));
    }
    let (a, b) = (norm2(v), norm2(v_star));
    let (pa, pb) = (psi.value(a), psi.value(b));
    let pi = T::PI();
    let half_pi = T::FRAC_PI_2();
    let two = lit::<T>(2.0);
    let (mut k, mut mh, mut gd) = (T::zero(), T::zero(), T::zero());
    for &(theta, w) in &rule.nodes {
        let yz = yz_decomposition(v, v_star, theta);
        let h = theta * lit(0.5);
        let (s2, c2) = (h.sin().powi(2), h.cos().powi(2));
        // convex-combination gaps, each ≤ 0 for convex Ψ
        let gap1 = c2 * psi.increment(a, s2 * (b - a)) + s2 * psi.increment(b, c2 * (a - b));
        let gap2 = c2 * psi.increment(b, s2 * (a - b)) + s2 * psi.increment(a, c2 * (b - a));
        mh = mh + w * (gap1 + gap2);
        let z = yz.z;
        let inner = if z == T::zero() {
            pi * (gap1 + gap2)
        } else {
            let f = |p: T| {
                let zc = z * p.cos();
                psi.value(yz.y + zc) + psi.value(yz.y_reflected - zc)
            };
            phi_integral(f, pi, quad.phi_tol)? - pi * (pa + pb)
        };
        k = k + w * inner;
        if z != T::zero() && psi.p != T::one() {
            let g = |y: T| {
                move |p: T| {
                    let (sp, cp) = p.sin_cos();
                    let zc = z * cp;
                    (sp - p * cp) * sp * (psi.second_derivative(y + zc) + psi.second_derivative(y - zc))
                }
            };
            let j = phi_integral(g(yz.y), half_pi, quad.phi_tol)? + phi_integral(g(yz.y_reflected), half_pi, quad.phi_tol)?;
            gd = gd + w * z * z * j;
        }
    }
    let (k, minus_h, g_direct) = (two * k, two * pi * mh, two * gd);
    let g = k - minus_h;
    let reconstruction = (g - g_direct).abs();
    let scale = T::one() + k.abs() + minus_h.abs() + g.abs();
    if reconstruction > quad.tolerance * scale {
        return Err(Error::Numeric {
            what: "Povzner reconstruction K = -H + G".into(),
            estimate: (reconstruction / scale).as_f64(),
            tolerance: quad.tolerance.as_f64(),
        });
    }
    Ok(PovznerSplit { k, minus_h, g, g_direct, reconstruction })
}

/// `(K, −H, G)` for `Ψ_{2n+α}`, `n ≥ 1`, `α ∈ (0, 2]`.
pub fn povzner_split<T: Real>(
    v: Vec3<T>,
    v_star: Vec3<T>,
    kernel: &AngularKernel<T>,
    n: u32,
    alpha: T,
    quad: &PovznerQuadrature<T>,
) -> Result<PovznerSplit<T>> {
    check_moment(n, alpha)?;
    povzner_split_with(v, v_star, kernel, Psi::moment(n, alpha), quad)
}

fn check_moment<T: Real>(n: u32, alpha: T) -> Result<()> {
    if n == 0 || !(alpha > T::zero() && alpha <= lit(2.0)) {
        return Err(Error::Domain(format!("need n >= 1 and alpha in (0, 2], got n = {n}, alpha = {alpha}")));
    }
    Ok(())
}

/// `W_δ(v) = ⟨v⟩^{2n+α} / (1 + δ ⟨v⟩^{2n+α})`.
pub fn weight_wdelta<T: Real>(v: Vec3<T>, delta: T, n: u32, alpha: T) -> Result<T> {
    if !(delta > T::zero()) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let q = (T::one() + norm2(v)).powf(Psi::<T>::moment(n, alpha).p);
    Ok(q / (T::one() + delta * q))
}

/// Sampling of random collision pairs: speeds log-uniform in
/// `[speed_min, speed_max]`, directions uniform on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PovznerSuiteConfig {
    pub n: u32,
    pub alpha: f64,
    /// Pairs for the identities and the sign of `−H`.
    pub samples: usize,
    /// Pairs in each of the two disjoint sets used to fit `G ≤ c |v|²|v_*|²`.
    pub fit_samples: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub delta: f64,
    pub seed: u64,
}

impl Default for PovznerSuiteConfig {
    fn default() -> Self {
        Self { n: 1, alpha: 0.5, samples: 10_000, fit_samples: 1000, speed_min: 0.1, speed_max: 10.0, delta: 1e-3, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PovznerSuiteReport<T = f64> {
    pub config: PovznerSuiteConfig,
    /// Largest relative momentum and energy defect of `post_collision`.
    pub momentum_error: T,
    pub energy_error: T,
    /// Largest `||v'|² − (Y + Z cos ϕ)|` over ϕ-sweeps, relative to `|v|² + |v_*|²`.
    pub yz_error: T,
    /// Largest `|K|` for the linear `Ψ(x) = 1 + x`.
    pub linear_k: T,
    pub max_minus_h: T,
    /// Largest reconstruction defect, relative to `1 + |K| + |H| + |G|`.
    pub reconstruction: T,
    /// `max G/(|v|²|v_*|²)` on the two disjoint fit sets.
    pub g_constants: [T; 2],
    /// `max W_δ(v')/(W_δ(v) + W_δ(v_*))`.
    pub wdelta_constant: T,
}

impl<T: Real> PovznerSuiteReport<T> {
    /// Relative spread `|c_1 − c_2| / max(c_1, c_2)` of the fitted `G` constants.
    pub fn g_spread(&self) -> T {
        let [a, b] = self.g_constants;
        (a - b).abs() / a.max(b)
    }
}

fn random_velocity<T: Real, R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Vec3<T> {
    let speed = (lo.ln() + (hi.ln() - lo.ln()) * rng.gen::<f64>()).exp();
    loop {
        let d: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if n > 1e-12 {
            return d.map(|c| lit::<T>(speed * c / n));
        }
    }
}

const CHUNK: usize = 256;

/// Runs `f` over `count` random pairs from stream `stream`, chunked so the
/// result does not depend on the worker count.
fn over_pairs<T: Real, A: Send, F>(cfg: &PovznerSuiteConfig, stream: u64, count: usize, f: F) -> Result<Vec<A>>
where
    F: Fn(&mut ChaCha8Rng, Vec3<T>, Vec3<T>) -> Result<A> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let out: Result<Vec<Vec<A>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream * 1_000_003 + c as u64);
            let m = CHUNK.min(count - c * CHUNK);
            (0..m)
                .map(|_| {
                    let v = random_velocity(&mut rng, cfg.speed_min, cfg.speed_max);
                    let w = random_velocity(&mut rng, cfg.speed_min, cfg.speed_max);
                    f(&mut rng, v, w)
                })
                .collect()
        })
        .collect();
    Ok(out?.into_iter().flatten().collect())
}

fn fold_max<T: Real>(xs: impl Iterator<Item = T>) -> T {
    xs.fold(T::neg_infinity(), |a, b| a.max(b))
}

/// Randomized checks of the collision identities, the sign of `−H`, the
/// `K = −H + G` reconstruction and the fitted constants.
pub fn povzner_suite<T: Real>(
    kernel: &AngularKernel<T>,
    cfg: &PovznerSuiteConfig,
    quad: &PovznerQuadrature<T>,
) -> Result<PovznerSuiteReport<T>> {
    check_moment(cfg.n, lit::<T>(cfg.alpha))?;
    if cfg.samples == 0 || cfg.fit_samples == 0 || !(cfg.speed_min > 0.0 && cfg.speed_max > cfg.speed_min) {
        return Err(Error::Domain("suite needs samples > 0 and 0 < speed_min < speed_max".into()));
    }
    let rule = ThetaRule::new(kernel, quad.theta_order)?;
    let psi = Psi::moment(cfg.n, lit::<T>(cfg.alpha));
    let linear = Psi { p: T::one() };
    let delta = lit::<T>(cfg.delta);

    // identities and −H on the main set
    let rows = over_pairs(cfg, 0, cfg.samples, |rng, v: Vec3<T>, w| {
        let frame = CollisionFrame::new(v, w)?;
        let theta = lit::<T>(rng.gen::<f64>() * std::f64::consts::PI);
        let phi = lit::<T>(rng.gen::<f64>() * std::f64::consts::TAU);
        let (vp, wp) = frame.post(theta, phi);
        let e = norm2(v) + norm2(w);
        let p = add(v, w);
        let mom = norm(sub(add(vp, wp), p)) / (norm(v) + norm(w));
        let en = (norm2(vp) + norm2(wp) - e).abs() / e;
        let yz = yz_decomposition(v, w, theta);
        let mut yz_err = T::zero();
        for j in 0..16 {
            let ph = T::two_pi() * T::from_usize_lossy(j) / lit(16.0);
            let (a, b) = frame.post(theta, ph);
            let c = ph.cos();
            yz_err = yz_err.max((norm2(a) - (yz.y + yz.z * c)).abs() / e);
            yz_err = yz_err.max((norm2(b) - (yz.y_reflected - yz.z * c)).abs() / e);
        }
        let mut mh = T::zero();
        for &(t, wt) in &rule.nodes {
            let h = t * lit(0.5);
            let (s2, c2) = (h.sin().powi(2), h.cos().powi(2));
            let (a, b) = (norm2(v), norm2(w));
            let gap1 = c2 * psi.increment(a, s2 * (b - a)) + s2 * psi.increment(b, c2 * (a - b));
            let gap2 = c2 * psi.increment(b, s2 * (a - b)) + s2 * psi.increment(a, c2 * (b - a));
            mh = mh + wt * (gap1 + gap2);
        }
        let wd = weight_wdelta(vp, delta, cfg.n, lit(cfg.alpha))?
            / (weight_wdelta(v, delta, cfg.n, lit(cfg.alpha))? + weight_wdelta(w, delta, cfg.n, lit(cfg.alpha))?);
        Ok([mom, en, yz_err, T::two_pi() * mh, wd])
    })?;
    let col = |k: usize| fold_max(rows.iter().map(|r| r[k]));

    // full split on two disjoint fit sets
    let mut g_constants = [T::zero(); 2];
    let mut reconstruction = T::zero();
    let mut linear_k = T::zero();
    for (s, gc) in g_constants.iter_mut().enumerate() {
        let fits = over_pairs(cfg, 1 + s as u64, cfg.fit_samples, |_, v: Vec3<T>, w| {
            let sp = split_with_rule(v, w, &rule, psi, quad)?;
            let lin = split_with_rule(v, w, &rule, linear, quad)?;
            let scale = T::one() + sp.k.abs() + sp.minus_h.abs() + sp.g.abs();
            Ok([sp.g_direct / (norm2(v) * norm2(w)), sp.reconstruction / scale, lin.k.abs()])
        })?;
        *gc = fold_max(fits.iter().map(|r| r[0]));
        reconstruction = reconstruction.max(fold_max(fits.iter().map(|r| r[1])));
        linear_k = linear_k.max(fold_max(fits.iter().map(|r| r[2])));
    }
    Ok(PovznerSuiteReport {
        config: *cfg,
        momentum_error: col(0),
        energy_error: col(1),
        yz_error: col(2),
        linear_k,
        max_minus_h: col(3),
        reconstruction,
        g_constants,
        wdelta_constant: col(4),
    })
}
