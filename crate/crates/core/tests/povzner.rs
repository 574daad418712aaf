use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use fourier_kinetic::kernel::AngularKernel;
use fourier_kinetic::num::{add, norm, norm2, scale, sub};
use fourier_kinetic::povzner::{
    post_collision, povzner_split, povzner_split_with, povzner_suite, weight_wdelta, yz_decomposition, CollisionFrame, Psi,
    PovznerQuadrature, PovznerSuiteConfig,
};
use fourier_kinetic::Error;
use proptest::prelude::*;

type K = AngularKernel<f64>;

fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    norm(sub(a, b)) <= tol
}

#[test]
fn post_collision_examples() {
    let (v, w) = ([1.0, 2.0, -0.5], [0.3, -1.0, 4.0]);
    let g = sub(v, w);
    let k = scale(1.0 / norm(g), g);
    let (a, b) = post_collision(v, w, k).unwrap();
    assert!(close(a, v, 1e-14) && close(b, w, 1e-14));
    let (a, b) = post_collision(v, w, scale(-1.0, k)).unwrap();
    assert!(close(a, w, 1e-14) && close(b, v, 1e-14));

    let (a, b) = post_collision([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
    assert!(close(a, [0.5, 0.5, SQRT_2 / 2.0], 1e-15));
    assert!(close(b, [0.5, 0.5, -SQRT_2 / 2.0], 1e-15));

    assert!(matches!(post_collision(v, w, [0.0, 0.0, 1.1]), Err(Error::Domain(_))));
}

#[test]
fn yz_examples() {
    let (v, w) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
    let yz = yz_decomposition(v, w, FRAC_PI_2);
    assert!((yz.y - 1.0).abs() < 1e-15 && (yz.y_reflected - 1.0).abs() < 1e-15 && (yz.z - 1.0).abs() < 1e-15);
    let f = CollisionFrame::new(v, w).unwrap();
    for j in 0..64 {
        let phi = 2.0 * PI * j as f64 / 64.0;
        let (a, b) = f.post(FRAC_PI_2, phi);
        assert!((norm2(a) - (1.0 + phi.cos())).abs() < 1e-14);
        assert!((norm2(b) - (1.0 - phi.cos())).abs() < 1e-14);
    }
    let z = yz_decomposition([0.3, 2.0, 1.0], w, 0.0);
    assert_eq!(z.z, 0.0);
    assert!((z.y - 5.09).abs() < 1e-14);
}

#[test]
fn degenerate_pairs_are_phi_independent() {
    let (v, w) = ([1.0, 1.0, 0.0], [-2.0, -2.0, 0.0]);
    let f = CollisionFrame::new(v, w).unwrap();
    assert!(f.degenerate);
    let e: Vec<f64> = (0..8).map(|j| norm2(f.post(0.7, j as f64).0)).collect();
    assert!(e.iter().all(|x| (x - e[0]).abs() < 1e-13));
}

#[test]
fn linear_psi_has_no_flux() {
    let k = K::constant(1.0);
    let s = povzner_split_with([1.0, -2.0, 0.5], [3.0, 0.1, -1.0], &k, Psi { p: 1.0f64 }, &PovznerQuadrature::default()).unwrap();
    assert!(s.k.abs() < 1e-12 && s.minus_h.abs() < 1e-12 && s.g_direct == 0.0);
}

#[test]
fn split_examples() {
    let q = PovznerQuadrature::default();
    for k in [K::constant(1.0), K::power_law(0.25, 1.0).with_cutoff(20.0)] {
        let s = povzner_split([1.0, 0.0, 0.0], [0.0, 2.0, 1.0], &k, 1, 0.5, &q).unwrap();
        assert!(s.minus_h < 0.0);
        assert!(s.g > 0.0);
        assert!(s.reconstruction <= 1e-10 * (1.0 + s.k.abs()));
    }
    let k = K::constant(1.0);
    assert!(matches!(povzner_split([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], &k, 0, 0.5, &q), Err(Error::Domain(_))));
    let nc = K::power_law(0.25, 1.0);
    assert!(matches!(povzner_split([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], &nc, 1, 0.5, &q), Err(Error::NonCutoff(_))));
}

/// `n = 1`, `α = 2`: `Ψ(x) = (1 + x)²`. The ϕ-integral is exact
/// (`∫_0^π cos²ϕ dϕ = π/2`), so
/// `K = 2π ∫ b sin θ {(1 + Y)² + (1 + Y')² − (1 + |v|²)² − (1 + |v_*|²)² + Z²} dθ`,
/// and with `x = sin²(θ/2)` the braces reduce to `−2x(1 − x)(|v|² − |v_*|²)² + Z²`.
#[test]
fn quadratic_psi_closed_form() {
    let (v, w): ([f64; 3], [f64; 3]) = ([1.0, 0.5, 0.0], [0.2, -1.0, 2.0]);
    let (a, b) = (norm2(v), norm2(w));
    let c2 = norm2(fourier_kinetic::num::cross(v, w));
    // ∫_0^{π/2} 2x(1 − x) sin θ dθ = 1/3 and ∫_0^{π/2} sin³θ dθ = 2/3
    let y_part = -(a - b).powi(2) / 3.0;
    let expected = 2.0 * PI * (y_part + 2.0 * c2 / 3.0);
    let s = povzner_split(v, w, &K::constant(1.0), 1, 2.0, &PovznerQuadrature::default()).unwrap();
    assert!((s.k - expected).abs() < 1e-11 * expected.abs().max(1.0), "{} vs {expected}", s.k);
    assert!((s.minus_h - 2.0 * PI * y_part).abs() < 1e-11);
    assert!((s.g - 4.0 * PI * c2 / 3.0).abs() < 1e-11);
}

#[test]
fn wdelta_examples() {
    assert!((weight_wdelta([0.0f64; 3], 0.25, 1, 1.0).unwrap() - 0.8).abs() < 1e-15);
    // the relative gap to ⟨v⟩^{2n+α} is δq/(1 + δq) with q = ⟨v⟩^{2n+α}
    for s in [0.0, 0.5, 3.0, 10.0] {
        let v = [s, 0.0, 0.0];
        let q = (1.0f64 + s * s).powf(1.5);
        let w = weight_wdelta(v, 1e-8, 1, 1.0).unwrap();
        let gap = (q - w) / q;
        assert!((gap - 1e-8 * q / (1.0 + 1e-8 * q)).abs() < 1e-15);
        if s <= 3.0 {
            assert!(gap <= 1e-6);
        }
    }
    assert!(weight_wdelta([1.0; 3], 0.0, 1, 1.0).is_err());
}

#[test]
fn suite_meets_bounds() {
    let cfg = PovznerSuiteConfig { samples: 2000, fit_samples: 200, ..Default::default() };
    let r = povzner_suite(&K::constant(1.0), &cfg, &PovznerQuadrature::default()).unwrap();
    assert!(r.momentum_error < 1e-14 && r.energy_error < 1e-14 && r.yz_error < 1e-13, "{r:?}");
    assert!(r.max_minus_h <= 1e-12);
    assert!(r.linear_k <= 1e-12, "{}", r.linear_k);
    assert!(r.reconstruction <= 1e-10);
    assert!(r.g_constants.iter().all(|c| c.is_finite() && *c > 0.0));
    // |v'| ≤ |v| + |v_*| gives W_δ(v') ≤ 2^{2n+α}(W_δ(v) + W_δ(v_*))
    assert!(r.wdelta_constant <= 2f64.powf(2.5));
    let again = povzner_suite(&K::constant(1.0), &cfg, &PovznerQuadrature::default()).unwrap();
    assert_eq!(r, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collision_identities(v in prop::array::uniform3(-10.0f64..10.0), w in prop::array::uniform3(-10.0f64..10.0),
                            theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI)) {
        prop_assume!(norm(sub(v, w)) > 1e-6);
        let f = CollisionFrame::new(v, w).unwrap();
        let sigma = f.sigma(theta, phi);
        prop_assert!((norm(sigma) - 1.0).abs() < 1e-14);
        let (a, b) = post_collision(v, w, sigma).unwrap();
        let e = norm2(v) + norm2(w);
        prop_assert!(norm(sub(add(a, b), add(v, w))) <= 1e-12 * (1.0 + e.sqrt()));
        prop_assert!((norm2(a) + norm2(b) - e).abs() <= 1e-12 * e.max(1.0));
        let yz = yz_decomposition(v, w, theta);
        prop_assert!((norm2(a) - yz.y - yz.z * phi.cos()).abs() <= 1e-12 * e.max(1.0));
        prop_assert!((norm2(b) - yz.y_reflected + yz.z * phi.cos()).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn minus_h_is_nonpositive(v in prop::array::uniform3(-5.0f64..5.0), w in prop::array::uniform3(-5.0f64..5.0),
                              n in 1u32..4, alpha in 0.05f64..2.0) {
        prop_assume!(norm(sub(v, w)) > 1e-6);
        let s = povzner_split(v, w, &K::constant(1.0), n, alpha, &PovznerQuadrature::default()).unwrap();
        prop_assert!(s.minus_h <= 1e-12 * (1.0 + s.minus_h.abs()));
        prop_assert!(s.g_direct >= 0.0);
    }
}
