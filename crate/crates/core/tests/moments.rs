use std::f64::consts::PI;

use fourier_kinetic::charfun::{classify, mnorm_re, AnalyticCharFn, Finiteness, GridSpec, RadialCharFn};
use fourier_kinetic::interp::Interpolation;
use fourier_kinetic::moments::{laplacian_lift, levy_constant, moment_from_charfn, second_moment};
use fourier_kinetic::quad::{adaptive, Tolerance};

type A = AnalyticCharFn<f64>;

fn radial(f: &A) -> RadialCharFn<f64> {
    f.isotropized(GridSpec::default().radii(), Interpolation::Spline).unwrap()
}

/// `4π Γ(−1−α) cos(πα/2)` evaluated to 20 digits offline.
const LEVY_CLOSED_FORM: [(f64, f64); 10] = [
    (0.25, 45.525946505655835134),
    (0.5, 20.999479927629892992),
    (0.75, 13.284074041761807567),
    (1.0, 9.8696044010893586188),
    (1.25, 8.3810953255620719334),
    (1.5, 8.399791971051957197),
    (1.75, 11.662033350978084529),
    (1.9, 23.810929916721582802),
    (1.95, 44.633056963800047158),
    (1.99, 212.09261862985234788),
];

#[test]
fn levy_constant_matches_closed_form() {
    for (a, c) in LEVY_CLOSED_FORM {
        let v = levy_constant(a).unwrap();
        assert!((v.value - c).abs() < 1e-9 * c, "alpha {a}: {} vs {c}", v.value);
        assert!(v.abs_err < 1e-9 * c);
    }
}

#[test]
fn levy_constant_at_one_two_routes() {
    let direct = levy_constant(1.0f64).unwrap().value;
    // Gaussian route: ‖Re φ − 1‖_{M^1} / E|V| for the standard normal
    let m = mnorm_re(&A::gaussian(1.0), 1.0).unwrap().value;
    let via_gaussian = m / (2.0 * (2.0 / PI).sqrt());
    assert!((direct - PI * PI).abs() < 1e-6);
    assert!((via_gaussian - PI * PI).abs() < 1e-6);
}

#[test]
fn levy_constant_grows_towards_two() {
    let v: Vec<f64> = [1.9, 1.95, 1.99].iter().map(|&a| levy_constant(a).unwrap().value).collect();
    assert!(v[0] < v[1] && v[1] < v[2]);
    for a in [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75] {
        assert!(levy_constant(a).unwrap().value > 0.0);
    }
    assert!(levy_constant(2.0f64).is_err());
    assert!(levy_constant(0.0f64).is_err());
}

#[test]
fn moment_examples() {
    assert_eq!(moment_from_charfn(&A::PointMass, 1.0).unwrap().value, 0.0);
    let d = moment_from_charfn(&A::dirac_pair(2.0), 0.5).unwrap();
    assert!((d.value - 2f64.sqrt()).abs() < 1e-8);
    let g = moment_from_charfn(&A::gaussian(1.0), 1.0).unwrap();
    assert!((g.value - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-8);
    assert!(g.error_bound < 1e-6);
    let s = moment_from_charfn(&A::stable(1.5), 1.5).unwrap();
    assert_eq!(s.finiteness, Finiteness::Infinite);
}

#[test]
fn moment_identity_on_catalog() {
    // E|V|^α for the 3D normal with variance σ² per axis: (2σ²)^{α/2} Γ((3+α)/2)/Γ(3/2)
    let gaussian_moment = [(0.5, 1.2332684379936877872), (1.0, 1.5957691216057308208)];
    for (alpha, m) in gaussian_moment {
        let v = moment_from_charfn(&A::gaussian(1.0), alpha).unwrap().value;
        assert!((v - m).abs() <= 1e-5 * (1.0 + m));
    }
    for a in [0.5, 1.0, 2.0] {
        for alpha in [0.5, 1.0, 1.5] {
            let v = moment_from_charfn(&A::dirac_pair(a), alpha).unwrap().value;
            let m = a.powf(alpha);
            assert!((v - m).abs() <= 1e-5 * (1.0 + m));
        }
    }
}

#[test]
fn moment_scaling() {
    for lam in [0.5, 2.0] {
        for alpha in [0.5, 1.2] {
            let base = moment_from_charfn(&A::stable(1.5), alpha).unwrap().value;
            let scaled = A::Stable { index: 1.5, scale: lam };
            let v = moment_from_charfn(&scaled, alpha).unwrap().value;
            assert!((v - lam.powf(alpha) * base).abs() < 1e-6 * v, "lam {lam} alpha {alpha}");
        }
    }
}

#[test]
fn moment_of_asymmetric_law_is_flagged() {
    let m = moment_from_charfn(&A::shifted_dirac([0.0, 0.0, 1.5]), 0.5).unwrap();
    assert!(m.symmetrized);
    assert!((m.value - 1.5f64.sqrt()).abs() < 1e-8);
}

#[test]
fn second_moment_examples() {
    let g = second_moment(&radial(&A::gaussian(1.0)));
    assert!((g.value - 3.0).abs() < 1e-7, "{}", g.value);
    let d = second_moment(&radial(&A::dirac_pair(1.7)));
    assert!((d.value - 1.7 * 1.7).abs() < 1e-7);
    let s = second_moment(&radial(&A::stable(1.5)));
    assert_eq!(s.finiteness, Finiteness::Infinite);
}

#[test]
fn second_moment_oracle_by_finite_differences() {
    // φ''(0) from a symmetric difference of the closed form
    let h = 1e-4;
    let f = |r: f64| (-r * r / 2.0).exp();
    let fd = -3.0 * (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    assert!((fd - 3.0).abs() < 1e-6);
}

#[test]
fn lift_of_gaussian_matches_closed_form() {
    let l = laplacian_lift(&radial(&A::gaussian(1.0)), 1).unwrap();
    assert!((l.psi0 - 4.0).abs() < 1e-8);
    let mut worst: f64 = 0.0;
    for (i, &r) in l.profile.radii().iter().enumerate() {
        if r > 5.0 {
            break;
        }
        let exact = (4.0 - r * r) * (-r * r / 2.0).exp();
        worst = worst.max((l.psi0 * l.profile.value(i).re - exact).abs());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn lift_of_identity_is_identity() {
    let one = RadialCharFn::<f64>::identity(GridSpec::default().radii());
    let l = laplacian_lift(&one, 1).unwrap();
    assert_eq!(l.psi0, 1.0);
    assert!(l.profile.deficit_re().iter().all(|v| *v == 0.0));
}

#[test]
fn lift_of_stable_is_rejected() {
    assert!(laplacian_lift(&radial(&A::stable(1.5)), 1).is_err());
    assert!(A::stable(1.5).lift(1).is_err());
}

#[test]
fn lifted_gaussian_classifies_and_matches_weighted_moment() {
    let lifted = A::gaussian(1.0).lift(1).unwrap();
    let c = classify(&lifted, 0.5).unwrap();
    assert!(c.in_k_alpha && c.in_m_tilde_alpha);
    // α-moment of ⟨v⟩²G/4 by an independent radial quadrature
    let alpha = 0.5;
    let dens = |rho: f64| 4.0 * PI * rho * rho * (-rho * rho / 2.0).exp() / (2.0 * PI).powf(1.5);
    let oracle = adaptive(|rho: f64| rho.powf(alpha) * (1.0 + rho * rho) * dens(rho) / 4.0, 0.0, 40.0, Tolerance::abs(1e-14))
        .unwrap()
        .value;
    assert!((oracle - 1.3874269927428987606).abs() < 1e-10);
    let m = moment_from_charfn(&lifted, alpha).unwrap().value;
    assert!((m - oracle).abs() < 1e-4 * oracle, "{m} vs {oracle}");
    // same through the finite-difference lift of the sampled profile
    let fd = laplacian_lift(&radial(&A::gaussian(1.0)), 1).unwrap();
    let m_fd = moment_from_charfn(&fd.profile, alpha).unwrap().value;
    assert!((m_fd - oracle).abs() < 1e-4 * oracle, "{m_fd} vs {oracle}");
}
