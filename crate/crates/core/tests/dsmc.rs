use fourier_kinetic::charfun::AnalyticCharFn;
use fourier_kinetic::dsmc::{
    collide_angles, empirical_charfn, moment_propagation_experiment, nanbu_step, positive_stable, rng_for, sample_initial,
    simulate, DsmcConfig, ParticleEnsemble, ThetaSampler, THETA_KNOTS,
};
use fourier_kinetic::kernel::AngularKernel;
use fourier_kinetic::num::{add, norm, norm2, sub};
use fourier_kinetic::quad::{adaptive, Tolerance};
use fourier_kinetic::Error;
use proptest::prelude::*;
use rand::Rng;

type K = AngularKernel<f64>;
type F = AnalyticCharFn<f64>;

fn radii(max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| max * i as f64 / n as f64).collect()
}

fn sup_gap(ens: &ParticleEnsemble<f64>, rs: &[f64], exact: impl Fn(f64) -> f64) -> (f64, f64) {
    let e = empirical_charfn(ens, rs).unwrap();
    let gap = rs.iter().enumerate().map(|(i, &r)| (e.profile.deficit_re()[i] - exact(r)).abs()).fold(0.0, f64::max);
    (gap, e.band)
}

#[test]
fn gaussian_sampling_within_band() {
    let ens = sample_initial(&F::Gaussian { variance: 1.0 }, 100_000, 3).unwrap();
    let (gap, band) = sup_gap(&ens, &radii(5.0, 200), |r| -(-r * r / 2.0).exp_m1());
    assert!(gap <= 5.0 * band, "{gap}");
    assert!((ens.energy() - 3.0).abs() < 5.0 * 6f64.sqrt() / 100_000f64.sqrt());
}

#[test]
fn stable_sampling_within_band() {
    let ens = sample_initial(&F::Stable { index: 1.0, scale: 1.0 }, 100_000, 4).unwrap();
    let (gap, band) = sup_gap(&ens, &radii(5.0, 200), |r| -(-r).exp_m1());
    assert!(gap <= 5.0 * band, "{gap}");
    // scale enters as |scale ξ|^index
    let ens = sample_initial(&F::Stable { index: 1.5, scale: 2.0 }, 100_000, 5).unwrap();
    let (gap, band) = sup_gap(&ens, &radii(3.0, 120), |r| -(-(2.0 * r).powf(1.5)).exp_m1());
    assert!(gap <= 5.0 * band, "{gap}");
}

#[test]
fn positive_stable_laplace_transform() {
    let mut rng = rng_for(9, 0);
    let n = 200_000;
    for a in [0.25, 0.5, 0.75] {
        let mut rng2 = rng.clone();
        let mean: f64 = (0..n).map(|_| (-positive_stable(a, &mut rng2)).exp()).sum::<f64>() / n as f64;
        rng = rng2;
        assert!((mean - (-1.0f64).exp()).abs() < 5.0 * 0.5 / (n as f64).sqrt(), "a = {a}: {mean}");
    }
}

#[test]
fn dirac_pair_and_mixture_sampling() {
    let ens = sample_initial(&F::DiracPair { radius: 2.0, axis: [0.0, 0.0, 1.0] }, 10_000, 1).unwrap();
    assert!(ens.velocities().iter().all(|v| (norm(*v) - 2.0).abs() < 1e-15 && v[0] == 0.0 && v[1] == 0.0));
    assert!(norm(ens.momentum()) <= 3.0 * 2.0 / 100.0);
    // all speeds equal a, so the profile is sin(ra)/(ra) exactly
    let (gap, _) = sup_gap(&ens, &radii(10.0, 50), |r| if r == 0.0 { 0.0 } else { 1.0 - (2.0 * r).sin() / (2.0 * r) });
    assert!(gap < 1e-12);

    let mix = F::mixture(vec![(0.5, F::Gaussian { variance: 1.0 }), (0.5, F::DiracPair { radius: 2.0, axis: [1.0, 0.0, 0.0] })]);
    let ens = sample_initial(&mix, 100_000, 2).unwrap();
    assert!((ens.energy() - 3.5).abs() < 0.05, "{}", ens.energy());
    assert!(sample_initial(&F::Gaussian { variance: -1.0 }, 10, 0).is_err());
    assert!(sample_initial(&F::PointMass, 1, 0).is_err());
}

#[test]
fn two_particles_same_speed_give_sinc() {
    let u = 1.7;
    let ens = ParticleEnsemble::from_velocities(vec![[u, 0.0, 0.0], [0.0, -u, 0.0]], 0, "two").unwrap();
    let (gap, band) = sup_gap(&ens, &radii(8.0, 64), |r| if r == 0.0 { 0.0 } else { 1.0 - (r * u).sin() / (r * u) });
    assert!(gap < 1e-15);
    assert!((band - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn seeds_are_deterministic() {
    let k = K::constant(1.0);
    let cfg = DsmcConfig { particles: 5_000, horizon: 0.1, ..Default::default() };
    let f = F::Gaussian { variance: 1.0 };
    let a = simulate(&f, &k, &cfg, &[0.1], |_, _| Ok(())).unwrap();
    let b = simulate(&f, &k, &cfg, &[0.1], |_, _| Ok(())).unwrap();
    assert_eq!(a.velocities(), b.velocities());
    let c = simulate(&f, &k, &DsmcConfig { seed: cfg.seed + 1, ..cfg }, &[0.1], |_, _| Ok(())).unwrap();
    assert_ne!(a.velocities(), c.velocities());
}

#[test]
fn step_guards_and_zero_step() {
    let s = ThetaSampler::new(&K::constant(1.0), THETA_KNOTS).unwrap();
    let mut ens = sample_initial(&F::Gaussian { variance: 1.0 }, 1000, 0).unwrap();
    let before = ens.velocities().to_vec();
    let mut rng = rng_for(0, 1);
    assert_eq!(nanbu_step(&mut ens, &s, 0.0, &mut rng).unwrap(), 0);
    assert_eq!(ens.velocities(), &before[..]);
    assert!(matches!(nanbu_step(&mut ens, &s, 0.6 / s.gamma2(), &mut rng), Err(Error::Domain(_))));
    assert!(nanbu_step(&mut ens, &s, 0.5 / s.gamma2(), &mut rng).is_ok());
    assert!(matches!(ThetaSampler::new(&K::power_law(0.25, 1.0), THETA_KNOTS), Err(Error::NonCutoff(_))));
}

#[test]
fn energy_is_conserved_per_step_and_over_runs() {
    let k = K::power_law(0.25, 1.0).with_cutoff(50.0);
    let s = ThetaSampler::new(&k, THETA_KNOTS).unwrap();
    let mut ens = sample_initial(&F::Gaussian { variance: 2.0 }, 10_000, 8).unwrap();
    let mut rng = rng_for(8, 1);
    let dt = 0.25 / s.gamma2();
    let mut collided = 0;
    for _ in 0..1000 {
        let e = ens.energy();
        collided += nanbu_step(&mut ens, &s, dt, &mut rng).unwrap();
        assert!((ens.energy() - e).abs() <= 1e-10 * e);
    }
    assert!(collided > 0);
    assert!(ens.energy_drift() <= 1e-9, "{}", ens.energy_drift());
    assert!(ens.momentum_drift() <= 1e-9);
    assert_eq!(ens.steps(), 1000);
}

#[test]
fn collision_rate_matches_gamma2() {
    // each step collides a pair with probability 1 − e^{−γ Δt}
    let s = ThetaSampler::new(&K::constant(1.0), THETA_KNOTS).unwrap();
    let mut ens = sample_initial(&F::Gaussian { variance: 1.0 }, 20_000, 6).unwrap();
    let mut rng = rng_for(6, 1);
    let dt = 0.2 / s.gamma2();
    let steps = 200;
    let total: usize = (0..steps).map(|_| nanbu_step(&mut ens, &s, dt, &mut rng).unwrap()).sum();
    let p = -(-0.2f64).exp_m1();
    let expected = p * 10_000.0 * steps as f64;
    assert!((total as f64 - expected).abs() < 5.0 * (expected * (1.0 - p)).sqrt());
}

#[test]
fn theta_sampler_matches_kernel_moments() {
    let k = K::power_law(0.25, 1.0).with_cutoff(30.0);
    let s = ThetaSampler::new(&k, THETA_KNOTS).unwrap();
    let b = |t: f64| k.eval_b(t).unwrap() * t.sin();
    let bp = k.breakpoints();
    let mass = |f: &dyn Fn(f64) -> f64| {
        let mut pts = vec![0.0];
        pts.extend(bp.iter().copied());
        pts.push(std::f64::consts::FRAC_PI_2);
        pts.windows(2).map(|w| adaptive(|t| f(t), w[0], w[1], Tolerance::default()).unwrap().value).sum::<f64>()
    };
    let total = mass(&b);
    assert!((s.gamma2() - 2.0 * std::f64::consts::PI * total).abs() < 1e-9 * s.gamma2());
    let mean_cos = mass(&|t| b(t) * t.cos()) / total;
    let mut rng = rng_for(1, 3);
    let n = 400_000;
    let emp: f64 = (0..n).map(|_| s.sample(&mut rng).cos()).sum::<f64>() / n as f64;
    assert!((emp - mean_cos).abs() < 5.0 * 0.5 / (n as f64).sqrt(), "{emp} vs {mean_cos}");
}

#[test]
fn maxwellian_stays_maxwellian() {
    let k = K::constant(1.0);
    let cfg = DsmcConfig { particles: 100_000, dt: 0.01, horizon: 1.0, ..Default::default() };
    let rs = radii(5.0, 100);
    let mut gaps = vec![];
    simulate(&F::Gaussian { variance: 1.0 }, &k, &cfg, &[1.0], |_, e| {
        gaps.push(sup_gap(e, &rs, |r| -(-r * r / 2.0).exp_m1()));
        Ok(())
    })
    .unwrap();
    for (gap, band) in gaps {
        assert!(gap <= 5.0 * band, "{gap}");
    }
}

#[test]
fn moment_propagation_examples() {
    let k = K::constant(1.0);
    let cfg = DsmcConfig { particles: 20_000, dt: 0.01, horizon: 1.0, ..Default::default() };
    let r = moment_propagation_experiment(&F::Gaussian { variance: 1.0 }, &k, 1, 1.0, 10, &cfg).unwrap();
    assert_eq!(r.rows.len(), 11);
    assert!(r.fitted_c.is_finite() && r.fitted_c >= 1.0);
    assert!(r.rows.iter().all(|row| row.moment <= row.bound * (1.0 + 1e-12)));
    // E|v|³ = 8√(2/π) for a standard 3D Gaussian
    let m3 = 8.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((r.rows[0].moment - m3).abs() < 0.1 * m3);
    let e0 = r.rows[0].energy;
    assert!(r.rows.iter().all(|row| (row.energy - e0).abs() <= 1e-10 * e0));

    let r = moment_propagation_experiment(&F::DiracPair { radius: 1.0, axis: [0.0, 1.0, 0.0] }, &k, 1, 1.0, 4, &cfg).unwrap();
    assert!((r.rows[0].weighted - 2f64.powf(1.5)).abs() < 1e-11);
    assert!((r.rows[0].moment - 1.0).abs() < 1e-11);
    // the two-point law relaxes towards a Gaussian with the same energy, whose third moment is larger
    assert!(r.rows.last().unwrap().moment > 1.05);
    assert!(r.fitted_c >= 1.0 && r.fitted_c.is_finite());

    assert!(matches!(
        moment_propagation_experiment(&F::Stable { index: 1.0, scale: 1.0 }, &k, 1, 1.0, 4, &cfg),
        Err(Error::Domain(_))
    ));
    assert!(moment_propagation_experiment(&F::Gaussian { variance: 1.0 }, &k, 0, 1.0, 4, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn collisions_conserve(v in prop::array::uniform3(-50.0f64..50.0), w in prop::array::uniform3(-50.0f64..50.0),
                           theta in 0.0f64..std::f64::consts::FRAC_PI_2, phi in 0.0f64..std::f64::consts::TAU) {
        let (a, b) = collide_angles(v, w, theta, phi);
        let e = norm2(v) + norm2(w);
        prop_assert!(norm(sub(add(a, b), add(v, w))) <= 1e-12 * (1.0 + e.sqrt()));
        prop_assert!((norm2(a) + norm2(b) - e).abs() <= 1e-12 * e.max(1.0));
        // relative speed is preserved and the deflection is θ
        let g = norm(sub(v, w));
        prop_assume!(g > 1e-6);
        prop_assert!((norm(sub(a, b)) - g).abs() <= 1e-12 * (1.0 + g));
        let c = fourier_kinetic::num::dot(sub(a, b), sub(v, w)) / (g * g);
        prop_assert!((c - theta.cos()).abs() <= 1e-10);
    }

    #[test]
    fn sampled_theta_in_range(u in 0.0f64..1.0) {
        let s = ThetaSampler::new(&K::constant(2.0), 64).unwrap();
        let t = s.invert(u);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&t));
        let mut rng = rng_for(0, 0);
        let _ = rng.gen::<u8>();
    }
}
