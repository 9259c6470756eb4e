use gibo_core::lqr::{
    dare_residual, is_stabilizing, paper_instance, relative_error, solve_dare, solve_dlyap, spectral_radius,
    transform_reward, LqrInstance, LqrOracle, PolicyGain, RolloutConfig,
};
use gibo_core::oracle::Oracle;
use gibo_core::rng::seeded;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn instance_constants() {
    let inst = paper_instance();
    assert!((spectral_radius(&inst.a) - 1.024).abs() < 1e-3);
    assert!(dare_residual(&inst.a, &inst.b, &inst.q, &inst.r, &inst.p) < 1e-8);
    let k = inst.optimal_gain();
    assert!(relative_error(&k, &inst) < 1e-10);
    assert!(is_stabilizing(&k.flatten(), &inst));
    assert!(!is_stabilizing(&[0.0; 9], &inst));
    assert_eq!(relative_error(&PolicyGain(DMatrix::zeros(3, 3)), &inst), f64::INFINITY);
}

#[test]
fn scalar_riccati_matches_value_iteration() {
    let m = |v: f64| DMatrix::from_element(1, 1, v);
    let (p, k) = solve_dare(&m(1.1), &m(1.0), &m(1.0), &m(1.0)).unwrap();
    let mut pr = 1.0f64;
    for _ in 0..100_000 {
        pr = 1.1 * pr * 1.1 - (1.1 * pr) * (1.1 * pr) / (1.0 + pr) + 1.0;
    }
    assert!((p[(0, 0)] - pr).abs() < 1e-10 * pr);
    assert!((k[(0, 0)] + 1.1 * pr / (1.0 + pr)).abs() < 1e-10);
}

#[test]
fn lyapunov_matches_truncated_series() {
    let mut rng = seeded(1);
    let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-0.4..0.4));
    assert!(spectral_radius(&a) < 0.9);
    let w = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]);
    let s = solve_dlyap(&a, &w).unwrap();
    let mut series = DMatrix::zeros(3, 3);
    let mut ak = DMatrix::identity(3, 3);
    for _ in 0..2000 {
        series += &ak * &w * ak.transpose();
        ak = &a * ak;
    }
    assert!((s - series).abs().max() < 1e-10);
    assert!(solve_dlyap(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2)).is_err());
}

/// Average-cost gap `J(K) - J(K*)` estimated with common random numbers.
fn mc_gap(inst: &LqrInstance, k: &DMatrix<f64>, steps: usize, seed: u64) -> f64 {
    let ks = inst.optimal_gain().0;
    let mut rng = seeded(seed);
    let (mut x, mut xs) = (DVector::zeros(3), DVector::zeros(3));
    let stage = |x: &DVector<f64>, g: &DMatrix<f64>| {
        let u = g * x;
        (x.transpose() * &inst.q * x)[(0, 0)] + (u.transpose() * &inst.r * &u)[(0, 0)]
    };
    let mut gap = 0.0;
    let burn = 10_000;
    for t in 0..steps + burn {
        if t >= burn {
            gap += stage(&x, k) - stage(&xs, &ks);
        }
        let w = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
        x = (&inst.a + &inst.b * k) * x + &w;
        xs = (&inst.a + &inst.b * &ks) * xs + w;
    }
    gap / steps as f64
}

#[test]
fn relative_error_agrees_with_monte_carlo_cost_gap() {
    let inst = paper_instance();
    let mut rng = seeded(21);
    for (trial, damping) in [0.05, 0.2, 0.5].into_iter().enumerate() {
        let pert = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-0.02..0.02));
        let k = &inst.optimal_gain().0 - DMatrix::identity(3, 3) * damping + pert;
        assert!(is_stabilizing(PolicyGain(k.clone()).flatten().as_slice(), &inst));
        let analytic = relative_error(&PolicyGain(k.clone()), &inst);
        let mc = mc_gap(&inst, &k, 1_000_000, 100 + trial as u64) / inst.j_star;
        assert!((mc - analytic).abs() < 0.05 * analytic, "trial {trial}: mc {mc} vs {analytic}");
    }
}

#[test]
fn noiseless_rollout_by_hand() {
    let base = paper_instance();
    let inst = LqrInstance::new(
        base.a.clone(),
        base.b.clone(),
        base.q.clone(),
        base.r.clone(),
        DMatrix::zeros(3, 3),
    )
    .unwrap();
    let gain = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.5, -0.2, -0.9]));
    let cfg = RolloutConfig {
        horizon: 3,
        trajectories: 2,
        initial_state: Some(vec![1.0, -2.0, 0.5]),
        state_normalization: false,
    };
    let mut x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let mut sum = 0.0;
    for _ in 0..3 {
        let u: DVector<f64> = &gain * &x;
        let c = 1e-3 * x.norm_squared() + u.norm_squared();
        sum += -(1.0 + c).ln();
        x = &inst.a * &x + u;
    }
    let mut oracle = LqrOracle::new(&inst, cfg, seeded(0)).unwrap();
    let y = oracle.evaluate(&PolicyGain(gain).flatten()).unwrap();
    assert!((y - sum / 3.0).abs() < 1e-14);
    assert_eq!(oracle.timesteps(), 6);
    assert_eq!(oracle.cost_per_call(), 6);
}

#[test]
fn diverging_rollout_stays_finite_and_is_penalized() {
    let inst = paper_instance();
    let mut o = LqrOracle::new(&inst, RolloutConfig::default(), seeded(3)).unwrap();
    let wild = o.evaluate(&[8.0, 0.0, 0.0, 0.0, 8.0, 0.0, 0.0, 0.0, 8.0]).unwrap();
    let good = o.evaluate(&inst.optimal_gain().flatten()).unwrap();
    assert!(wild.is_finite() && wild < good);
    assert!(wild < transform_reward(1e12));
}
