use gibo_core::baselines::{expected_improvement, run_ars, ArsConfig};
use gibo_core::oracle::FnOracle;
use gibo_core::rng::seeded;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn expected_improvement_matches_monte_carlo() {
    let mut rng = seeded(6);
    for (mean, std, best, xi) in [(0.0, 1.0, 0.0, 0.0), (0.3, 0.5, 0.8, 0.01), (1.2, 0.2, 0.9, 0.05)] {
        let n = 400_000;
        let mc: f64 = (0..n)
            .map(|_| {
                let f = mean + std * rng.sample::<f64, _>(StandardNormal);
                (f - best - xi).max(0.0)
            })
            .sum::<f64>()
            / n as f64;
        let ei = expected_improvement(mean, std, best, xi);
        assert!((ei - mc).abs() < 4.0 * std / (n as f64).sqrt() + 1e-4, "{ei} vs {mc}");
    }
    assert_eq!(expected_improvement(2.0, 0.0, 1.0, 0.0), 1.0);
    assert_eq!(expected_improvement(0.5, 0.0, 1.0, 0.0), 0.0);
}

#[test]
fn ars_moves_uphill_on_a_noisy_linear_objective() {
    let cfg = ArsConfig {
        stepsize: 0.02,
        perturbation: 0.05,
        directions: 4,
        elite: 0,
        state_normalization: false,
    };
    let c = [1.0, -2.0, 0.5];
    let mut uphill = 0;
    for seed in 0..200u64 {
        let mut noise = seeded(1000 + seed);
        let mut oracle = FnOracle(|x: &[f64]| {
            x.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() + 0.01 * noise.sample::<f64, _>(StandardNormal)
        });
        let h = run_ars(&mut oracle, &[0.0; 3], 8, &cfg, &mut seeded(seed)).unwrap();
        let step = &h.steps[0];
        let gain: f64 = step.to.iter().zip(&step.from).zip(&c).map(|((t, f), ci)| (t - f) * ci).sum();
        if gain > 0.0 {
            uphill += 1;
        }
    }
    // sign test: under a direction-blind update, uphill ~ Bin(200, 1/2)
    assert!(uphill > 150, "{uphill}/200 updates uphill");
}

#[test]
fn ars_respects_budget_and_never_overspends() {
    let mut rng = seeded(0);
    for _ in 0..50 {
        let dirs = rng.random_range(1..6);
        let cfg = ArsConfig {
            stepsize: 0.02,
            perturbation: 0.03,
            directions: dirs,
            elite: rng.random_range(0..=dirs),
            state_normalization: false,
        };
        let budget = rng.random_range(2 * dirs..200);
        let mut calls = 0;
        let mut oracle = FnOracle(|x: &[f64]| {
            calls += 1;
            -x.iter().map(|v| v * v).sum::<f64>()
        });
        let h = run_ars(&mut oracle, &[0.3, 0.1], budget, &cfg, &mut seeded(1)).unwrap();
        let per = 2 * dirs;
        assert_eq!(h.len(), budget / per * per);
        assert_eq!(h.steps.len(), budget / per);
        assert_eq!(calls, h.len());
    }
}
