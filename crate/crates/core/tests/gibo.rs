use gibo_core::acquisition::{gi_value, maximize_gi, GiContext, GiOptions};
use gibo_core::gp::{posterior_jacobian, Dataset, FitOptions, GpModel, KernelParams};
use gibo_core::optimizer::{normalize_gradient, run_gibo, GiboConfig, HyperparameterPolicy};
use gibo_core::oracle::FnOracle;
use gibo_core::rng::seeded;
use gibo_core::synthetic::{generate_objective, SyntheticOracle};
use rand::Rng;

fn fixed_config(params: KernelParams, m: usize, window: usize) -> GiboConfig {
    GiboConfig {
        stepsize: 0.25,
        samples_per_step: m,
        window,
        bound: 0.2,
        normalize_gradient: true,
        hyperparameters: HyperparameterPolicy::Fixed { params },
        acquisition: GiOptions::default(),
        fit: FitOptions::default(),
    }
}

#[test]
fn gi_ignores_targets_and_equals_trace_reduction() {
    let mut rng = seeded(17);
    for d in [1, 2, 4] {
        let params = KernelParams::isotropic(d, 0.3, 1.5, 0.01).unwrap();
        let anchor: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
        let pts: Vec<Vec<f64>> = (0..6).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let base = Dataset::from_parts(pts.clone(), vec![0.0; 6]).unwrap();
        let probe: Vec<f64> = anchor.iter().map(|a| a + 0.05).collect();

        let values: Vec<f64> = (0..20)
            .map(|_| {
                let ds = base.with_targets((0..6).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
                gi_value(&probe, &GiContext::new(&anchor, ds.points(), &params, 0.2).unwrap()).unwrap()
            })
            .collect();
        let spread = values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-12, "spread {spread}");

        let ctx = GiContext::new(&anchor, &pts, &params, 0.2).unwrap();
        let before = posterior_jacobian(&anchor, &base, &params).unwrap().trace();
        let offsets: Vec<f64> = (0..50)
            .map(|_| {
                let cand: Vec<f64> = anchor.iter().map(|a| a + rng.random_range(-0.2..0.2)).collect();
                let mut with = base.clone();
                with.push(cand.clone(), 0.0).unwrap();
                let after = posterior_jacobian(&anchor, &with, &params).unwrap().trace();
                gi_value(&cand, &ctx).unwrap() - (before - after)
            })
            .collect();
        for o in &offsets {
            assert!((o - offsets[0]).abs() < 1e-8);
        }
        assert!((offsets[0] - ctx.window_value()).abs() < 1e-8);
    }
}

#[test]
fn maximizer_beats_random_candidates() {
    let mut rng = seeded(2);
    let params = KernelParams::isotropic(3, 0.25, 1.0, 0.01).unwrap();
    let anchor = vec![0.5; 3];
    let pts = vec![anchor.clone(), vec![0.55, 0.5, 0.5]];
    let ctx = GiContext::new(&anchor, &pts, &params, 0.2).unwrap();
    let best = maximize_gi(&ctx, &GiOptions::default(), &mut seeded(0)).unwrap();
    let v = ctx.gi_value(&best).unwrap();
    for _ in 0..500 {
        let c: Vec<f64> = anchor.iter().map(|a| a + rng.random_range(-0.2..0.2)).collect();
        assert!(ctx.gi_value(&c).unwrap() <= v + 1e-9);
    }
}

#[test]
fn normalized_steps_have_length_eta() {
    for seed in 0..4 {
        let obj = generate_objective(4, seed).unwrap();
        let cfg = fixed_config(obj.params.clone(), 4, 20);
        let mut oracle = SyntheticOracle { objective: &obj, rng: seeded(100 + seed) };
        let h = run_gibo(&mut oracle, &obj.start(), &cfg, 100, &mut seeded(seed)).unwrap();
        assert_eq!(h.steps.len(), 20);
        for s in h.steps.iter().filter(|s| !s.degenerate) {
            assert!((s.mahalanobis_length().unwrap() - 0.25).abs() < 1e-10);
            let euclid: f64 = s.from.iter().zip(&s.to).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!((euclid - 0.25 * obj.lengthscale()).abs() < 1e-10);
        }
    }
}

#[test]
fn step_uses_only_the_local_window() {
    let params = KernelParams::isotropic(2, 0.3, 1.0, 0.01).unwrap();
    let cfg = fixed_config(params.clone(), 2, 3);
    let mut oracle = FnOracle(|x: &[f64]| -(x[0] - 0.9).powi(2) - 2.0 * (x[1] - 0.1).powi(2));
    let h = run_gibo(&mut oracle, &[0.5, 0.5], &cfg, 30, &mut seeded(4)).unwrap();
    let last = h.steps.last().unwrap();
    let tail = &h.records[h.len() - 3..];
    let window = Dataset::from_parts(tail.iter().map(|r| r.point.clone()).collect(), tail.iter().map(|r| r.y).collect())
        .unwrap();
    let g = GpModel::fit(&window, &params).unwrap().mean_gradient(&last.from).unwrap();
    let dir = normalize_gradient(g.as_slice(), &params.lengthscales).unwrap();
    for i in 0..2 {
        assert!((last.from[i] + 0.25 * dir[i] - last.to[i]).abs() < 1e-12);
    }
}

#[test]
fn gradient_estimate_points_uphill() {
    let mut good = 0;
    for seed in 0..50u64 {
        let obj = generate_objective(2, 1000 + seed).unwrap();
        let cfg = fixed_config(obj.params.clone(), 2, 10);
        let mut oracle = FnOracle(|x: &[f64]| obj.value(x));
        let h = run_gibo(&mut oracle, &obj.start(), &cfg, 3, &mut seeded(seed)).unwrap();
        let s = &h.steps[0];
        let est: Vec<f64> = s.from.iter().zip(&s.to).map(|(a, b)| b - a).collect();
        let truth = obj.gradient(&s.from);
        let dot: f64 = est.iter().zip(truth.iter()).map(|(a, b)| a * b).sum();
        let cos = dot / (est.iter().map(|v| v * v).sum::<f64>().sqrt() * truth.iter().map(|v| v * v).sum::<f64>().sqrt());
        if cos > 30f64.to_radians().cos() {
            good += 1;
        }
    }
    assert!(good >= 40, "{good}/50 within 30 degrees");
}
