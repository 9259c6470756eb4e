//! Sequential vs rayon execution of the two data-parallel hot spots:
//! GI multistart refinement and independent benchmark trials.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gibo_core::acquisition::{maximize_gi, GiContext, GiOptions};
use gibo_core::gp::{FitOptions, KernelParams};
use gibo_core::optimizer::{run_gibo, GiboConfig, HyperparameterPolicy};
use gibo_core::parallel::{map_indexed, Execution};
use gibo_core::rng::{derive_seed, seeded};
use gibo_core::synthetic::{generate_objective, SyntheticOracle};
use rand::Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn gi_restarts(c: &mut Criterion) {
    let d = 16;
    let params = KernelParams::isotropic(d, 0.6, 1.0, 0.01).unwrap();
    let mut rng = seeded(0);
    let anchor = vec![0.5; d];
    let window: Vec<Vec<f64>> = (0..40)
        .map(|_| anchor.iter().map(|a| a + rng.random_range(-0.2..0.2)).collect())
        .collect();
    let ctx = GiContext::new(&anchor, &window, &params, 0.2).unwrap();
    let mut group = c.benchmark_group("gi_restarts");
    for (name, exec) in MODES {
        let opts = GiOptions {
            restarts: 8,
            exec,
            ..GiOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| maximize_gi(black_box(&ctx), &opts, &mut seeded(1)).unwrap())
        });
    }
    group.finish();
}

fn trials(c: &mut Criterion) {
    let d = 4;
    let objectives: Vec<_> = (0..8).map(|t| generate_objective(d, derive_seed(7, &[t])).unwrap()).collect();
    let mut group = c.benchmark_group("gibo_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                map_indexed(exec, objectives.len(), |t| {
                    let obj = &objectives[t];
                    let cfg = GiboConfig {
                        stepsize: 0.25,
                        samples_per_step: d,
                        window: 5 * d,
                        bound: 0.2,
                        normalize_gradient: true,
                        hyperparameters: HyperparameterPolicy::Fixed { params: obj.params.clone() },
                        acquisition: GiOptions::default(),
                        fit: FitOptions::default(),
                    };
                    let mut oracle = SyntheticOracle {
                        objective: obj,
                        rng: seeded(t as u64),
                    };
                    run_gibo(&mut oracle, &obj.start(), &cfg, 100, &mut seeded(100 + t as u64))
                        .unwrap()
                        .len()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, gi_restarts, trials);
criterion_main!(benches);
