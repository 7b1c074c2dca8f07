//! Parallel vs single-threaded throughput of the hot loops. The sequential
//! side runs the same code on a one-thread pool; build with
//! `--no-default-features` to compile the maps without rayon at all.

use cil_core::approx::TrainConfig;
use cil_core::cmr::moment::{estimate_moment, MomentData};
use cil_core::demos::generate_demonstrations;
use cil_core::envs::{Env, EnvSpec, LinearGaussianParams};
use cil_core::eval::{evaluate_noised_expert, EvalOptions, RewardAnchors};
use cil_core::par;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use std::hint::black_box;

const MODES: [(&str, usize); 2] = [("sequential", 1), ("parallel", 0)];

fn demo_generation(c: &mut Criterion) {
    let spec = EnvSpec::plane_ticket(5, 500);
    let mut g = c.benchmark_group("demo_generation");
    for (name, jobs) in MODES {
        g.bench_function(BenchmarkId::new(name, 512), |b| {
            b.iter(|| par::with_jobs(jobs, || generate_demonstrations(black_box(&spec), 512, 500, 1).unwrap()))
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let env = Env::new(EnvSpec::linear_gaussian(1, 500, LinearGaussianParams::default())).unwrap();
    let opts = EvalOptions {
        episodes: 512,
        warmup: 4,
        seed: 3,
    };
    let anchors = RewardAnchors {
        j_random: -1.0,
        j_clean_expert: 0.0,
        options: opts.clone(),
    };
    let mut g = c.benchmark_group("eval_episodes");
    for (name, jobs) in MODES {
        g.bench_function(BenchmarkId::new(name, opts.episodes), |b| {
            b.iter(|| par::with_jobs(jobs, || evaluate_noised_expert(&env, black_box(&opts), &anchors).unwrap()))
        });
    }
    g.finish();
}

fn moment_fit(c: &mut Criterion) {
    let n = 2000;
    let z = Array2::from_shape_fn((n, 6), |(i, j)| ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5);
    let r = Array2::from_shape_fn((n, 1), |(i, _)| z[[i, 0]] * 0.3 + ((i * 31) % 11) as f64 / 11.0 - 0.5);
    let data = MomentData {
        residuals: r,
        instruments: z,
        groups: (0..n).map(|i| i / 100).collect(),
    };
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::desk()
    };
    let mut g = c.benchmark_group("cmr_error");
    g.sample_size(10);
    for (name, jobs) in MODES {
        g.bench_function(name, |b| b.iter(|| par::with_jobs(jobs, || estimate_moment(black_box(&data), &cfg, 5).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, demo_generation, evaluation, moment_fit);
criterion_main!(benches);
