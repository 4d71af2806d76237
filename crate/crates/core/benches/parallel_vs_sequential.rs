//! Parallel vs sequential execution of the two trial-parallel workloads.
//!
//! Build with `--no-default-features` to see the fallback: `Parallel` then runs
//! on the calling thread and both series should coincide.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use adiarank::experiments::{run_gap_ensemble, EnsembleSpec};
use adiarank::googlerank::{pagerank_mcmc, uniform, McmcConfig};
use adiarank::par::Execution;
use adiarank::webgraph::{generate, BaseModel, GraphModel, GraphModelConfig};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn gap_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("gap_ensemble");
    group.sample_size(10);
    for (name, execution) in MODES {
        let spec = EnsembleSpec {
            execution,
            ..EnsembleSpec::new(GraphModel::Mixed(BaseModel::PreferentialAttachment), vec![16, 32, 64], 16, 1)
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &spec, |b, spec| {
            b.iter(|| run_gap_ensemble(black_box(spec)).unwrap())
        });
    }
    group.finish();
}

fn mcmc(c: &mut Criterion) {
    let graph = generate(&GraphModelConfig::new(GraphModel::Mixed(BaseModel::PreferentialAttachment), 256).with_seed(3))
        .unwrap();
    let v = uniform(graph.n());
    let mut group = c.benchmark_group("pagerank_mcmc");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = McmcConfig { execution, ..McmcConfig::new(0.85, 100_000, 7) };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| pagerank_mcmc(black_box(&graph), &v, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gap_ensemble, mcmc);
criterion_main!(benches);
