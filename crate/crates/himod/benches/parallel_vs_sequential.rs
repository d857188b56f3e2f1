//! Sequential against rayon execution for the two embarrassingly parallel offline loops:
//! snapshot collection and the greedy estimator sweep over the training set.
//!
//! Without the `parallel` feature both variants run the same sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use himod::adr::{assemble_adr, benchmark_space, AdrProblemSpec};
use himod::affine::{AffineSystem, ParameterDomain};
use himod::geometry::DomainMap;
use himod::rom::greedy::sweep_adr;
use himod::rom::{collect_snapshots, greedy_offline, sample_training_set, GreedyOptions, TrainingSet};
use himod::space::{InnerProductMatrix, NormTag};
use himod::Execution;

fn setup(elements: usize, samples: usize) -> (AffineSystem, InnerProductMatrix, TrainingSet) {
    let map = DomainMap::adr_benchmark(4.0, 0.2).unwrap();
    let space = benchmark_space(map, elements, 8, 5.0, 1.0).unwrap();
    let sys = assemble_adr(&space, &AdrProblemSpec::benchmark()).unwrap();
    let x = InnerProductMatrix::assemble(&space, NormTag::H1).unwrap();
    let d = ParameterDomain::new(vec![(1.0, 10.0), (15.0, 25.0), (70.0, 80.0), (20.0, 30.0)]).unwrap();
    (sys, x, sample_training_set(&d, samples, 42).unwrap())
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn snapshots(c: &mut Criterion) {
    let (sys, _, set) = setup(80, 32);
    let mut g = c.benchmark_group("snapshots");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::new(name, set.len()), &exec, |b, &exec| {
            b.iter(|| black_box(collect_snapshots(&sys, &set, exec).unwrap()))
        });
    }
    g.finish();
}

fn estimator_sweep(c: &mut Criterion) {
    let (sys, x, set) = setup(80, 400);
    let greedy = greedy_offline(&sys, &x, &set, &GreedyOptions::new(10, 1)).unwrap();
    let mut g = c.benchmark_group("estimator_sweep");
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::new(name, set.len()), &exec, |b, &exec| {
            b.iter(|| black_box(sweep_adr(&greedy.reduced, &greedy.estimator, &set, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, snapshots, estimator_sweep);
criterion_main!(benches);
