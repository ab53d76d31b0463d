use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use boolanneal::chimera::{apply_embedding, embed_bipartite};
use boolanneal::ising::encode_nonlinearity;
use boolanneal::oracle::{enumerate_with, CriterionQuery, Predicate};
use boolanneal::sampler::sample_sa_with;
use boolanneal::{Execution, Schedule};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if Execution::Parallel.is_parallel() {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn sa_logical(c: &mut Criterion) {
    let model = encode_nonlinearity(4, 0.25).unwrap();
    let schedule = Schedule::default().with_reads(200).with_sweeps(200);
    let mut g = c.benchmark_group("sa_logical_n4");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sample_sa_with(&model, &schedule, exec).unwrap())
        });
    }
    g.finish();
}

fn sa_embedded(c: &mut Criterion) {
    let logical = encode_nonlinearity(4, 0.25).unwrap();
    let physical = apply_embedding(&logical, &embed_bipartite(4).unwrap(), -1.0).unwrap();
    let schedule = Schedule::default().with_reads(50).with_sweeps(200);
    let mut g = c.benchmark_group("sa_embedded_n4");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sample_sa_with(&physical.model, &schedule, exec).unwrap())
        });
    }
    g.finish();
}

fn oracle_enumeration(c: &mut Criterion) {
    let query = CriterionQuery { n: 4, predicate: Predicate::Bent };
    let mut g = c.benchmark_group("oracle_bent_n4");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| enumerate_with(&query, false, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sa_logical, sa_embedded, oracle_enumeration);
criterion_main!(benches);
