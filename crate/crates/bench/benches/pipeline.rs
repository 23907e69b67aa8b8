use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use fuzzeraid_bench::{crash, fixture};
use fuzzeraid_core::minilang::{execute, render, DEFAULT_STEP_BUDGET};
use fuzzeraid_core::pipeline::listed_corpus;
use fuzzeraid_core::siggen::{generate_signature, reduce, ReduceConfig};
use fuzzeraid_core::triage::{group_crashes, sim_text, DistanceUnit};
use fuzzeraid_core::TriageConfig;

fn interpreter(c: &mut Criterion) {
    for name in ["pagestore", "bytevm"] {
        let (p, input, _) = crash(&fixture(name));
        c.bench_function(&format!("execute/{name}"), |b| {
            b.iter(|| execute(black_box(&p), black_box(&input), DEFAULT_STEP_BUDGET))
        });
    }
}

fn signatures(c: &mut Criterion) {
    let cfg = ReduceConfig::default();
    // Unsliced reduction of a full fixture takes seconds per run.
    let (p, input, fp) = crash(&fixture("fig2"));
    c.bench_function("reduce/fig2", |b| b.iter(|| reduce(black_box(&p), &input, &fp, &cfg).unwrap()));

    let mut g = c.benchmark_group("generate_signature");
    g.sample_size(10);
    for name in ["fig2", "markup"] {
        let (p, input, _) = crash(&fixture(name));
        g.bench_function(name, |b| {
            b.iter(|| generate_signature(black_box(&p), &input, "bench", "0000", &cfg).unwrap())
        });
    }
    g.finish();
}

fn similarity(c: &mut Criterion) {
    let f = fixture("markup");
    let a = render(&f.program);
    let b = render(&f.bugs[0].patch);
    c.bench_function("sim_text/lines", |bn| {
        bn.iter(|| sim_text(black_box(&a), black_box(&b), DistanceUnit::Lines, 1))
    });
    c.bench_function("sim_text/chars", |bn| {
        bn.iter(|| sim_text(black_box(&a), black_box(&b), DistanceUnit::Chars, 1))
    });
}

fn grouping(c: &mut Criterion) {
    let f = fixture("fig2");
    let corpus = listed_corpus(&f, DEFAULT_STEP_BUDGET);
    let cfg = TriageConfig::default();
    c.bench_function("group_crashes/fig2", |b| {
        b.iter_batched(Vec::new, |seeds| group_crashes(&corpus, seeds, &f.program, &cfg), BatchSize::SmallInput)
    });
}

criterion_group!(benches, interpreter, signatures, similarity, grouping);
criterion_main!(benches);
