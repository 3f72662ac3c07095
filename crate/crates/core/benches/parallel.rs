//! Sequential versus rayon execution of the batch-parallel workloads.
//! Both paths produce identical results; only wall time differs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use trialkit::rdd::{adversarial_scenario, simulate_rdd_with};
use trialkit::sensitivity::oracle_grid;
use trialkit::tdesign::{td_tally, MemberSpec, PresentationCohort, TimeWindow};
use trialkit::{Execution, SeededStream};

const MODES: [(&str, Execution); 2] =
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn td(c: &mut Criterion) {
    let members = (0..8).map(|i| MemberSpec::TruncatedNormal { mean: 1.5 * i as f64, sd: 2.0 }).collect();
    let cohort = PresentationCohort::new(TimeWindow { t_s: 0.0, t_e: 12.0 }, members, 0.5).unwrap();
    let mut g = c.benchmark_group("td_tally_200k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| td_tally(&cohort, 200_000, SeededStream::from_seed(1), true, black_box(exec)).unwrap())
        });
    }
    g.finish();
}

fn rdd(c: &mut Criterion) {
    let adv = adversarial_scenario(1500.0, (1499.0, 1501.0), 0.5).unwrap();
    let mut g = c.benchmark_group("simulate_rdd_2m");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                simulate_rdd_with(&adv.scenario, 2_000_000, SeededStream::from_seed(1), black_box(exec))
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_grid_60");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| oracle_grid(60, black_box(exec)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, td, rdd, oracle);
criterion_main!(benches);
