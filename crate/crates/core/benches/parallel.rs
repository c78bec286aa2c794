//! Sequential against rayon execution for the grid-shaped workloads. Built
//! without the `parallel` feature both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use datashare_core::mechanisms::{Constraint, Objective, SearchOptions};
use datashare_core::oracle::{grid_equilibrium, riemann_sums, OracleOptions};
use datashare_core::rational::{int, rat};
use datashare_core::{
    search_interval_mechanisms, solve_equilibrium, Execution, IntervalSet, MarketConfig, SharingMechanism,
};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn search(c: &mut Criterion) {
    let config = MarketConfig::four_segment(int(3), int(1)).unwrap();
    let mut group = c.benchmark_group("search_four_segment_1_24");
    group.sample_size(10);
    for (name, execution) in MODES {
        let options = SearchOptions {
            execution,
            ..SearchOptions::new(Constraint::NoHarm, Objective::JointProfit, rat(1, 24))
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &options, |b, opts| {
            b.iter(|| search_interval_mechanisms(black_box(&config), opts).unwrap())
        });
    }
    group.finish();
}

fn consumer_optimal() -> (MarketConfig, SharingMechanism) {
    let config = MarketConfig::four_segment(int(3), int(1)).unwrap();
    let mechanism = SharingMechanism::new(
        IntervalSet::interval(rat(1, 6), rat(1, 2)).unwrap(),
        IntervalSet::interval(rat(1, 2), rat(5, 6)).unwrap(),
    );
    (config, mechanism)
}

fn oracle(c: &mut Criterion) {
    let (config, mechanism) = consumer_optimal();
    let mut group = c.benchmark_group("grid_equilibrium_4seg");
    group.sample_size(10);
    for (name, execution) in MODES {
        let options = OracleOptions {
            execution,
            ..OracleOptions::new(&config)
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &options, |b, opts| {
            b.iter(|| grid_equilibrium(black_box(&mechanism), &config, opts).unwrap())
        });
    }
    group.finish();
}

fn riemann(c: &mut Criterion) {
    let (config, mechanism) = consumer_optimal();
    let outcome = solve_equilibrium(&mechanism, &config).unwrap();
    let mut group = c.benchmark_group("riemann_1e6");
    for (name, execution) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, &exec| {
            b.iter(|| riemann_sums(black_box(&outcome), 1_000_000, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, search, oracle, riemann);
criterion_main!(benches);
