//! Criterion benchmarks for the routing kernels and solvers.

use criterion::{BatchSize, BenchmarkId, Criterion, Throughput};
use dvrp_core::features::{gap_statistic, GapConfig};
use dvrp_core::local_search::{two_opt, RouteView};
use dvrp_core::memso::{memso_fitness, AssignmentGenome};
use dvrp_core::synthetic::{Layout, SyntheticSpec};
use dvrp_core::two_mpso::{phase1_fitness, CenterGenome};
use dvrp_core::{
    run_day, FrozenSnapshot, MemsoConfig, MemsoSolver, ProblemInstance, RequestId, TwoMpsoConfig,
    TwoMpsoSolver,
};

fn instance(requests: usize, layout: Layout) -> ProblemInstance {
    SyntheticSpec::new(format!("bench{requests}"), requests, layout, 7)
        .all_a_priori()
        .build()
        .expect("synthetic instance")
}

pub fn two_opt_routes(c: &mut Criterion) {
    let mut group = c.benchmark_group("two_opt");
    for n in [10usize, 25, 50, 100] {
        let inst = instance(n, Layout::Uniform);
        let ids: Vec<RequestId> = inst.requests().iter().map(|r| r.id).collect();
        let route = RouteView::new(ids, &inst).unwrap();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &route, |b, route| {
            b.iter(|| two_opt(route, &inst))
        });
    }
    group.finish();
}

pub fn fitness(c: &mut Criterion) {
    let mut group = c.benchmark_group("fitness");
    for n in [25usize, 75] {
        let inst = instance(n, Layout::Mixed);
        let snapshot = FrozenSnapshot::initial(&inst);
        let vehicles = (inst.total_volume() / inst.fleet().capacity).ceil() as u32 + 1;
        let genome = AssignmentGenome((0..n as u32).map(|i| i % vehicles).collect());
        group.bench_with_input(BenchmarkId::new("memso", n), &genome, |b, g| {
            b.iter(|| memso_fitness(g, &snapshot, 100.0))
        });
        let k = 2;
        let centers = CenterGenome(
            (0..vehicles as usize * k)
                .flat_map(|i| [10.0 + 7.0 * i as f64 % 80.0, 90.0 - 11.0 * i as f64 % 80.0])
                .collect(),
        );
        group.bench_with_input(BenchmarkId::new("2mpso_phase1", n), &centers, |b, g| {
            b.iter(|| phase1_fitness(g, k, &snapshot, 1, 100.0))
        });
    }
    group.finish();
}

pub fn gap(c: &mut Criterion) {
    let inst = instance(100, Layout::Clustered);
    let points: Vec<_> = inst.requests().iter().map(|r| r.location).collect();
    let config = GapConfig {
        references: 10,
        ..GapConfig::default()
    };
    c.bench_function("gap_statistic/100", |b| {
        b.iter(|| gap_statistic(&points, &config, 3).unwrap())
    });
}

pub fn days(c: &mut Criterion) {
    let mut group = c.benchmark_group("day");
    group.sample_size(10);
    let inst = SyntheticSpec::new("day", 50, Layout::Mixed, 9)
        .build()
        .unwrap();
    group.bench_function("memso/50", |b| {
        b.iter_batched(
            || MemsoSolver::new(MemsoConfig::default(), 1).unwrap(),
            |mut s| run_day(&inst, &mut s, 20_000, 25).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("2mpso/50", |b| {
        b.iter_batched(
            || TwoMpsoSolver::new(TwoMpsoConfig::default(), 1).unwrap(),
            |mut s| run_day(&inst, &mut s, 20_000, 25).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    two_opt_routes(c);
    fitness(c);
    gap(c);
    days(c);
}
