use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qgame_core::circuits::GateSet;
use qgame_core::games::{gvw_simulate, GambleParams};
use qgame_core::market::{make_gaussian_strategy, wigner, GridSpec};
use qgame_core::mbqc::{survival_curve, verify_universality};
use qgame_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn gvw(c: &mut Criterion) {
    let params = GambleParams::new(0.6, 0.3, 5.0).unwrap();
    let mut g = c.benchmark_group("gvw_simulate_200k");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| gvw_simulate(&params, 200_000, 1, exec).unwrap()));
    }
    g.finish();
}

fn walk(c: &mut Criterion) {
    let mut g = c.benchmark_group("survival_curve_100k");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| survival_curve(20, 100_000, 1, exec).unwrap()));
    }
    g.finish();
}

fn universality(c: &mut Criterion) {
    let gates = GateSet::default();
    let mut g = c.benchmark_group("verify_universality");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| verify_universality(&gates, exec, None)));
    }
    g.finish();
}

fn wigner_grid(c: &mut Criterion) {
    let mut g = c.benchmark_group("wigner");
    for n in [256usize, 1024] {
        let grid = GridSpec::symmetric(16.0, n).unwrap();
        let psi = make_gaussian_strategy(0.0, 1.0, &grid, true).unwrap();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &psi, |b, psi| b.iter(|| wigner(psi, exec).unwrap()));
        }
    }
    g.finish();
}

criterion_group!(benches, gvw, walk, universality, wigner_grid);
criterion_main!(benches);
