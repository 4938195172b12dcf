use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use horo_core::dirichlet::{self, BoundaryData, SolveOptions};
use horo_core::grid::{DomainSpec, GridFunction, Shape};
use horo_core::operator;
use horo_core::suite::{self, Suite, SuiteConfig};
use horo_core::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("residual");
    for m in [65usize, 257] {
        let d = DomainSpec::new(Shape::Rectangle { wx: 1.0, wy: 1.0 }, m).unwrap();
        let u = GridFunction::from_fn(d, |x| 1.0 + 0.3 * x[0] * x[0] - 0.2 * x[1] * x[1]).unwrap();
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, m), &u, |b, u| {
                b.iter(|| operator::q_residual_with(black_box(u), 2, 1e-8, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn newton_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_solve");
    group.sample_size(10);
    let d = DomainSpec::new(Shape::Rectangle { wx: 1.0, wy: 1.0 }, 49).unwrap();
    let bc = BoundaryData::per_side(vec![0.3, 1.0, 0.5, 2.0]);
    for (name, exec) in POLICIES {
        let mut opts = SolveOptions::new(1e-9);
        opts.exec = exec;
        group.bench_function(name, |b| b.iter(|| dirichlet::solve_with(&d, black_box(&bc), 2, &opts).unwrap()));
    }
    group.finish();
}

fn verification_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("suite_profiles");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let cfg = SuiteConfig { tol: 1e-8, seed: 0, exec };
        group.bench_function(name, |b| b.iter(|| suite::run(Suite::Profiles, black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, residual, newton_solve, verification_suite);
criterion_main!(benches);
