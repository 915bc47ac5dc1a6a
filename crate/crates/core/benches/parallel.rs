use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nehari_core::energy::Fiber;
use nehari_core::fibering::{find_fibering_roots, RootOptions};
use nehari_core::mesh::Mesh;
use nehari_core::nehari::{default_start, lambda_scan, SolverOptions};
use nehari_core::nfunction::{NFunctionSpec, Weight};
use nehari_core::par::Execution;
use nehari_core::problem::{KirchhoffSpec, ProblemSpec, Reaction};
use nehari_core::properties::{run_property_suite, SuiteOptions};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn problem(n: usize, mu: Weight) -> ProblemSpec {
    ProblemSpec::new(
        NFunctionSpec::double_phase(1.5, 2.0, mu).unwrap(),
        KirchhoffSpec::affine_power(1.0, 0.1, 0.5).unwrap(),
        Reaction::singular(0.5).unwrap(),
        Reaction::superlinear(4.0).unwrap(),
        1e-3,
        Arc::new(Mesh::unit_square(n, n).unwrap()),
    )
    .unwrap()
}

fn scan(c: &mut Criterion) {
    let p = problem(16, Weight::Constant(1.0));
    let lambdas = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
    let mut g = c.benchmark_group("lambda_scan");
    g.sample_size(10);
    for (name, execution) in POLICIES {
        let opts = SolverOptions {
            execution,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| lambda_scan(&p, &lambdas, 32, &opts).unwrap())
        });
    }
    g.finish();
}

fn fibering_profile(c: &mut Criterion) {
    // position dependent weight: every fibering evaluation walks the mesh
    let p = problem(
        24,
        Weight::Affine {
            offset: 0.5,
            slope: [0.5, 0.0],
        },
    );
    let u = default_start(&p.mesh);
    let fiber = Fiber::new(&p, &u).unwrap();
    let mut g = c.benchmark_group("fibering_profile");
    for (name, execution) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| find_fibering_roots(&fiber, &RootOptions::default(), execution).unwrap())
        });
    }
    g.finish();
}

fn property_suite(c: &mut Criterion) {
    let p = problem(12, Weight::Constant(1.0));
    let mut g = c.benchmark_group("property_suite");
    g.sample_size(10);
    for (name, execution) in POLICIES {
        let opts = SuiteOptions {
            n_functions: 40,
            n_scaling: 40,
            n_gradient: 8,
            n_directions: 20,
            execution,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_property_suite(&p, &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, scan, fibering_profile, property_suite);
criterion_main!(benches);
