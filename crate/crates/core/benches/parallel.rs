use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levinson2d::levinson::verify_all;
use levinson2d::spectrum::find_bound_energies;
use levinson2d::{ExecMode, PotentialModel, ProblemSpec, Tolerances};

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn bound_energies(c: &mut Criterion) {
    let tol = Tolerances::default();
    let spec = ProblemSpec::new(
        PotentialModel::square_well(-1.5, 5.0).unwrap(),
        1.0,
        0.5,
        1.0,
    )
    .unwrap();
    let mut group = c.benchmark_group("find_bound_energies");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                find_bound_energies(&spec, tol.tol_e, tol.tol_half, &tol.solver, mode).unwrap()
            })
        });
    }
    group.finish();
}

fn verify_partial_waves(c: &mut Criterion) {
    let tol = Tolerances::default();
    let well = PotentialModel::square_well(-1.0, 3.0).unwrap();
    let js = [0.5, 1.5, 2.5, 3.5, -0.5, -1.5, -2.5, -3.5];
    let mut group = c.benchmark_group("verify_all");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| verify_all(&well, 1.0, &js, &tol, mode))
        });
    }
    group.finish();
}

criterion_group!(benches, bound_energies, verify_partial_waves);
criterion_main!(benches);
