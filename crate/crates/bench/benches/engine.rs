use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use localgd_core::libsvm::parse_libsvm_str;
use localgd_core::linalg::CsrMatrix;
use localgd_core::synthetic::{self, DatasetSpec};
use localgd_core::{run_local_gd, SyncSchedule};

fn engine_steps(c: &mut Criterion) {
    let (_, suite) = synthetic::non_iid_logistic_suite(0, &DatasetSpec::default(), 10).unwrap();
    let reference = suite.solve_reference(1e-8).unwrap();
    let gamma = 1.0 / suite.smoothness();
    let x0 = vec![0.0; suite.dim()];
    let mut group = c.benchmark_group("local_gd_64_steps");
    for h in [1, 16] {
        let schedule = SyncSchedule::uniform(h, 64).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(h), &schedule, |b, s| {
            b.iter(|| run_local_gd(&suite, &reference, gamma, s, black_box(&x0)).unwrap())
        });
    }
    group.finish();
}

fn parsing(c: &mut Criterion) {
    let ds = synthetic::label_sorted_dataset(1, &DatasetSpec::default()).unwrap();
    let text = ds.to_libsvm_string();
    c.bench_function("parse_libsvm_2000x50", |b| b.iter(|| parse_libsvm_str(black_box(&text)).unwrap()));
}

fn power_iteration(c: &mut Criterion) {
    let ds = synthetic::label_sorted_dataset(2, &DatasetSpec::default()).unwrap();
    let m = CsrMatrix::from_rows(ds.dim, &ds.rows).unwrap();
    c.bench_function("power_iteration_2000x50", |b| {
        b.iter(|| black_box(&m).max_singular_value_sq(1e-9, 10_000).unwrap())
    });
}

criterion_group!(benches, engine_steps, parsing, power_iteration);
criterion_main!(benches);
