use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use odex_bench::toy_data;
use odex_core::kernel::{train_gpr, SvmClassifier};
use odex_core::train_estimator_pair;

fn svm(c: &mut Criterion) {
    let mut group = c.benchmark_group("svm_train");
    for n in [25, 64, 150] {
        let data = toy_data(n, 1);
        let xs: Vec<Vec<f64>> = data.params().into_iter().map(<[f64]>::to_vec).collect();
        let ys = data.outcomes();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| SvmClassifier::train(&xs, &ys, 1.0, 10.0, 0).unwrap())
        });
    }
    group.finish();
}

fn estimator_pair(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimator_pair_cv");
    group.sample_size(10);
    for n in [25, 64] {
        let data = toy_data(n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| train_estimator_pair(&data, 0).unwrap())
        });
    }
    group.finish();
}

fn gpr(c: &mut Criterion) {
    let mut group = c.benchmark_group("gpr_train");
    group.sample_size(10);
    for n in [25, 64, 150] {
        let data = toy_data(n, 3);
        let xs = data.params();
        let ts: Vec<f64> = data.outcomes().iter().map(|o| o.sign()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| train_gpr(&xs, &ts, 0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, svm, estimator_pair, gpr);
criterion_main!(benches);
