//! Parallel vs sequential throughput on the crate's hot paths.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use nblora::matrix::Matrix;
use nblora::rng::Prng;

fn bench_matmul(c: &mut Criterion) {
    let mut rng = Prng::new(1);
    let a = Matrix::from_stream(192, 160, &mut rng, |r| r.gaussian());
    let b = Matrix::from_stream(160, 128, &mut rng, |r| r.gaussian());
    let mut group = c.benchmark_group("matmul_192x160x128");
    group.bench_function("parallel", |bench| bench.iter(|| a.matmul(&b)));
    group.bench_function("sequential", |bench| bench.iter(|| a.matmul_sequential(&b)));
    group.finish();
}

fn bench_svd(c: &mut Criterion) {
    let mut rng = Prng::new(2);
    let a = Matrix::from_stream(96, 64, &mut rng, |r| r.gaussian());
    c.bench_function("svd_96x64", |bench| {
        bench.iter_batched(|| a.clone(), |m| nblora::svd::svd(&m), BatchSize::SmallInput)
    });
}

criterion_group!(benches, bench_matmul, bench_svd);
criterion_main!(benches);
