use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64 as C;
use twistrec::deform::{dm_cubic, family};
use twistrec::periods::{cycle_basis, period_data, CycleOpts};
use twistrec_bench::twisted_quartic;

fn periods(c: &mut Criterion) {
    let cur = twisted_quartic();
    c.bench_function("cycle basis", |b| b.iter(|| black_box(cycle_basis(&cur, CycleOpts::default()).unwrap())));
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    c.bench_function("period data", |b| b.iter(|| black_box(period_data(&cur, &cb).unwrap())));
}

fn cubic(c: &mut Criterion) {
    let fam = family(&twisted_quartic(), C::new(0.01, 0.0), 0.05).unwrap();
    let mut group = c.benchmark_group("deform");
    group.sample_size(10);
    group.bench_function("three-way cubic", |b| b.iter(|| black_box(dm_cubic(&fam, 1e-3, 1e-3))));
    group.finish();
}

criterion_group!(benches, periods, cubic);
criterion_main!(benches);
