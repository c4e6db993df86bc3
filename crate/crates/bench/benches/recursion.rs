use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C;
use twistrec::periods::{cycle_basis, CycleOpts};
use twistrec::{Engine, Mode, Normalization, Point, RecursionSetup, SpectralCurve, Variant};
use twistrec_bench::{cubic_cover, twisted_quartic};

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    for (g, n) in [(0u32, 4u32), (1, 2), (2, 1), (2, 2)] {
        group.bench_with_input(BenchmarkId::new("airy", format!("{g},{n}")), &(g, n), |b, &(g, n)| {
            b.iter(|| {
                // fresh engine: no memoized lower terms
                let eng = Engine::new(&SpectralCurve::airy(), None, RecursionSetup::default()).unwrap();
                black_box(eng.compute_w(g, n, Mode::Exact).unwrap())
            })
        });
    }
    let cubic = cubic_cover();
    group.bench_function("cubic cover 1,2", |b| {
        b.iter(|| {
            let eng = Engine::new(&cubic, None, RecursionSetup::default()).unwrap();
            black_box(eng.compute_w(1, 2, Mode::Exact).unwrap())
        })
    });
    group.finish();
}

fn evaluable(c: &mut Criterion) {
    let pts = [Point::Z(C::new(0.3, 0.7)), Point::Z(C::new(-2.1, 0.4)), Point::Z(C::new(1.7, -1.1))];
    let eng = Engine::new(&cubic_cover(), None, RecursionSetup::default()).unwrap();
    c.bench_function("evaluable cubic cover W03", |b| b.iter(|| black_box(eng.eval_w(0, 3, black_box(&pts)).unwrap())));
    c.bench_function("evaluable cubic cover W11", |b| b.iter(|| black_box(eng.eval_w(1, 1, black_box(&pts[..1])).unwrap())));

    let cur = twisted_quartic();
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    let setup = RecursionSetup { variant: Variant::Twisted, normalization: Normalization::ResidueLemma, ..Default::default() };
    let eng = Engine::new(&cur, Some(&cb), setup).unwrap();
    let p = [cur.point_over(C::new(0.7, 1.3), 1), cur.point_over(C::new(-1.6, -0.4), -1), cur.point_over(C::new(1.9, -0.9), 1)];
    c.bench_function("twisted quartic W03 direct", |b| b.iter(|| black_box(eng.w03_direct(black_box(p)).unwrap())));
    c.bench_function("twisted quartic B", |b| b.iter(|| black_box(eng.b.eval(black_box(p[0]), black_box(p[1])).unwrap())));
}

criterion_group!(benches, exact, evaluable);
criterion_main!(benches);
