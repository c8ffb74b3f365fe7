use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hessdecay::bump::{Cutoff, ProductBump};
use hessdecay::decayscan::{classify_boxes, BoxOptions};
use hessdecay::foldcut::{trace_curve, TraceOptions};
use hessdecay::geomschrod::build_box;
use hessdecay::interval::Interval;
use hessdecay::newton::{build_polygon, whitney_check, FoldCheckOptions, FoldRegion};
use hessdecay::oscquad::{osc2d, CutoffField, OscIntegrand, QuadOptions};
use hessdecay_bench::{cubic, cusp, perturbed};

fn exact(c: &mut Criterion) {
    let phi = cusp();
    c.bench_function("hessian_det/cusp", |b| b.iter(|| black_box(&phi).hessian_det().unwrap()));
    c.bench_function("build_polygon/cusp", |b| b.iter(|| build_polygon(black_box(&phi)).unwrap()));
    let square = [Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)];
    c.bench_function("whitney_check/cusp", |b| {
        b.iter(|| whitney_check(&phi, FoldRegion::OffAxes, square, &FoldCheckOptions::default()).unwrap())
    });
    let poly = build_polygon(&phi).unwrap();
    c.bench_function("classify_boxes/cusp", |b| {
        b.iter(|| classify_boxes(&phi, &poly, 1e-4, &BoxOptions::default()).unwrap())
    });
}

fn quadrature(c: &mut Criterion) {
    let psi = ProductBump::standard(2);
    let phi = cubic();
    let opts = QuadOptions::default();
    let mut group = c.benchmark_group("osc2d/cubic");
    group.sample_size(10);
    for lambda in [64.0, 512.0] {
        group.bench_with_input(BenchmarkId::from_parameter(lambda), &lambda, |b, &l| {
            b.iter(|| osc2d(&phi, [0.0, 0.0], l, Cutoff::default(), 1.0 / 16.0, &psi, &opts).unwrap())
        });
    }
    group.finish();

    let u = phi.hessian_det().unwrap().to_float();
    let integrand = OscIntegrand::new(phi.to_float(), 256.0, &psi)
        .unwrap()
        .with_cutoff(CutoffField::new(u, Cutoff::default(), 1.0 / 16.0).unwrap());
    let xi_box = [Interval::new(-1.25, 0.5), Interval::new(-1.25, 0.5)];
    let prepared = integrand.prepare(&xi_box, &opts).unwrap();
    let axis: Vec<f64> = (0..17).map(|i| -1.25 + 1.75 * i as f64 / 16.0).collect();
    c.bench_function("eval_grid/17x17", |b| b.iter(|| prepared.eval_grid(&axis, &axis)));
}

fn geometry(c: &mut Criterion) {
    let phi = perturbed();
    let square = vec![Interval::new(-0.2, 0.2); 2];
    let op = build_box(&phi, &[0.0, 0.0], &square).unwrap();
    c.bench_function("pde_residual/perturbed", |b| b.iter(|| op.pde_residual(0.1, black_box(&[0.05, -0.1])).unwrap()));

    let cubic = cubic();
    let u = cubic.hessian_det().unwrap();
    let window = [Interval::new(-0.5, 0.5), Interval::new(-0.5, 0.5)];
    c.bench_function("trace_curve/cubic", |b| {
        b.iter(|| trace_curve(&cubic, [0.0, 0.0], &u, window, Interval::new(0.25, 1.0), &TraceOptions::default()).unwrap())
    });
}

criterion_group!(benches, exact, quadrature, geometry);
criterion_main!(benches);
