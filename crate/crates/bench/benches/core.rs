//! Benchmarks for the hot paths: geodesic integration with exit detection,
//! fiber-sphere quadrature, and step-2 Carnot group operations.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::DVector;
use srlab_core::carnot::CarnotSpec;
use srlab_core::domain::Hemisphere;
use srlab_core::flow::{chord_data, integrate_geodesic, FlowOptions};
use srlab_core::model::{SphereKind, SphereModel};
use srlab_core::quadrature::sphere_rule;
use srlab_core::sampling::{rng_for, unit_sphere};
use srlab_core::FrameCovector;

fn bench_flow(c: &mut Criterion) {
    let model = SphereModel::new(SphereKind::Chf, 1);
    let mut rng = rng_for(1, 0);
    let mut q = unit_sphere(&mut rng, 4);
    q[0] = q[0].abs().max(0.3);
    q /= q.norm();
    let u = unit_sphere(&mut rng, 2);
    let fc = FrameCovector::reduced(q, u, 1);

    let mut group = c.benchmark_group("flow");
    for (label, rtol) in [("rtol1e-8", 1e-8), ("rtol1e-11", 1e-11)] {
        let opts = FlowOptions { rtol, atol: rtol, ..FlowOptions::default() };
        group.bench_function(format!("geodesic_pi_{label}"), |b| {
            b.iter(|| {
                integrate_geodesic(&model, black_box(&fc), std::f64::consts::PI, &opts).unwrap()
            })
        });
        group.bench_function(format!("chord_hemisphere_{label}"), |b| {
            b.iter(|| chord_data(&model, &Hemisphere, black_box(&fc), 12.0, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("quadrature");
    for k in [2usize, 3, 4] {
        let rule = sphere_rule(k, 48).unwrap();
        group.bench_function(format!("sphere_rule_build_k{k}"), |b| {
            b.iter(|| sphere_rule(black_box(k), 48).unwrap())
        });
        group.bench_function(format!("sphere_rule_integrate_k{k}"), |b| {
            b.iter(|| rule.integrate(|u| black_box(u[0] * u[0])))
        });
    }
    group.finish();
}

fn bench_carnot(c: &mut Criterion) {
    let spec = CarnotSpec::heisenberg(2);
    let dim = 5;
    let mut rng = rng_for(2, 0);
    let a = unit_sphere(&mut rng, dim);
    let b_pt: DVector<f64> = unit_sphere(&mut rng, dim);
    let u = unit_sphere(&mut rng, 4);

    let mut group = c.benchmark_group("carnot");
    group.bench_function("multiply", |b| {
        b.iter(|| spec.multiply(black_box(&a), black_box(&b_pt)).unwrap())
    });
    group.bench_function("inverse", |b| b.iter(|| spec.inverse(black_box(&a))));
    group.bench_function("reduced_geodesic", |b| {
        b.iter(|| spec.reduced_geodesic(black_box(&a), black_box(&u), 1.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_flow, bench_quadrature, bench_carnot);
criterion_main!(benches);
