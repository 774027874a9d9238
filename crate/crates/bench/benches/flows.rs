use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use horoflow::magflow::{integrate, liouville_samples};
use horoflow::sl2::exp_generator;
use horoflow::variation::riccati_integrate;
use horoflow::{MagneticField, Sl2Generator, SurfaceModel};

fn sl2(c: &mut Criterion) {
    let x = Sl2Generator::new(0.3, 1.1, -0.4);
    c.bench_function("exp_generator", |b| b.iter(|| exp_generator(black_box(&x), black_box(2.5))));
}

fn orbits(c: &mut Criterion) {
    let m = SurfaceModel::genus2_octagon();
    let f = MagneticField::constant(0.7);
    let p = liouville_samples(&m, 1, 1).unwrap()[0];
    c.bench_function("integrate genus2 T=10 dt=1e-2", |b| {
        b.iter(|| integrate(&m, &f, black_box(p), 10.0, 1e-2).unwrap())
    });
    let orbit = integrate(&m, &f, p, 10.0, 1e-2).unwrap();
    c.bench_function("riccati along T=10 orbit", |b| {
        b.iter(|| riccati_integrate(&m, &f, black_box(&orbit), 0.0).unwrap())
    });
}

criterion_group!(benches, sl2, orbits);
criterion_main!(benches);
