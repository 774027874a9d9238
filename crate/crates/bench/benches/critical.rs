use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use horoflow::critical::{
    critical_value_solve, default_primitive, CriticalOptions, PotentialOptions, PotentialSolver, PrimitiveField,
};
use horoflow::{Complex64, MagneticField, SurfaceModel};

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("critical_value_solve");
    g.sample_size(10);
    let opts = CriticalOptions { resolution: 32, ..CriticalOptions::default() };
    for (name, m) in [("flat torus", SurfaceModel::flat_torus(1.0)), ("genus2", SurfaceModel::genus2_octagon())] {
        let f = MagneticField::constant(if m.deck().lattice().is_some() { 0.0 } else { 1.0 });
        let theta = default_primitive(&m, &f).unwrap();
        g.bench_function(name, |b| b.iter(|| critical_value_solve(&m, &f, &theta, black_box(&opts)).unwrap()));
    }
    g.finish();
}

fn potential(c: &mut Criterion) {
    let m = SurfaceModel::half_plane();
    let theta = PrimitiveField::horocyclic(0.6);
    let s = PotentialSolver::new(&m, &theta, 0.5, PotentialOptions::default()).unwrap();
    let (x, y) = (Complex64::new(-0.3, 0.8), Complex64::new(0.5, 1.4));
    c.bench_function("potential query on the half plane", |b| b.iter(|| s.query(black_box(x), black_box(y)).unwrap()));
}

criterion_group!(benches, solve, potential);
criterion_main!(benches);
