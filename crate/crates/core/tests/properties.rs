use std::f64::consts::TAU;

use horoflow::invariants::{horocycle_characterization_test, liouville_action_formula, maslov_index_estimate};
use horoflow::invariants::{Budget, CharacterizationBudget, Verdict};
use horoflow::magflow::{integrate, UnitPhasePoint};
use horoflow::sl2::{exp_generator, Sl2Element, Sl2Generator};
use horoflow::surfaces::{DeckWord, Letter, MagneticField, SurfaceModel};
use horoflow::trig::{TrigSeries, TrigTerm};
use horoflow::variation::{jacobi_integrate, InitialPlane};
use num_complex::Complex64;
use proptest::prelude::*;

fn generator() -> impl Strategy<Value = Sl2Generator> {
    (-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b, c)| Sl2Generator::new(a, b, c))
}

fn word() -> impl Strategy<Value = DeckWord> {
    prop::collection::vec((0usize..4, prop_oneof![Just(-1), Just(1)]), 1..4)
        .prop_map(|l| DeckWord::from_letters(l.into_iter().map(|(g, p)| Letter::new(g, p))))
}

fn gauss_bonnet(model: &SurfaceModel) -> f64 {
    let chi = model.euler_characteristic().unwrap() as f64;
    let total = model.integrate(|z| model.curvature(z).unwrap()).unwrap();
    (total - TAU * chi).abs() / (1.0 + chi.abs())
}

#[test]
fn gauss_bonnet_on_compact_models() {
    let sigma = TrigSeries::new(vec![
        TrigTerm { amplitude: 0.2, kx: TAU, ky: 0.0, phase: 0.1 },
        TrigTerm { amplitude: 0.1, kx: TAU, ky: TAU, phase: 0.7 },
    ]);
    for m in [
        SurfaceModel::genus2_octagon(),
        SurfaceModel::genus2_octagon_scaled(2.5),
        SurfaceModel::flat_torus(1.0),
        SurfaceModel::conformal_torus(1.0, sigma).unwrap(),
        SurfaceModel::sphere(),
    ] {
        assert!(gauss_bonnet(&m) <= 1e-3, "{}: {}", m.name(), gauss_bonnet(&m));
    }
}

#[test]
fn action_is_minus_one_for_zero_mean_fields() {
    let m = SurfaceModel::genus2_octagon();
    let radius = (1.0 + 2f64.sqrt()).acosh();
    let f = MagneticField::Bump {
        base: 0.0,
        amplitude: 0.8,
        bump: horoflow::surfaces::RadialBump::new(radius),
    };
    // the bump has zero mean, so the quadratic term vanishes
    assert!((liouville_action_formula(&m, &f).unwrap() + 1.0).abs() < 1e-9);
    for l in [0.3, 0.9, 1.7] {
        assert!(liouville_action_formula(&m, &MagneticField::constant(l)).unwrap() <= -1.0 + l * l + 1e-12);
    }
}

#[test]
fn maslov_rate_increases_with_field() {
    let m = SurfaceModel::genus2_octagon();
    let mut last = 0.0;
    for l in [1.2, 1.6, 2.0, 2.5] {
        let mc = maslov_index_estimate(&m, &MagneticField::constant(l), Budget::new(8, 30.0, 1e-2, 11), InitialPlane::VERTICAL)
            .unwrap();
        assert!(mc.estimate.mean > last, "lambda {l}: {}", mc.estimate.mean);
        last = mc.estimate.mean;
    }
}

#[test]
fn horocycle_verdict_is_seed_stable() {
    let m = SurfaceModel::genus2_octagon();
    for (l, want) in [(1.0, Verdict::Horocyclic), (0.6, Verdict::NotHorocyclic)] {
        for seed in 0..10 {
            let b = CharacterizationBudget::new(200, Budget::new(6, 10.0, 1e-2, seed));
            let r = horocycle_characterization_test(&m, &MagneticField::constant(l), b).unwrap();
            assert_eq!(r.verdict, want, "lambda {l} seed {seed}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_group_law(x in generator(), s in -10.0f64..10.0, t in -10.0f64..10.0) {
        let lhs = exp_generator(&x, s + t);
        let rhs = exp_generator(&x, s) * exp_generator(&x, t);
        let scale = x.norm().max(1.0);
        prop_assert!(lhs.distance(&rhs) <= 1e-12 * (scale * (s.abs() + t.abs())).exp());
    }

    #[test]
    fn products_stay_unimodular(x in generator(), y in generator(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let p = exp_generator(&x, s) * exp_generator(&y, t) * exp_generator(&x, -t);
        prop_assert!((p.det() - 1.0).abs() <= 1e-12 * p.matrix().iter().flatten().map(|v| v * v).sum::<f64>().max(1.0));
    }

    #[test]
    fn magnetic_eigenvalues(l in -0.999f64..0.999) {
        let (a, b) = Sl2Generator::magnetic(l).real_eigenvalues().unwrap();
        let want = 0.5 * (1.0 - l * l).sqrt();
        prop_assert!((a.max(b) - want).abs() <= 1e-12);
        prop_assert!((a.min(b) + want).abs() <= 1e-12);
    }

    #[test]
    fn deck_maps_are_isometries(w in word(), r in 0.0f64..1.0, al in 0.0f64..TAU, vx in -1.0f64..1.0, vy in -1.0f64..1.0) {
        let m = SurfaceModel::genus2_octagon();
        let z = horoflow::surfaces::octagon::polar_point(r, al);
        let v = Complex64::new(vx, vy);
        let d = m.deck();
        let moved = d.apply_word(&w, z);
        let dv = d.word_derivative(&w, z) * v;
        let (a, b) = (m.norm(z, v).unwrap(), m.norm(moved, dv).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn reduction_is_idempotent(w in word(), r in 0.0f64..0.8, al in 0.0f64..TAU) {
        let m = SurfaceModel::genus2_octagon();
        let z = m.deck().apply_word(&w, horoflow::surfaces::octagon::polar_point(r, al));
        let (p, _) = m.reduce_to_fundamental_domain(z).unwrap();
        let (q, w2) = m.reduce_to_fundamental_domain(p).unwrap();
        prop_assert!(w2.is_empty());
        prop_assert_eq!(p, q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flow_matches_algebraic_oracle(l in -1.5f64..1.5, x in -0.5f64..0.5, y in 0.5f64..2.0, phi in 0.0f64..TAU) {
        let m = SurfaceModel::half_plane();
        let p0 = UnitPhasePoint::new(x, y, phi);
        let g0 = p0.to_frame().unwrap();
        let orbit = integrate(&m, &MagneticField::constant(l), p0, 10.0, 1e-3).unwrap();
        let gen = Sl2Generator::magnetic(l);
        let mut worst: f64 = 0.0;
        for (t, p) in orbit.t.iter().zip(&orbit.states).step_by(100) {
            let g: Sl2Element = g0 * exp_generator(&gen, *t);
            let q = UnitPhasePoint::from_frame(&g);
            worst = worst.max(p.chart_distance(&q));
            prop_assert!((p.direction().norm() - 1.0).abs() < 1e-15);
        }
        prop_assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn wronskian_is_conserved(l in 0.0f64..2.0, phi in 0.0f64..TAU) {
        let m = SurfaceModel::genus2_octagon();
        let f = MagneticField::constant(l);
        let orbit = integrate(&m, &f, UnitPhasePoint::new(0.1, 1.0, phi), 10.0, 1e-3).unwrap();
        let a = jacobi_integrate(&m, &f, &orbit, 1.0, 0.0, 0.0).unwrap();
        let b = jacobi_integrate(&m, &f, &orbit, 0.0, 1.0, 0.0).unwrap();
        // Relative to the size of the products that cancel in y1 y2' - y2 y1'.
        let w = a.wronskian(&b);
        let drift = (0..w.len())
            .map(|k| {
                let size = (a.y[k] * b.ydot[k]).abs() + (b.y[k] * a.ydot[k]).abs();
                (w[k] - w[0]).abs() / size.max(1.0)
            })
            .fold(0.0, f64::max);
        prop_assert!(drift <= 1e-8, "{drift}");
    }
}
