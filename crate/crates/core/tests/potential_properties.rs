use horoflow::critical::*;
use horoflow::surfaces::{FuchsianGroup, SurfaceModel};
use horoflow::trig::TrigSeries;
use num_complex::Complex64;
use proptest::prelude::*;

fn uhp_point() -> impl Strategy<Value = Complex64> {
    (-0.8f64..0.8, -0.6f64..0.6).prop_map(|(x, ly)| Complex64::new(x, ly.exp()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn triangle_inequality(x in uhp_point(), y in uhp_point(), z in uhp_point()) {
        let m = SurfaceModel::half_plane();
        let theta = PrimitiveField::horocyclic(0.6);
        let s = PotentialSolver::new(&m, &theta, 0.5, PotentialOptions::default()).unwrap();
        let xy = s.query(x, y).unwrap().value;
        let xz = s.query(x, z).unwrap().value;
        let zy = s.query(z, y).unwrap().value;
        prop_assert!(xy <= xz + zy + 1e-6, "{xy} > {xz} + {zy}");
    }

    #[test]
    fn monotone_in_energy(x in uhp_point(), y in uhp_point()) {
        let m = SurfaceModel::half_plane();
        let theta = PrimitiveField::horocyclic(0.6);
        let mut last = f64::NEG_INFINITY;
        for k in [0.3, 0.5, 1.0] {
            let s = PotentialSolver::new(&m, &theta, k, PotentialOptions::default()).unwrap();
            let v = s.query(x, y).unwrap().value;
            prop_assert!(v >= last - 1e-9);
            last = v;
        }
    }

    #[test]
    fn lower_bound_and_minimiser_energy(x in uhp_point(), y in uhp_point()) {
        prop_assume!((x - y).norm() > 0.05);
        let m = SurfaceModel::half_plane();
        let lambda = 0.6;
        let k = 0.5;
        let theta = PrimitiveField::horocyclic(lambda);
        let s = PotentialSolver::new(&m, &theta, k, PotentialOptions::default()).unwrap();
        let q = s.query(x, y).unwrap();
        let eps = k - 0.5 * lambda * lambda;
        prop_assert!(q.value >= eps / (2.0 * k).sqrt() * q.distance - 1e-9);
        let speeds = q.segment_speeds(&m).unwrap();
        let n = speeds.len();
        for v in &speeds[1..n - 1] {
            prop_assert!((0.5 * v * v - k).abs() <= 0.02 * k, "energy {}", 0.5 * v * v);
        }
    }
}

#[test]
fn identity_has_no_equivariance_defect() {
    let m = SurfaceModel::flat_plane();
    let theta = PrimitiveField::Gauged {
        base: Box::new(PrimitiveField::Zero),
        gauge: TrigSeries::single(0.05, 4.4, 0.0, 0.3),
    };
    let s = PotentialSolver::new(&m, &theta, 0.5, PotentialOptions::default()).unwrap();
    let (x, y) = (Complex64::new(0.1, 0.2), Complex64::new(0.7, -0.3));
    assert!(s.equivariance_defect(DeckMap::IDENTITY, Complex64::new(0.5, 0.5), x, y).unwrap() < 1e-12);
}

#[test]
fn invariant_primitive_is_equivariant() {
    let g = FuchsianGroup::genus2_octagon();
    let a = g.generators()[0];
    let theta = PrimitiveField::horocyclic_invariant_under(0.4, &a).unwrap();
    let m = SurfaceModel::half_plane();
    let s = PotentialSolver::new(&m, &theta, 0.5, PotentialOptions::default()).unwrap();
    let psi = DeckMap::Mobius(a);
    let base = Complex64::new(0.0, 1.0);
    for (x, y) in [
        (Complex64::new(0.1, 0.9), Complex64::new(0.4, 1.3)),
        (Complex64::new(-0.3, 1.1), Complex64::new(0.2, 0.7)),
    ] {
        assert!(correction_potential(&theta, psi, base, y).abs() < 1e-9);
        let d = s.equivariance_defect(psi, base, x, y).unwrap();
        assert!(d <= 1e-4, "{d}");
    }
}

#[test]
fn torus_equivariance_with_non_invariant_primitive() {
    // A non-periodic exact gauge breaks invariance under the lattice; the
    // correction f_psi restores the equivariance of the potential.
    let m = SurfaceModel::flat_plane();
    let theta = PrimitiveField::Gauged {
        base: Box::new(PrimitiveField::Zero),
        gauge: TrigSeries::single(0.05, 4.4, -2.9, 0.3),
    };
    let s = PotentialSolver::new(&m, &theta, 0.5, PotentialOptions::default()).unwrap();
    let base = Complex64::new(0.5, 0.5);
    let mut rng = 0x2545f491u64;
    let mut uniform = || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        (rng >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = DeckMap::Translation(Complex64::new(
            (uniform() * 5.0).floor() - 2.0,
            (uniform() * 5.0).floor() - 2.0,
        ));
        let x = Complex64::new(uniform(), uniform());
        let y = Complex64::new(uniform(), uniform());
        worst = worst.max(s.equivariance_defect(psi, base, x, y).unwrap());
    }
    assert!(worst <= 1e-3, "{worst}");
}
