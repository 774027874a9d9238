//! Invariant primitives by averaging pullbacks over Følner sets of an
//! amenable group of deck transformations.

use super::primitive::{DeckMap, PrimitiveField};
use crate::error::{Error, Result};
use crate::surfaces::DeckGroup;

/// Group to average over.
#[derive(Clone, Debug)]
pub enum AveragingGroup<'a> {
    /// The full deck group of a model; only abelian groups are accepted.
    Deck(&'a DeckGroup),
    /// The cyclic group generated by one deck transformation.
    Cyclic(DeckMap),
}

/// Mean of `psi^* theta` over the Følner box of radius `n`: `|n1|, |n2| <= n`
/// for a lattice, `|k| <= n` for a cyclic group.
pub fn folner_average_primitive(theta: &PrimitiveField, group: AveragingGroup<'_>, n: usize) -> Result<PrimitiveField> {
    let n = n as i64;
    let maps: Vec<DeckMap> = match group {
        AveragingGroup::Deck(DeckGroup::Trivial) => return Ok(theta.clone()),
        AveragingGroup::Deck(DeckGroup::Lattice(l)) => (-n..=n)
            .flat_map(|i| (-n..=n).map(move |j| DeckMap::Translation(l.translation(i, j))))
            .collect(),
        AveragingGroup::Deck(DeckGroup::Fuchsian(_)) => {
            return Err(Error::Unsupported(
                "surface groups of genus at least 2 are not amenable; average over a cyclic subgroup instead".into(),
            ))
        }
        AveragingGroup::Cyclic(g) => (-n..=n).map(|k| g.power(k)).collect(),
    };
    Ok(PrimitiveField::Averaged {
        base: Box::new(theta.clone()),
        maps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{ChartPoint, FuchsianGroup, MagneticField, SurfaceModel};
    use crate::trig::{TrigSeries, TrigTerm};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn points() -> Vec<ChartPoint> {
        (0..9)
            .map(|k| Complex64::new(0.13 + 0.29 * k as f64, -0.4 + 0.17 * k as f64))
            .collect()
    }

    fn sup_diff(a: &PrimitiveField, b: &PrimitiveField, pts: &[ChartPoint]) -> f64 {
        pts.iter().map(|z| (a.covector(*z) - b.covector(*z)).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn invariant_primitive_is_fixed() {
        let torus = SurfaceModel::flat_torus(1.0);
        let inv = PrimitiveField::CoGradient(TrigSeries::single(0.2, TAU, -TAU, 0.4));
        for n in [1, 3, 8] {
            let avg = folner_average_primitive(&inv, AveragingGroup::Deck(torus.deck()), n).unwrap();
            assert!(sup_diff(&avg, &inv, &points()) < 1e-13);
        }
        let a = FuchsianGroup::genus2_octagon().generators()[0];
        let horo = PrimitiveField::horocyclic_invariant_under(0.7, &a).unwrap();
        let avg = folner_average_primitive(&horo, AveragingGroup::Cyclic(DeckMap::Mobius(a)), 3).unwrap();
        let pts = [Complex64::new(0.1, 0.9), Complex64::new(-0.3, 1.4)];
        assert!(sup_diff(&avg, &horo, &pts) < 1e-9);
    }

    #[test]
    fn quasi_periodic_gauge_averages_out() {
        // d sin(2 pi alpha x) averaged over x -> x + k, |k| <= N, is a Dirichlet
        // kernel: |mean| <= 2 pi alpha / ((2N + 1) |sin(pi alpha)|).
        let torus = SurfaceModel::flat_torus(1.0);
        let alpha = 2f64.sqrt();
        let inv = PrimitiveField::CoGradient(TrigSeries::single(0.1, TAU, 0.0, 0.0));
        let theta = PrimitiveField::Gauged {
            base: Box::new(inv.clone()),
            gauge: TrigSeries::single(1.0, TAU * alpha, 0.0, 0.0),
        };
        for n in [2, 4, 8, 16, 32] {
            let avg = folner_average_primitive(&theta, AveragingGroup::Deck(torus.deck()), n).unwrap();
            let err = sup_diff(&avg, &inv, &points());
            let bound = TAU * alpha / ((2 * n + 1) as f64 * (PI * alpha).sin().abs());
            assert!(err <= bound * (1.0 + 1e-9), "N={n}: {err} > {bound}");
        }
        let field = MagneticField::Trig {
            mean: 0.0,
            series: TrigSeries::single(-0.1 * TAU * TAU, TAU, 0.0, 0.0),
        };
        let avg = folner_average_primitive(&theta, AveragingGroup::Deck(torus.deck()), 4).unwrap();
        let plane = SurfaceModel::flat_plane();
        assert!(avg.exterior_residual(&plane, &field, &points()).unwrap() < 1e-6);
    }

    #[test]
    fn surface_group_is_rejected() {
        let m = SurfaceModel::genus2_octagon();
        let err = folner_average_primitive(&PrimitiveField::Zero, AveragingGroup::Deck(m.deck()), 2);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn averaging_contracts_pointwise(
            terms in prop::collection::vec((-1.0f64..1.0, -9.0f64..9.0, -9.0f64..9.0, 0.0f64..TAU), 1..4),
            n in 1usize..=64,
            x in 0.0f64..1.0,
            y in 0.0f64..1.0,
        ) {
            let gauge = TrigSeries::new(terms.into_iter().map(|(amplitude, kx, ky, phase)| TrigTerm { amplitude, kx, ky, phase }).collect());
            let theta = PrimitiveField::Gauged { base: Box::new(PrimitiveField::Zero), gauge };
            let avg = folner_average_primitive(&theta, AveragingGroup::Cyclic(DeckMap::Translation(Complex64::new(1.0, 0.0))), n).unwrap();
            let z = Complex64::new(x, y);
            let orbit_sup = (-(n as i64)..=n as i64)
                .map(|k| theta.covector(z + k as f64).norm())
                .fold(0.0, f64::max);
            prop_assert!(avg.covector(z).norm() <= orbit_sup * (1.0 + 1e-12) + 1e-15);
        }
    }
}
