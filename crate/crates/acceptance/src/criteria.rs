//! The eight criteria. Reference values are closed forms evaluated here,
//! or the LP solver in [`crate::lp`].

use std::f64::consts::PI;

use horoflow::critical::{
    closed_orbit_search, cover_distance, critical_value_solve, default_primitive, ClosedOrbitOptions, CriticalOptions,
    DeckMap, PotentialOptions, PotentialQuery, PotentialSolver, PrimitiveField,
};
use horoflow::invariants::{
    conjugacy_action_identity_check, green_identity_estimate, horocycle_characterization_test, Budget,
    CharacterizationBudget, Verdict, STATISTICAL_FLOOR,
};
use horoflow::magflow::{integrate, UnitPhasePoint};
use horoflow::sl2::{conjugate_to_standard_horocycle, horocycle_commutation_residual};
use horoflow::surfaces::{FuchsianGroup, MagneticField, SurfaceModel};
use horoflow::trig::{TrigSeries, TrigTerm};
use horoflow::variation::{conjugate_points, green_bundle_trace, jacobi_integrate};
use horoflow::{Complex64, Result, Sl2Generator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lp::torus_lp_bound;
use crate::Check;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn algebraic_identities(seed: u64) -> Result<Vec<Check>> {
    let det_err = (0..=100)
        .map(|k| {
            let l = -2.0 + 0.04 * k as f64;
            (Sl2Generator::magnetic(l).det() + 0.25 * (1.0 - l * l)).abs()
        })
        .fold(0.0, f64::max);

    let mut r = rng(seed, 1);
    let comm = (0..1000)
        .map(|_| horocycle_commutation_residual(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)))
        .fold(0.0, f64::max);

    // Rescale by diag(sqrt k, 1/sqrt k) so that the target is N itself.
    let x1 = Sl2Generator::horocyclic();
    let conj = conjugate_to_standard_horocycle(&x1)?;
    let s = conj.kappa.sqrt();
    let c = mat_mul(conj.c.matrix(), [[s, 0.0], [0.0, 1.0 / s]]);
    let ci = [[c[1][1], -c[0][1]], [-c[1][0], c[0][0]]];
    let m = mat_mul(mat_mul(ci, x1.matrix()), c);
    let n = [[0.0, 1.0], [0.0, 0.0]];
    let conj_err = (0..4).map(|k| (m[k / 2][k % 2] - n[k / 2][k % 2]).powi(2)).sum::<f64>().sqrt();

    Ok(vec![
        Check::within("det X_lambda + (1 - lambda^2)/4 over 101 lambda in [-2, 2]", det_err, 1e-15),
        Check::within("geodesic/horocycle commutation over 1000 (t, s)", comm, 1e-12),
        Check::within("c^-1 X_1 c - N", conj_err, 1e-10),
    ])
}

pub fn horocycle_characterization(seed: u64) -> Result<Vec<Check>> {
    let m = SurfaceModel::genus2_octagon();
    let budget = CharacterizationBudget::new(1000, Budget::new(1000, 50.0, 1e-2, seed));
    let mut out = Vec::new();

    let r = horocycle_characterization_test(&m, &MagneticField::constant(1.0), budget)?;
    out.push(Check::within("f = 1: action formula", r.action_formula.abs(), 0.0));
    let a = r.action_montecarlo.estimate;
    out.push(Check::within("f = 1: Monte-Carlo action mean", a.mean.abs(), STATISTICAL_FLOOR));
    out.push(Check::within("f = 1: Monte-Carlo action stderr", a.stderr, STATISTICAL_FLOOR));
    out.push(Check::within("f = 1: Maslov rate at T = 50", r.maslov_rate.estimate.mean.abs(), 0.0));
    out.push(Check::holds("f = 1: verdict horocyclic", r.verdict == Verdict::Horocyclic));

    let r = horocycle_characterization_test(&m, &MagneticField::constant(0.5), budget)?;
    out.push(Check::within("f = 0.5: action formula + 0.75", (r.action_formula + 0.75).abs(), 1e-12));
    out.push(Check::holds("f = 0.5: verdict not horocyclic", r.verdict == Verdict::NotHorocyclic));

    let r = horocycle_characterization_test(&m, &MagneticField::constant(2.0), budget)?;
    let want = 3f64.sqrt() / PI;
    let got = r.maslov_rate.estimate.mean;
    out.push(Check::within("f = 2: Maslov rate vs sqrt(3)/pi, relative", (got - want).abs() / want, 0.02));
    out.push(Check::holds("f = 2: verdict not horocyclic", r.verdict == Verdict::NotHorocyclic));
    Ok(out)
}

/// Largest `|y - exact| / sup_{s <= t} |exact(s)|`; for monotone solutions
/// this is the pointwise relative error.
fn running_relative_error(t: &[f64], y: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for (tk, yk) in t.iter().zip(y).skip(1) {
        let e = exact(*tk);
        scale = scale.max(e.abs());
        worst = worst.max((yk - e).abs() / scale);
    }
    worst
}

pub fn closed_forms() -> Result<Vec<Check>> {
    let m = SurfaceModel::genus2_octagon();
    let p = UnitPhasePoint::new(0.1, 1.2, 0.3);
    let w = 3f64.sqrt();
    let mut out = Vec::new();
    let cases: [(f64, &str, fn(f64) -> f64); 3] = [
        (0.0, "f = 0: y = sinh t", f64::sinh),
        (1.0, "f = 1: y = t", |t| t),
        (2.0, "f = 2: y = sin(sqrt3 t)/sqrt3", |t| (3f64.sqrt() * t).sin() / 3f64.sqrt()),
    ];
    for (l, label, exact) in cases {
        let f = MagneticField::constant(l);
        let o = integrate(&m, &f, p, 5.0, 1e-3)?;
        let j = jacobi_integrate(&m, &f, &o, 0.0, 1.0, 0.0)?;
        out.push(Check::within(label, running_relative_error(&o.t, &j.y, exact), 1e-6));
    }

    let f = MagneticField::constant(2.0);
    let o = integrate(&m, &f, p, 10.0, 1e-3)?;
    let conj = conjugate_points(&m, &f, &o, 10.0)?;
    let expected = (10.0 * w / PI).floor() as usize;
    out.push(Check::holds("f = 2: number of conjugate points on [0, 10]", conj.len() == expected));
    let err = conj
        .iter()
        .enumerate()
        .map(|(k, t)| (t - (k + 1) as f64 * PI / w).abs())
        .fold(0.0, f64::max);
    out.push(Check::within("f = 2: conjugate times k pi/sqrt3", err, 1e-8));

    // For K + f^2 = -kappa^2 the finite-horizon trace is -kappa coth(kappa T),
    // and -1/T when kappa = 0.
    for (l, kappa) in [(0.0, 1.0), (0.5, 0.75f64.sqrt())] {
        let mut worst: f64 = 0.0;
        for horizon in [2.0, 4.0, 8.0] {
            let u = green_bundle_trace(&m, &MagneticField::constant(l), p, horizon, 1e-3)?;
            let q = (-2.0 * kappa * horizon).exp();
            let rate = 2.0 * kappa * q / (1.0 - q);
            worst = worst.max((u + kappa).abs() / rate);
        }
        out.push(Check::within(
            format!("f = {l}: |u_T + {kappa:.4}| / (2 kappa e^(-2 kappa T) / (1 - e^(-2 kappa T))) - 1"),
            (worst - 1.0).abs(),
            1e-4,
        ));
    }
    let mut worst: f64 = 0.0;
    for horizon in [2.0, 4.0, 8.0] {
        let u = green_bundle_trace(&m, &MagneticField::constant(1.0), p, horizon, 1e-3)?;
        worst = worst.max((u + 1.0 / horizon).abs());
    }
    out.push(Check::within("f = 1: u_T + 1/T", worst, 1e-10));
    Ok(out)
}

pub fn riccati_identity(seed: u64) -> Result<Vec<Check>> {
    let m = SurfaceModel::genus2_octagon();
    let mut out = Vec::new();
    for l in [0.0, 1.0, 0.5] {
        let mc = green_identity_estimate(&m, &MagneticField::constant(l), Budget::new(10_000, 20.0, 1e-2, seed))?;
        let e = mc.estimate;
        out.push(Check::within(
            format!("f = {l}: |mean u^2 + K + f^2| - 3 sigma"),
            (e.mean.abs() - 3.0 * e.stderr).max(0.0),
            STATISTICAL_FLOOR,
        ));
    }
    Ok(out)
}

/// Zero-mean field on the unit torus used for the LP comparison.
pub fn torus_exact_field() -> MagneticField {
    let tau = 2.0 * PI;
    MagneticField::Trig {
        mean: 0.0,
        series: TrigSeries::new(vec![
            TrigTerm { amplitude: 1.0, kx: tau, ky: 0.0, phase: 0.0 },
            TrigTerm { amplitude: 0.6, kx: tau, ky: tau, phase: 0.4 },
            TrigTerm { amplitude: 0.5, kx: 0.0, ky: 2.0 * tau, phase: 1.1 },
        ]),
    }
}

pub fn critical_value() -> Result<Vec<Check>> {
    let opts = CriticalOptions::default();
    let mut out = Vec::new();
    let m = SurfaceModel::genus2_octagon();
    for l in [0.5, 1.0, 1.5] {
        let f = MagneticField::constant(l);
        let c = critical_value_solve(&m, &f, &default_primitive(&m, &f)?, &opts)?;
        let want = 0.5 * l * l;
        out.push(Check::within(
            format!("lambda = {l}: c_upper vs lambda^2/2, relative"),
            (c.c_upper - want).abs() / want,
            0.05,
        ));
    }

    let torus = SurfaceModel::flat_torus(1.0);
    let f = torus_exact_field();
    let theta = default_primitive(&torus, &f)?;
    let c = critical_value_solve(&torus, &f, &theta, &opts)?;
    let lp = torus_lp_bound(1.0, 32, 16, |x, y| {
        let v = theta.covector(Complex64::new(x, y));
        (v.re, v.im)
    })
    .map_err(|e| horoflow::Error::NotApplicable(format!("LP oracle failed: {e}")))?;
    out.push(Check::within(
        "flat torus: c_upper vs 32x32 LP oracle, relative",
        (c.c_upper - lp.value()).abs() / lp.value(),
        0.10,
    ));

    let zero = MagneticField::constant(0.0);
    for model in [SurfaceModel::flat_torus(1.0), SurfaceModel::genus2_octagon()] {
        let c = critical_value_solve(&model, &zero, &default_primitive(&model, &zero)?, &opts)?;
        out.push(Check::within(
            format!("{}: Omega = 0 gives c = 0", model.name()),
            c.c_upper.abs().max(c.c_lower.abs()),
            1e-10,
        ));
    }
    Ok(out)
}

pub fn closed_orbits(seed: u64) -> Result<Vec<Check>> {
    let opts = ClosedOrbitOptions::default();
    let m = SurfaceModel::genus2_octagon();
    let a = FuchsianGroup::genus2_octagon().generators()[0];
    let la = 2.0 * (a.trace().abs() / 2.0).acosh();
    let mut out = Vec::new();

    let zero = MagneticField::constant(0.0);
    let o = closed_orbit_search(&m, &zero, &PrimitiveField::Zero, DeckMap::Mobius(a), 0.5, &opts)?;
    out.push(Check::within("geodesic in class a: length vs 2 acosh(|tr a|/2)", (o.length - la).abs(), 1e-4));
    out.push(Check::within("geodesic: closing defect", o.closing_defect, 1e-3));

    let l = 0.5;
    let f = MagneticField::constant(l);
    let theta = PrimitiveField::horocyclic_invariant_under(l, &a)?;
    let o = closed_orbit_search(&m, &f, &theta, DeckMap::Mobius(a), 0.5, &opts)?;
    let want = la / (1.0 - l * l).sqrt();
    out.push(Check::within("lambda = 0.5: period vs l_a/sqrt(1 - lambda^2)", (o.period - want).abs(), 1e-3));
    out.push(Check::within("lambda = 0.5: closing defect", o.closing_defect, 1e-3));

    let cover = SurfaceModel::flat_torus(1.0).universal_cover();
    let s = PotentialSolver::new(&cover, &PrimitiveField::Zero, 0.5, PotentialOptions::default())?;
    let mut r = rng(seed, 6);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = Complex64::new(r.random(), r.random());
        let y = Complex64::new(r.random_range(-1.0..2.0), r.random_range(-1.0..2.0));
        let q = s.query(x, y)?;
        worst = worst.max((q.value - cover_distance(&cover, x, y)?).abs());
    }
    out.push(Check::within("flat torus: Phi_1/2(x, y) - d(x, y) over 50 pairs", worst, 1e-6));
    Ok(out)
}

fn lower_bound_gap(q: &PotentialQuery, eps: f64) -> f64 {
    (eps / (2.0 * q.k).sqrt() * q.distance - q.value).max(0.0)
}

pub fn potential_properties(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let k = 0.5;
    let mut bound_gap: f64 = 0.0;
    let mut queries = 0;

    let uhp = SurfaceModel::half_plane();
    let lambda = 0.6;
    let theta = PrimitiveField::horocyclic(lambda);
    let eps = k - 0.5 * lambda * lambda;
    let s = PotentialSolver::new(&uhp, &theta, k, PotentialOptions::default())?;
    let mut r = rng(seed, 7);
    let point = |r: &mut ChaCha8Rng| Complex64::new(r.random_range(-0.8..0.8), r.random_range(-0.6f64..0.6).exp());
    let mut excess: f64 = 0.0;
    for _ in 0..20 {
        let (x, y, z) = (point(&mut r), point(&mut r), point(&mut r));
        let xy = s.query(x, y)?;
        let xz = s.query(x, z)?;
        let zy = s.query(z, y)?;
        excess = excess.max(xy.value - xz.value - zy.value);
        for q in [&xy, &xz, &zy] {
            bound_gap = bound_gap.max(lower_bound_gap(q, eps));
            queries += 1;
        }
    }
    out.push(Check::within("triangle inequality excess over 20 triples", excess.max(0.0), 1e-3));

    // A non-periodic exact gauge on the torus cover breaks deck invariance of
    // theta; the potential is still equivariant once corrected.
    let plane = SurfaceModel::flat_plane();
    let gauge = TrigSeries::single(0.05, 4.4, -2.9, 0.3);
    let sup_theta = 0.05 * 4.4f64.hypot(2.9);
    let theta = PrimitiveField::Gauged {
        base: Box::new(PrimitiveField::Zero),
        gauge,
    };
    let eps = k - 0.5 * sup_theta * sup_theta;
    let s = PotentialSolver::new(&plane, &theta, k, PotentialOptions::default())?;
    let base = Complex64::new(0.5, 0.5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = DeckMap::Translation(Complex64::new(
            r.random_range(-2i32..=2) as f64,
            r.random_range(-2i32..=2) as f64,
        ));
        let x = Complex64::new(r.random(), r.random());
        let y = Complex64::new(r.random(), r.random());
        worst = worst.max(s.equivariance_defect(psi, base, x, y)?);
        let q = s.query(x, y)?;
        bound_gap = bound_gap.max(lower_bound_gap(&q, eps));
        queries += 1;
    }
    out.push(Check::within("equivariance defect over 20 deck/pair instances", worst, 1e-3));
    out.push(Check::within(
        format!("lower bound eps/sqrt(2k) d - Phi_k over {queries} queries"),
        bound_gap,
        1e-9,
    ));
    Ok(out)
}

pub fn conjugacy_identity() -> Result<Vec<Check>> {
    // Horocyclic pairs lambda^2 = |K|, where the flows are conjugate.
    let mut worst: f64 = 0.0;
    for a in [0.25, 0.5, 2.0, 3.0, 10.0] {
        let c = conjugacy_action_identity_check(1.0, 1.0, a)?;
        worst = worst.max(c.residual);
    }
    Ok(vec![Check::within("|A2 a1 - A1 a2| / max(A1, A2) over 5 scales", worst, 1e-12)])
}
