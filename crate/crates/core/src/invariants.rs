//! Liouville action, asymptotic Maslov index and asymptotic cycles of the
//! Liouville measure, by closed formula and by Monte-Carlo averaging.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::magflow::{self, UnitPhasePoint};
use crate::stats::{variance, Estimate, MonteCarlo};
use crate::surfaces::RadialBump;
use crate::surfaces::octagon::{cosh_dist_to_i, polar_coords, polar_point};
use crate::surfaces::{ChartKind, ChartPoint, DeckGroup, MagneticField, SurfaceModel};
use crate::trig::TrigSeries;
use crate::variation::{self, InitialPlane, PotentialTrace};

/// Tolerance on `Omega - c K dA - d rho`.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// The correction 1-form `rho` in `Omega = c K dA + d rho`.
#[derive(Clone, Debug)]
pub enum Correction {
    Zero,
    /// `amplitude * F(r) dtheta` in geodesic polar coordinates about `i`,
    /// where `F(r) = int_0^r beta(s) sinh(s) ds`; its differential is
    /// `amplitude * beta dA`.
    RadialFlux { amplitude: f64, bump: RadialBump },
    /// `-w_y dx + w_x dy` on a flat torus; its differential is
    /// `(Laplacian w) dx dy`.
    CoGradient { potential: TrigSeries },
}

impl Correction {
    /// Chart components `(rho_x, rho_y)` at `z`.
    pub fn components(&self, z: ChartPoint) -> [f64; 2] {
        match self {
            Correction::Zero => [0.0; 2],
            Correction::RadialFlux { amplitude, bump } => {
                let (r, _) = polar_coords(z);
                if r >= bump.radius || r == 0.0 {
                    return [0.0; 2];
                }
                // theta = arg w with w = (z - i)/(z + i), so dtheta = Im(w'/w dz)
                let i = Complex64::i();
                let dlog = 2.0 * i / ((z - i) * (z + i));
                let s = amplitude * bump.flux(r);
                [s * dlog.im, s * dlog.re]
            }
            Correction::CoGradient { potential } => {
                let g = potential.gradient(z.re, z.im);
                [-g[1], g[0]]
            }
        }
    }

    /// Flat curl `d(rho) / (dx dy)` by a fourth-order central stencil.
    fn curl_fd(&self, z: ChartPoint, h: f64) -> f64 {
        let d = |e: Complex64, k: usize| {
            let at = |s: f64| self.components(z + e * s)[k];
            (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
        };
        d(Complex64::new(1.0, 0.0), 1) - d(Complex64::i(), 0)
    }
}

/// Splitting `Omega = c K dA + d rho` used to evaluate the primitive
/// `Theta = -alpha - c psi + pi^* rho` of the twisted symplectic form.
#[derive(Clone, Debug)]
pub struct PrimitiveEvaluator {
    pub c: f64,
    pub rho: Correction,
}

impl PrimitiveEvaluator {
    /// `c = (int f dA) / (2 pi chi)` and the matching `rho` for the field
    /// representations that admit one in closed form.
    pub fn for_field(model: &SurfaceModel, field: &MagneticField) -> Result<Self> {
        model.check_field(field)?;
        let chi = model.euler_characteristic().ok_or_else(|| {
            Error::Unsupported(format!("{} is not a closed surface", model.name()))
        })?;
        if chi == 0 {
            let flat = model.has_constant_curvature();
            return match field {
                MagneticField::Constant(l) if *l == 0.0 => Ok(Self {
                    c: 0.0,
                    rho: Correction::Zero,
                }),
                MagneticField::Trig { mean, series } if *mean == 0.0 && flat => {
                    let potential = series.poisson_inverse().ok_or_else(|| {
                        Error::Unsupported("field has a constant trigonometric term".into())
                    })?;
                    Ok(Self {
                        c: 0.0,
                        rho: Correction::CoGradient { potential },
                    })
                }
                _ => Err(Error::Unsupported(
                    "on a torus only exact fields on the flat metric have a primitive here".into(),
                )),
            };
        }
        if !model.has_constant_curvature() {
            return Err(Error::Unsupported("variable curvature".into()));
        }
        let k = model.curvature(model.centre())?;
        match field {
            MagneticField::Constant(l) => Ok(Self {
                c: l / k,
                rho: Correction::Zero,
            }),
            MagneticField::Bump {
                base,
                amplitude,
                bump,
            } if matches!(model.deck(), DeckGroup::Fuchsian(_)) => Ok(Self {
                c: base / k,
                rho: Correction::RadialFlux {
                    amplitude: *amplitude,
                    bump: *bump,
                },
            }),
            _ => Err(Error::Unsupported("no primitive for this field on this model".into())),
        }
    }

    /// `rho_x(v)` for a unit vector, after moving `p` into the fundamental
    /// domain.
    pub fn rho_value(&self, model: &SurfaceModel, p: &UnitPhasePoint) -> Result<f64> {
        if matches!(self.rho, Correction::Zero) {
            return Ok(0.0);
        }
        let mut q = *p;
        if let DeckGroup::Fuchsian(g) = model.deck() {
            if cosh_dist_to_i(q.z) > g.cosh_inradius() {
                if let Some(r) = model.recenter(q.z)? {
                    q.z = r.point;
                    q.phi += r.turn;
                }
            }
        }
        let [rx, ry] = self.rho.components(q.z);
        let (s, c) = q.phi.sin_cos();
        Ok((-model.sigma(q.z)?.sigma).exp() * (rx * c + ry * s))
    }

    /// `max |f - c K - (d rho)/dA|` over a grid of the fundamental domain,
    /// with `d rho` from finite differences.
    pub fn consistency_residual(&self, model: &SurfaceModel, field: &MagneticField) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for z in domain_points(model, 24)? {
            let (f, _) = model.field_at(field, z)?;
            let k = model.curvature(z)?;
            let density = self.rho.curl_fd(z, 1e-3) * (-2.0 * model.sigma(z)?.sigma).exp();
            worst = worst.max((f - self.c * k - density).abs());
        }
        Ok(worst)
    }
}

/// `Theta(X) = -1 - c f(x) + rho_x(v)`.
pub fn contact_value(
    model: &SurfaceModel,
    pe: &PrimitiveEvaluator,
    field: &MagneticField,
    p: &UnitPhasePoint,
) -> Result<f64> {
    let (f, _) = model.field_at(field, p.z)?;
    Ok(-1.0 - pe.c * f + pe.rho_value(model, p)?)
}

/// `int f dA` over the surface.
pub fn field_integral(model: &SurfaceModel, field: &MagneticField) -> Result<f64> {
    match field {
        MagneticField::Constant(l) => Ok(l * model.area()?),
        // The bump sits inside the inscribed disk, so its integral is its
        // total radial flux.
        MagneticField::Bump {
            base,
            amplitude,
            bump,
        } if matches!(model.deck(), DeckGroup::Fuchsian(_)) => {
            Ok(base * model.area()? + amplitude * TAU * model.scale() * bump.flux(bump.radius))
        }
        _ => model.integrate(|z| field.value(z)),
    }
}

/// Liouville action `-1 - (int f dA)^2 / (2 pi chi A)`, for `chi < 0`.
pub fn liouville_action_formula(model: &SurfaceModel, field: &MagneticField) -> Result<f64> {
    let chi = model.euler_characteristic().unwrap_or(0);
    if chi >= 0 {
        return Err(Error::Unsupported(
            "the action formula needs a surface of genus at least 2".into(),
        ));
    }
    model.check_field(field)?;
    let total = field_integral(model, field)?;
    let area = model.area()?;
    Ok(-1.0 - (total / area) * total / (TAU * chi as f64))
}

/// Liouville average of the contact value over `n` samples.
pub fn liouville_action_montecarlo(
    model: &SurfaceModel,
    field: &MagneticField,
    pe: &PrimitiveEvaluator,
    n: usize,
    seed: u64,
) -> Result<MonteCarlo> {
    let residual = pe.consistency_residual(model, field)?;
    if residual > CONSISTENCY_TOL {
        return Err(Error::Inconsistent { residual });
    }
    let values = per_sample(n, |k| {
        let p = magflow::liouville_draw(model, &mut magflow::sample_rng(seed, k))?;
        contact_value(model, pe, field, &p)
    })?;
    Ok(MonteCarlo::new(values))
}

/// Sampling parameters for orbit-based estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub samples: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Budget {
    pub fn new(samples: usize, horizon: f64, dt: f64, seed: u64) -> Self {
        Self {
            samples,
            horizon,
            dt,
            seed,
        }
    }
}

/// Evaluates `f(k)` for `k < n` in parallel, keeping sample order.
fn per_sample<F>(n: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Average over Liouville-sampled orbits of `n(T)/T`, the number of
/// crossings with the vertical of the plane transported from `plane`.
pub fn maslov_index_estimate(
    model: &SurfaceModel,
    field: &MagneticField,
    budget: Budget,
    plane: InitialPlane,
) -> Result<MonteCarlo> {
    let values = per_sample(budget.samples, |k| {
        let p = magflow::liouville_draw(model, &mut magflow::sample_rng(budget.seed, k))?;
        let orbit = magflow::integrate(model, field, p, budget.horizon, budget.dt)?;
        let pot = PotentialTrace::along(model, field, &orbit)?;
        Ok(variation::maslov_count_on(&pot, budget.horizon, plane).count as f64 / budget.horizon)
    })?;
    Ok(MonteCarlo::new(values))
}

/// Closed 1-forms on the surface, given by their chart components.
#[derive(Clone, Debug)]
pub enum ClosedForm {
    /// `a dx + b dy` on a torus.
    Linear { a: f64, b: f64 },
    /// `dg` for a periodic `g` on a torus.
    ExactTrig(TrigSeries),
    /// `d(beta(r))` for the radial bump about the octagon centre.
    ExactRadial(RadialBump),
}

impl ClosedForm {
    fn check(&self, model: &SurfaceModel) -> Result<()> {
        let ok = match (self, model.deck()) {
            (ClosedForm::Linear { .. }, DeckGroup::Lattice(_)) => true,
            (ClosedForm::ExactTrig(g), DeckGroup::Lattice(l)) => {
                let cell = l.v1[0].abs().max(l.v2[1].abs());
                g.periodic_on(cell)
            }
            (ClosedForm::ExactRadial(_), DeckGroup::Fuchsian(_)) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "this closed form is not defined on {}",
                model.name()
            )))
        }
    }

    /// Chart components at a point of the cover.
    pub fn components(&self, model: &SurfaceModel, z: ChartPoint) -> Result<[f64; 2]> {
        Ok(match self {
            ClosedForm::Linear { a, b } => [*a, *b],
            ClosedForm::ExactTrig(g) => g.gradient(z.re, z.im),
            ClosedForm::ExactRadial(bump) => {
                let as_field = MagneticField::Bump {
                    base: 0.0,
                    amplitude: 1.0,
                    bump: *bump,
                };
                model.field_at(&as_field, z)?.1
            }
        })
    }
}

/// Birkhoff averages `(1/T) int delta(gamma') dt` over Liouville-sampled
/// orbits, one entry per form.
pub fn asymptotic_cycle_estimate(
    model: &SurfaceModel,
    field: &MagneticField,
    forms: &[ClosedForm],
    budget: Budget,
) -> Result<Vec<MonteCarlo>> {
    for f in forms {
        f.check(model)?;
    }
    let rows: Vec<Vec<f64>> = (0..budget.samples as u64)
        .into_par_iter()
        .map(|k| {
            let p = magflow::liouville_draw(model, &mut magflow::sample_rng(budget.seed, k))?;
            forms
                .iter()
                .map(|form| {
                    let (_, _, total) = magflow::flow_with_observable(
                        model,
                        field,
                        p,
                        budget.horizon,
                        budget.dt,
                        |q, d| match form.components(model, q.z) {
                            Ok([a, b]) => a * d.dz.re + b * d.dz.im,
                            Err(_) => f64::NAN,
                        },
                    )?;
                    if total.is_nan() {
                        return Err(Error::Degenerate("closed form undefined along the orbit".into()));
                    }
                    Ok(total / budget.horizon)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..forms.len())
        .map(|j| MonteCarlo::new(rows.iter().map(|r| r[j]).collect()))
        .collect())
}

/// Mean of `u_E^2 + K + f^2` over Liouville samples, with `u_E` the
/// extrapolated stable Green bundle at horizon `budget.horizon`.
pub fn green_identity_estimate(model: &SurfaceModel, field: &MagneticField, budget: Budget) -> Result<MonteCarlo> {
    let values = per_sample(budget.samples, |k| {
        let p = magflow::liouville_draw(model, &mut magflow::sample_rng(budget.seed, k))?;
        let u = variation::green_bundle_limit(model, field, p, budget.horizon, budget.dt)?;
        let kz = model.curvature(p.z)?;
        let (f, _) = model.field_at(field, p.z)?;
        Ok(u * u + kz + f * f)
    })?;
    Ok(MonteCarlo::new(values))
}

/// Grid of points covering the fundamental domain (or the lower hemisphere
/// of the sphere chart), `n` per direction before clipping.
pub fn domain_points(model: &SurfaceModel, n: usize) -> Result<Vec<ChartPoint>> {
    let mut out = Vec::new();
    match (model.deck(), model.chart()) {
        (DeckGroup::Fuchsian(g), _) => {
            let rmax = g.cosh_circumradius().acosh();
            for i in 0..n {
                let r = (i as f64 + 0.5) / n as f64 * rmax;
                for j in 0..2 * n {
                    let z = polar_point(r, (j as f64 + 0.25) * PI / n as f64);
                    if g.contains(z) {
                        out.push(z);
                    }
                }
            }
        }
        (DeckGroup::Lattice(l), _) => {
            for i in 0..n {
                for j in 0..n {
                    let (s, t) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                    out.push(Complex64::new(
                        s * l.v1[0] + t * l.v2[0],
                        s * l.v1[1] + t * l.v2[1],
                    ));
                }
            }
        }
        (DeckGroup::Trivial, ChartKind::SphereChart) => {
            for i in 0..n {
                let rho = (i as f64 + 0.5) / n as f64;
                for j in 0..2 * n {
                    out.push(Complex64::from_polar(rho, j as f64 * PI / n as f64));
                }
            }
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "{} has no compact fundamental domain",
                model.name()
            )))
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Horocyclic,
    NotHorocyclic,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Horocyclic => "horocyclic",
            Verdict::NotHorocyclic => "not-horocyclic",
        })
    }
}

/// Pointwise tolerance for the curvature and field statistics.
pub const POINTWISE_TOL: f64 = 1e-6;
/// Absolute slack added to the `3 sigma` test, which would otherwise reject
/// rounding noise when an estimator has zero variance.
pub const STATISTICAL_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacterizationBudget {
    pub action_samples: usize,
    pub maslov: Budget,
    pub cycle_samples: usize,
}

impl CharacterizationBudget {
    pub fn new(action_samples: usize, maslov: Budget) -> Self {
        Self {
            action_samples,
            maslov,
            cycle_samples: maslov.samples.min(200),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub action_formula: f64,
    pub action_montecarlo: MonteCarlo,
    pub maslov_rate: MonteCarlo,
    pub asymptotic_cycle: Vec<Estimate>,
    pub curvature_variance: f64,
    pub field_variance: f64,
    pub max_curvature_defect: f64,
    pub verdict: Verdict,
}

/// Runs both invariant estimators and the pointwise tests `K, f` constant
/// with `K + f^2 = 0`; the verdict is horocyclic only when everything passes.
pub fn horocycle_characterization_test(
    model: &SurfaceModel,
    field: &MagneticField,
    budget: CharacterizationBudget,
) -> Result<InvariantReport> {
    if model.euler_characteristic().unwrap_or(0) >= 0 {
        return Err(Error::Unsupported(
            "the characterization applies to surfaces of genus at least 2".into(),
        ));
    }
    let pts = domain_points(model, 24)?;
    let mut ks = Vec::with_capacity(pts.len());
    let mut fs = Vec::with_capacity(pts.len());
    for z in &pts {
        ks.push(model.curvature(*z)?);
        fs.push(model.field_at(field, *z)?.0);
    }
    let max_curvature_defect = ks.iter().zip(&fs).map(|(k, f)| (k + f * f).abs()).fold(0.0, f64::max);
    let curvature_variance = variance(&ks);
    let field_variance = variance(&fs);

    let action_formula = liouville_action_formula(model, field)?;
    let pe = PrimitiveEvaluator::for_field(model, field)?;
    let action_montecarlo = liouville_action_montecarlo(model, field, &pe, budget.action_samples, budget.maslov.seed)?;
    let maslov_rate = maslov_index_estimate(model, field, budget.maslov, InitialPlane::HORIZONTAL)?;
    let cycle_budget = Budget {
        samples: budget.cycle_samples,
        ..budget.maslov
    };
    let radius = match model.deck() {
        DeckGroup::Fuchsian(g) => g.cosh_inradius().acosh(),
        _ => unreachable!("genus checked above"),
    };
    let asymptotic_cycle = asymptotic_cycle_estimate(model, field, &[ClosedForm::ExactRadial(RadialBump::new(radius))], cycle_budget)?
        .into_iter()
        .map(|m| m.estimate)
        .collect();

    let pointwise = curvature_variance <= POINTWISE_TOL
        && field_variance <= POINTWISE_TOL
        && max_curvature_defect <= POINTWISE_TOL;
    let statistical = action_montecarlo.estimate.consistent_with(0.0, 3.0, STATISTICAL_FLOOR)
        && maslov_rate.estimate.consistent_with(0.0, 3.0, STATISTICAL_FLOOR);
    let verdict = if pointwise && statistical {
        Verdict::Horocyclic
    } else {
        Verdict::NotHorocyclic
    };
    Ok(InvariantReport {
        action_formula,
        action_montecarlo,
        maslov_rate,
        asymptotic_cycle,
        curvature_variance,
        field_variance,
        max_curvature_defect,
        verdict,
    })
}

/// Both sides of `A_2 a(mu^1) = A_1 a(mu^2)` for the octagon surface with
/// curvature `-k1` and field `lambda1`, against its rescaling by `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugacyCheck {
    pub area1: f64,
    pub area2: f64,
    pub action1: f64,
    pub action2: f64,
    /// `|A_2 a_1 - A_1 a_2| / max(A_1, A_2)`.
    pub residual: f64,
    /// The two unit-speed flows are conjugate without time change, which
    /// for this family happens when both are horocyclic (`lambda^2 = k`).
    pub conjugate: bool,
}

pub fn conjugacy_action_identity_check(lambda1: f64, k1: f64, a: f64) -> Result<ConjugacyCheck> {
    if !(k1 > 0.0 && a > 0.0) {
        return Err(Error::InvalidArgument("curvature magnitude and scale must be positive".into()));
    }
    let m1 = SurfaceModel::genus2_octagon_scaled(1.0 / k1);
    let m2 = SurfaceModel::genus2_octagon_scaled(a / k1);
    let f1 = MagneticField::constant(lambda1);
    let f2 = MagneticField::constant(lambda1 / a.sqrt());
    let (area1, area2) = (m1.area()?, m2.area()?);
    let action1 = liouville_action_formula(&m1, &f1)?;
    let action2 = liouville_action_formula(&m2, &f2)?;
    Ok(ConjugacyCheck {
        area1,
        area2,
        action1,
        action2,
        residual: (area2 * action1 - area1 * action2).abs() / area1.max(area2),
        conjugate: a == 1.0 || lambda1 * lambda1 == k1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::TrigTerm;

    fn g2() -> SurfaceModel {
        SurfaceModel::genus2_octagon()
    }

    #[test]
    fn contact_values() {
        let m = g2();
        let p = UnitPhasePoint::new(0.2, 1.3, 0.7);
        for (lam, want) in [(1.0, 0.0), (0.0, -1.0), (0.5, -0.75)] {
            let f = MagneticField::constant(lam);
            let pe = PrimitiveEvaluator::for_field(&m, &f).unwrap();
            assert!((contact_value(&m, &pe, &f, &p).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn action_formula_values() {
        let m = g2();
        for lam in [0.0, 0.5, 1.0, 2.0] {
            let a = liouville_action_formula(&m, &MagneticField::constant(lam)).unwrap();
            assert!((a - (lam * lam - 1.0)).abs() < 1e-14);
        }
        assert_eq!(liouville_action_formula(&m, &MagneticField::constant(1.0)).unwrap(), 0.0);
        let bump = liouville_action_formula(&m, &MagneticField::octagon_bump(1.0, 0.3)).unwrap();
        assert!(bump.abs() < 1e-9, "{bump}");
        assert!(liouville_action_formula(&SurfaceModel::flat_torus(1.0), &MagneticField::constant(0.0)).is_err());
    }

    #[test]
    fn bump_primitive_is_consistent() {
        let m = g2();
        let f = MagneticField::octagon_bump(0.8, 0.3);
        let pe = PrimitiveEvaluator::for_field(&m, &f).unwrap();
        assert!((pe.c + 0.8).abs() < 1e-15);
        let res = pe.consistency_residual(&m, &f).unwrap();
        assert!(res < CONSISTENCY_TOL, "{res}");
        // a wrong c is detected
        let bad = PrimitiveEvaluator { c: -0.7, ..pe };
        assert!(matches!(
            liouville_action_montecarlo(&m, &f, &bad, 10, 1),
            Err(Error::Inconsistent { .. })
        ));
    }

    #[test]
    fn torus_cogradient_primitive() {
        let m = SurfaceModel::flat_torus(1.0);
        let series = TrigSeries::new(vec![TrigTerm {
            amplitude: 0.4,
            kx: TAU,
            ky: 2.0 * TAU,
            phase: 0.3,
        }]);
        let f = MagneticField::Trig { mean: 0.0, series };
        let pe = PrimitiveEvaluator::for_field(&m, &f).unwrap();
        assert!(pe.consistency_residual(&m, &f).unwrap() < 1e-8);
    }

    #[test]
    fn montecarlo_constant_is_exact() {
        let m = g2();
        let f = MagneticField::constant(0.0);
        let pe = PrimitiveEvaluator::for_field(&m, &f).unwrap();
        let mc = liouville_action_montecarlo(&m, &f, &pe, 200, 3).unwrap();
        assert_eq!(mc.estimate.mean, -1.0);
        assert_eq!(mc.estimate.stderr, 0.0);
    }

    #[test]
    fn montecarlo_bump_matches_formula() {
        let m = g2();
        let f = MagneticField::octagon_bump(0.8, 0.4);
        let pe = PrimitiveEvaluator::for_field(&m, &f).unwrap();
        let mc = liouville_action_montecarlo(&m, &f, &pe, 4000, 11).unwrap();
        let formula = liouville_action_formula(&m, &f).unwrap();
        assert!(mc.estimate.stderr > 0.0);
        assert!(mc.estimate.consistent_with(formula, 3.0, 0.0), "{:?} vs {formula}", mc.estimate);
    }

    #[test]
    fn flat_torus_circles_have_zero_cycle() {
        let m = SurfaceModel::flat_torus(1.0);
        let lam = 2.0;
        let f = MagneticField::constant(lam);
        let forms = [ClosedForm::Linear { a: 1.0, b: 0.0 }, ClosedForm::Linear { a: 0.0, b: 1.0 }];
        let period = TAU / lam;
        let out = asymptotic_cycle_estimate(&m, &f, &forms, Budget::new(20, 3.0 * period, 1e-3, 5)).unwrap();
        for mc in out {
            assert!(mc.contributions.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn exact_form_average_is_boundary_term() {
        let m = SurfaceModel::flat_torus(1.0);
        let g = TrigSeries::single(0.5, TAU, 0.0, 0.1);
        let f = MagneticField::constant(0.3);
        let b = Budget::new(8, 40.0, 1e-2, 9);
        let out = asymptotic_cycle_estimate(&m, &f, &[ClosedForm::ExactTrig(g)], b).unwrap();
        // |g| <= 0.5, so the average is at most 1/T
        assert!(out[0].contributions.iter().all(|v| v.abs() <= 1.0 / 40.0 + 1e-9));
    }

    #[test]
    fn maslov_sphere_and_strong_field() {
        let b = Budget::new(8, 50.0, 1e-2, 1);
        let s = maslov_index_estimate(&SurfaceModel::sphere(), &MagneticField::constant(0.0), b, InitialPlane::HORIZONTAL).unwrap();
        assert!((s.estimate.mean - 1.0 / PI).abs() / (1.0 / PI) < 0.02, "{:?}", s.estimate);
        let h = maslov_index_estimate(&g2(), &MagneticField::constant(2.0), b, InitialPlane::HORIZONTAL).unwrap();
        let want = 3f64.sqrt() / PI;
        assert!((h.estimate.mean - want).abs() / want < 0.02);
        let z = maslov_index_estimate(&g2(), &MagneticField::constant(1.0), b, InitialPlane::HORIZONTAL).unwrap();
        assert_eq!(z.estimate.mean, 0.0);
    }

    #[test]
    fn green_identity_constant_cases() {
        for lam in [0.0, 1.0, 0.5] {
            let mc = green_identity_estimate(&g2(), &MagneticField::constant(lam), Budget::new(4, 20.0, 1e-2, 2)).unwrap();
            assert!(mc.estimate.consistent_with(0.0, 3.0, STATISTICAL_FLOOR), "{lam}: {:?}", mc.estimate);
        }
    }

    #[test]
    fn conjugacy_identity() {
        for a in [0.25, 0.5, 2.0, 3.0, 10.0] {
            let c = conjugacy_action_identity_check(1.0, 1.0, a).unwrap();
            assert!(c.conjugate);
            assert!(c.residual <= 1e-12, "{c:?}");
        }
        let c = conjugacy_action_identity_check(0.0, 1.0, 0.25).unwrap();
        assert!(!c.conjugate);
        assert!(c.residual > 0.1);
        assert_eq!(conjugacy_action_identity_check(0.7, 1.0, 1.0).unwrap().residual, 0.0);
    }

    #[test]
    fn verdicts() {
        let b = CharacterizationBudget::new(500, Budget::new(20, 20.0, 1e-2, 4));
        let r = horocycle_characterization_test(&g2(), &MagneticField::constant(1.0), b).unwrap();
        assert_eq!(r.verdict, Verdict::Horocyclic);
        let r = horocycle_characterization_test(&g2(), &MagneticField::constant(0.5), b).unwrap();
        assert_eq!(r.verdict, Verdict::NotHorocyclic);
        assert!((r.action_formula + 0.75).abs() < 1e-14);
        let r = horocycle_characterization_test(&g2(), &MagneticField::constant(2.0), b).unwrap();
        assert_eq!(r.verdict, Verdict::NotHorocyclic);
        assert!(r.maslov_rate.estimate.mean > 0.4);
    }
}
