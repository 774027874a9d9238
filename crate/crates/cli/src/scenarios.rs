use horoflow::critical::{
    closed_orbit_search, critical_value_solve, default_primitive, ClosedOrbitOptions, CriticalOptions, DeckMap,
    PrimitiveField,
};
use horoflow::invariants::{horocycle_characterization_test, Budget, CharacterizationBudget, Verdict};
use horoflow::magflow::{integrate, liouville_samples, OrbitSegment, UnitPhasePoint};
use horoflow::sl2::horocycle_commutation_residual;
use horoflow::surfaces::{DeckGroup, DeckWord, Letter, MagneticField, SurfaceModel};
use horoflow::variation::{conjugate_points, jacobi_integrate, maslov_count, riccati_integrate, InitialPlane};
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{ExperimentConfig, Scenario};
use crate::output::{nums, Artifacts, Cell, Obj};
use crate::RunError;

/// What a scenario reports back: the one-line summary, whether its verdict
/// passed, and extra manifest entries that are not reproducible (timings).
pub struct Report {
    pub summary: String,
    pub passed: bool,
    pub timing: Option<Value>,
}

impl Report {
    fn ok(summary: String) -> Self {
        Self {
            summary,
            passed: true,
            timing: None,
        }
    }
}

pub fn dispatch(scenario: Scenario, cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    match scenario {
        Scenario::CheckAlgebra => check_algebra(cfg, art),
        Scenario::Simulate => simulate(cfg, art),
        Scenario::Variation => variation(cfg, art),
        Scenario::Invariants => invariants(cfg, art),
        Scenario::CriticalValue => critical_value(cfg, art),
        Scenario::ClosedOrbit => closed_orbit(cfg, art),
        Scenario::Acceptance => acceptance(cfg, art),
    }
}

const ALGEBRA_TOL: f64 = 1e-12;

fn check_algebra(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    let n = cfg.numerics.grid.unwrap_or(41);
    let r = cfg.numerics.range.unwrap_or(10.0);
    let axis = |k: usize| if n == 1 { 0.0 } else { -r + 2.0 * r * k as f64 / (n - 1) as f64 };
    let rows: Vec<(f64, f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (t, s) = (axis(k / n), axis(k % n));
            (t, s, horocycle_commutation_residual(t, s))
        })
        .collect();
    let max = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    art.csv("residuals.csv", &["t", "s", "residual"], rows.iter().map(|&(t, s, e)| vec![t.into(), s.into(), e.into()]))?;
    let passed = max <= ALGEBRA_TOL;
    art.json(
        "algebra.json",
        &Obj::new()
            .v("points", n * n)
            .f("range", r)
            .f("max_residual", max)
            .f("tolerance", ALGEBRA_TOL)
            .v("passed", passed)
            .build(),
    )?;
    Ok(Report {
        summary: format!("check-algebra: max commutation residual {max:.3e} over {} points", n * n),
        passed,
        timing: None,
    })
}

fn point_json(p: &UnitPhasePoint) -> Value {
    Obj::new().f("x", p.z.re).f("y", p.z.im).f("phi", p.phi).build()
}

fn orbit_rows(o: &OrbitSegment, tag: Option<usize>) -> Vec<Vec<Cell>> {
    let lengths = o.word_lengths();
    o.t.iter()
        .zip(&o.states)
        .zip(lengths)
        .map(|((t, p), w)| {
            let mut row = Vec::with_capacity(6);
            if let Some(k) = tag {
                row.push(Cell::from(k));
            }
            row.extend([Cell::F(*t), Cell::F(p.z.re), Cell::F(p.z.im), Cell::F(p.phi), Cell::from(w)]);
            row
        })
        .collect()
}

fn start_point(cfg: &ExperimentConfig, model: &SurfaceModel) -> UnitPhasePoint {
    match cfg.start {
        Some(s) => UnitPhasePoint::new(s.x, s.y, s.phi),
        None => {
            let c = model.centre();
            UnitPhasePoint::new(c.re, c.im, 0.0)
        }
    }
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    let model = cfg.model()?;
    let field = cfg.field()?;
    let dt = cfg.numerics.dt.unwrap_or(1e-2);
    let horizon = cfg.numerics.horizon.unwrap_or(10.0);
    let starts = match (cfg.start, cfg.seed) {
        (Some(_), _) => vec![start_point(cfg, &model)],
        (None, Some(seed)) => liouville_samples(&model, seed, cfg.numerics.samples.unwrap_or(1))?,
        (None, None) => unreachable!("validated: seed present"),
    };
    let orbits: Vec<OrbitSegment> = starts
        .par_iter()
        .map(|p| integrate(&model, &field, *p, horizon, dt))
        .collect::<horoflow::Result<_>>()?;
    art.csv(
        "orbit.csv",
        &["orbit", "t", "x", "y", "phi", "word_length"],
        orbits.iter().enumerate().flat_map(|(k, o)| orbit_rows(o, Some(k))),
    )?;
    let worst = orbits.iter().map(|o| o.max_energy_residual()).fold(0.0, f64::max);
    let per_orbit: Vec<Value> = orbits
        .iter()
        .map(|o| {
            Obj::new()
                .v("start", point_json(o.first()))
                .v("end", point_json(o.last()))
                .v("steps", o.len() - 1)
                .f("duration", o.duration())
                .v("total_word", model.deck().format_word(&o.total_word()))
                .f("max_energy_residual", o.max_energy_residual())
                .build()
        })
        .collect();
    art.json(
        "diagnostics.json",
        &Obj::new()
            .v("model", model.name())
            .f("dt", dt)
            .f("horizon", horizon)
            .f("max_energy_residual", worst)
            .v("orbits", per_orbit)
            .build(),
    )?;
    Ok(Report::ok(format!(
        "simulate: {} orbit(s) to T = {horizon} on {}, max energy residual {worst:.3e}",
        orbits.len(),
        model.name()
    )))
}

fn variation(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    let model = cfg.model()?;
    let field = cfg.field()?;
    let dt = cfg.numerics.dt.unwrap_or(1e-3);
    let horizon = cfg.numerics.horizon.unwrap_or(10.0);
    let v = &cfg.variation;
    let plane = InitialPlane {
        y0: v.y0.unwrap_or(0.0),
        ydot0: v.ydot0.unwrap_or(1.0),
    };
    let orbit = integrate(&model, &field, start_point(cfg, &model), horizon, dt)?;
    let jac = jacobi_integrate(&model, &field, &orbit, plane.y0, plane.ydot0, 0.0)?;
    let ric = riccati_integrate(&model, &field, &orbit, v.u0.unwrap_or(0.0))?;
    let conj = conjugate_points(&model, &field, &orbit, horizon)?;
    let maslov = maslov_count(&model, &field, &orbit, horizon, plane)?;
    art.csv(
        "traces.csv",
        &["t", "y", "ydot", "u"],
        (0..jac.t.len()).map(|k| vec![jac.t[k].into(), jac.y[k].into(), jac.ydot[k].into(), ric.u[k].into()]),
    )?;
    art.json(
        "conjugate_points.json",
        &Obj::new()
            .v("conjugate_points", nums(&conj))
            .v("riccati_blowups", nums(&ric.blowups))
            .v("maslov_crossings", maslov.count)
            .f("horizon", horizon)
            .build(),
    )?;
    Ok(Report::ok(format!(
        "variation: {} conjugate point(s) on [0, {horizon}], {} Maslov crossing(s)",
        conj.len(),
        maslov.count
    )))
}

fn invariants(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    let model = cfg.model()?;
    let field = cfg.field()?;
    let seed = cfg.seed.expect("validated: seed present");
    let n = &cfg.numerics;
    let maslov = Budget::new(n.samples.unwrap_or(1000), n.horizon.unwrap_or(50.0), n.dt.unwrap_or(1e-2), seed);
    let budget = CharacterizationBudget::new(n.action_samples.unwrap_or(1000), maslov);
    let r = horocycle_characterization_test(&model, &field, budget)?;
    let est = |e: horoflow::stats::Estimate| Obj::new().f("mean", e.mean).f("stderr", e.stderr).v("n", e.n).build();
    art.json(
        "report.json",
        &Obj::new()
            .v("model", model.name())
            .f("action_formula", r.action_formula)
            .v("action_montecarlo", est(r.action_montecarlo.estimate))
            .v("maslov_rate", est(r.maslov_rate.estimate))
            .v("asymptotic_cycle", r.asymptotic_cycle.iter().map(|e| est(*e)).collect::<Vec<_>>())
            .f("curvature_variance", r.curvature_variance)
            .f("field_variance", r.field_variance)
            .f("max_curvature_defect", r.max_curvature_defect)
            .v("verdict", r.verdict.to_string())
            .build(),
    )?;
    let rows = r
        .action_montecarlo
        .contributions
        .iter()
        .enumerate()
        .map(|(k, v)| vec!["action".into(), k.into(), (*v).into()])
        .chain(
            r.maslov_rate
                .contributions
                .iter()
                .enumerate()
                .map(|(k, v)| vec!["maslov_rate".into(), k.into(), (*v).into()]),
        );
    art.csv("contributions.csv", &["estimator", "sample", "value"], rows)?;
    Ok(Report {
        summary: format!(
            "invariants: {} (action {:.6}, Maslov rate {:.6})",
            r.verdict, r.action_formula, r.maslov_rate.estimate.mean
        ),
        passed: r.verdict == Verdict::Horocyclic,
        timing: None,
    })
}

fn critical_value(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    let model = cfg.model()?;
    let field = cfg.field()?;
    let opts = CriticalOptions {
        resolution: cfg.numerics.resolution.unwrap_or(256),
        ..Default::default()
    };
    let theta = default_primitive(&model, &field)?;
    let c = critical_value_solve(&model, &field, &theta, &opts)?;
    art.csv(
        "potential.csv",
        &["x", "y", "u"],
        c.nodes.iter().zip(&c.u_grid).map(|(z, u)| vec![z.re.into(), z.im.into(), (*u).into()]),
    )?;
    art.json(
        "certificate.json",
        &Obj::new()
            .v("model", model.name())
            .v("resolution", opts.resolution)
            .f("c_upper", c.c_upper)
            .f("c_lower", c.c_lower)
            .f("c_initial", c.c_initial)
            .v(
                "iterations",
                c.iterations.iter().map(|(p, k)| Value::from(vec![*p as usize, *k])).collect::<Vec<_>>(),
            )
            .v("method", c.method.clone())
            .build(),
    )?;
    Ok(Report::ok(format!(
        "critical-value: {:.8} <= c <= {:.8} on {}",
        c.c_lower,
        c.c_upper,
        model.name()
    )))
}

/// Parses `"a b^-1"` or `"T1^2 T2"` against the generator names of `deck`.
pub fn parse_word(deck: &DeckGroup, text: &str) -> Result<DeckWord, String> {
    let names = deck.generator_names();
    let mut letters = Vec::new();
    for tok in text.split_whitespace() {
        let (name, power) = match tok.split_once('^') {
            Some((n, p)) => (n, p.parse::<i32>().map_err(|_| format!("bad exponent in `{tok}`"))?),
            None => (tok, 1),
        };
        let g = names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| format!("unknown generator `{name}`, expected one of {names:?}"))?;
        if power != 0 {
            letters.push(Letter::new(g, power));
        }
    }
    if letters.is_empty() {
        return Err("the word is trivial".into());
    }
    Ok(DeckWord::from_letters(letters))
}

fn closed_orbit(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    let model = cfg.model()?;
    let field = cfg.field()?;
    let deck = model.deck();
    let default_word = match deck {
        DeckGroup::Lattice(_) => "T1",
        _ => "a",
    };
    let text = cfg.closed_orbit.word.as_deref().unwrap_or(default_word);
    let word = parse_word(deck, text).map_err(|message| RunError::Config(crate::config::ConfigError::Invalid {
        key: "closed_orbit.word".into(),
        message,
    }))?;
    let phi = DeckMap::from_word(deck, &word)?;
    let k = cfg.closed_orbit.energy.unwrap_or(0.5);
    let theta = match (phi, &field) {
        (DeckMap::Mobius(g), MagneticField::Constant(l)) if *l != 0.0 => {
            PrimitiveField::horocyclic_invariant_under(l * model.scale(), &g)?
        }
        _ => default_primitive(&model, &field)?,
    };
    let o = closed_orbit_search(&model, &field, &theta, phi, k, &ClosedOrbitOptions::default())?;
    art.csv("orbit.csv", &["t", "x", "y", "phi", "word_length"], orbit_rows(&o.orbit, None))?;
    art.json(
        "closed_orbit.json",
        &Obj::new()
            .v("word", deck.format_word(&word))
            .f("energy", k)
            .f("period", o.period)
            .f("length", o.length)
            .f("potential", o.potential)
            .f("closing_defect", o.closing_defect)
            .f("periodicity_residual", o.periodicity_residual)
            .f("energy_residual", o.energy_residual)
            .v("start", point_json(&o.start))
            .build(),
    )?;
    Ok(Report::ok(format!(
        "closed-orbit: class {} at k = {k}: length {:.10}, period {:.10}, closing defect {:.2e}",
        deck.format_word(&word),
        o.length,
        o.period,
        o.closing_defect
    )))
}

fn acceptance(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Report, RunError> {
    let seed = cfg.seed.expect("validated: seed present");
    let ids = cfg.acceptance.criteria.clone().unwrap_or_else(|| horoflow_acceptance::IDS.to_vec());
    let mut records = Vec::new();
    let mut timing = Vec::new();
    let mut failed = 0;
    for id in ids {
        let o = horoflow_acceptance::run(id, seed);
        println!("{}", o.summary());
        failed += usize::from(!o.passed());
        let checks: Vec<Value> = o
            .checks
            .iter()
            .map(|c| {
                Obj::new()
                    .v("label", c.label.clone())
                    .f("error", c.error)
                    .f("limit", c.limit)
                    .v("passed", c.passed)
                    .build()
            })
            .collect();
        records.push(
            Obj::new()
                .v("id", id)
                .v("title", o.title)
                .v("checks", checks)
                .v("error", o.error.clone())
                .build(),
        );
        timing.push(
            Obj::new()
                .v("id", id)
                .f("elapsed_s", o.elapsed.as_secs_f64())
                .f("budget_s", o.budget.as_secs_f64())
                .v("passed", o.passed())
                .build(),
        );
    }
    art.json("acceptance.json", &Obj::new().v("seed", seed).v("criteria", records).build())?;
    Ok(Report {
        summary: format!("acceptance: {} of {} criteria passed", timing.len() - failed, timing.len()),
        passed: failed == 0,
        timing: Some(Value::Array(timing)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::num;

    #[test]
    fn words_parse_against_generator_names() {
        let m = SurfaceModel::flat_torus(1.0);
        let w = parse_word(m.deck(), "T1^-2 T2").unwrap();
        assert_eq!(m.deck().format_word(&w), "T1^-2 T2^1");
        assert!(parse_word(m.deck(), "a").is_err());
        assert!(parse_word(m.deck(), "T1^x").is_err());
        assert!(parse_word(m.deck(), "T1^0").is_err());
        let g = SurfaceModel::genus2_octagon();
        assert_eq!(parse_word(g.deck(), "a b^-1").unwrap().len(), 2);
    }

    #[test]
    fn json_numbers_use_fixed_format() {
        let v = Obj::new().f("x", 1.0).build();
        assert_eq!(serde_json::to_string(&v).unwrap(), "{\"x\":1.0000000000000000e+0}");
        assert_eq!(num(2.5).to_string(), "2.5000000000000000e+0");
    }
}
