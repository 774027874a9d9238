//! Closed magnetic geodesics of energy `k` in the free homotopy class of a
//! deck transformation `phi`, found as minimisers of `x -> Phi_k(x, phi x)`.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use super::action::segment_gradient;
use super::potential::{PotentialOptions, PotentialQuery, PotentialSolver};
use super::primitive::{DeckMap, PrimitiveField};
use crate::error::{Error, Result};
use crate::invariants::domain_points;
use crate::magflow::{flow_map, integrate, OrbitSegment, UnitPhasePoint};
use crate::surfaces::{ChartKind, ChartPoint, MagneticField, SurfaceModel};

#[derive(Clone, Debug)]
pub struct ClosedOrbitOptions {
    /// Potential solver used during the search over start points.
    pub search: PotentialOptions,
    /// Segments of the final connecting minimiser.
    pub final_segments: usize,
    /// Start points per direction of the fundamental-domain grid.
    pub grid: usize,
    /// Largest accepted mismatch `|d phi(v(0)) - v(T)| / |v|` of the minimiser.
    pub closing_tol: f64,
    /// Required gap `k - sup |theta|^2 / 2`.
    pub margin: f64,
    pub max_simplex_iters: u64,
}

impl Default for ClosedOrbitOptions {
    fn default() -> Self {
        Self {
            search: PotentialOptions::default(),
            final_segments: 128,
            grid: 3,
            closing_tol: 1e-3,
            margin: 1e-3,
            max_simplex_iters: 80,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClosedOrbit {
    pub k: f64,
    /// `Phi_k(x, phi x)` at the minimiser.
    pub potential: f64,
    /// Velocity mismatch of the discrete minimiser relative to its speed.
    pub closing_defect: f64,
    /// Period at energy `k`.
    pub period: f64,
    pub length: f64,
    /// Mismatch between the re-integrated orbit's end and `d phi` of its start.
    pub periodicity_residual: f64,
    pub energy_residual: f64,
    pub start: UnitPhasePoint,
    /// Arc-length parametrised orbit on the cover.
    pub orbit: OrbitSegment,
    pub minimiser: PotentialQuery,
}

struct Search<'s, 'a> {
    solver: &'s PotentialSolver<'a>,
    phi: DeckMap,
    chart: ChartKind,
}

impl Search<'_, '_> {
    fn point(&self, p: &[f64]) -> ChartPoint {
        match self.chart {
            ChartKind::UpperHalfPlane => Complex64::new(p[0], p[1].exp()),
            _ => Complex64::new(p[0], p[1]),
        }
    }

    fn params(&self, z: ChartPoint) -> Vec<f64> {
        match self.chart {
            ChartKind::UpperHalfPlane => vec![z.re, z.im.ln()],
            _ => vec![z.re, z.im],
        }
    }

    fn value(&self, z: ChartPoint) -> Result<f64> {
        Ok(self.solver.query(z, self.phi.apply(z))?.value)
    }
}

impl CostFunction for &Search<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        self.value(self.point(p)).map_err(argmin::core::Error::new)
    }
}

fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    a - t * ((a + 0.5 * t) / t).floor()
}

/// Searches for a closed magnetic geodesic with energy `k` freely homotopic
/// to `phi`, for a primitive `theta` invariant under `phi` and
/// `sup |theta|^2 / 2 <= k - margin`.
pub fn closed_orbit_search(
    model: &SurfaceModel,
    field: &MagneticField,
    theta: &PrimitiveField,
    phi: DeckMap,
    k: f64,
    opts: &ClosedOrbitOptions,
) -> Result<ClosedOrbit> {
    model.check_field(field)?;
    if phi.is_identity() {
        return Err(Error::InvalidArgument("the trivial class has no closed geodesic".into()));
    }
    let cover = model.universal_cover();
    let probes = domain_points(model, 6)?;
    let sup = theta.sup_norm(&cover, &probes)?;
    if 0.5 * sup * sup > k - opts.margin {
        return Err(Error::InvalidArgument(format!(
            "energy {k} is not above sup |theta|^2/2 = {} by the margin {}",
            0.5 * sup * sup,
            opts.margin
        )));
    }
    let defect = theta.invariance_defect(&cover, phi, &probes)?;
    if defect > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "primitive is not invariant under the class (defect {defect:e}); average it first"
        )));
    }

    let solver = PotentialSolver::new(&cover, theta, k, opts.search.clone())?;
    let search = Search {
        solver: &solver,
        phi,
        chart: cover.chart(),
    };
    let mut starts = vec![model.centre()];
    starts.extend(domain_points(model, opts.grid)?);
    let mut best = (f64::INFINITY, starts[0]);
    for z in starts {
        let v = search.value(z)?;
        if v < best.0 {
            best = (v, z);
        }
    }
    let x0 = search.params(best.1);
    let step = 0.05 * model.scale().sqrt();
    let simplex = vec![x0.clone(), vec![x0[0] + step, x0[1]], vec![x0[0], x0[1] + step]];
    let nm = NelderMead::new(simplex)
        .with_sd_tolerance(1e-9)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let res = Executor::new(&search, nm)
        .configure(|s| s.max_iters(opts.max_simplex_iters))
        .run()
        .map_err(|e| match e.downcast::<Error>() {
            Ok(err) => err,
            Err(other) => Error::InvalidArgument(other.to_string()),
        })?;
    let xbest = search.point(res.state().best_param.as_ref().unwrap_or(&x0));

    let fine = PotentialSolver::new(
        &cover,
        theta,
        k,
        PotentialOptions {
            segments: opts.final_segments,
            ..opts.search.clone()
        },
    )?;
    let q = fine.query(xbest, phi.apply(xbest))?;
    let (v0, v1) = endpoint_velocities(&cover, theta, &q)?;
    let z0 = q.nodes[0];
    let pushed = phi.derivative(z0) * v0;
    let speed = (2.0 * k).sqrt();
    let zn = *q.nodes.last().expect("nonempty minimiser");
    let closing_defect = cover.norm(zn, pushed - v1)? / speed;
    if closing_defect > opts.closing_tol {
        return Err(Error::ClosingDefect {
            defect: closing_defect,
        });
    }

    // Shooting polish on the arc-length flow, which has field f / sqrt(2k).
    let unit_field = field.scaled(1.0 / speed);
    let mut length = 0.0;
    for w in q.nodes.windows(2) {
        length += cover.norm(0.5 * (w[0] + w[1]), w[1] - w[0])?;
    }
    let mut u = [z0.re, z0.im, v0.arg(), length];
    let residual = |u: &[f64; 4]| -> Result<[f64; 3]> {
        let p = UnitPhasePoint::new(u[0], u[1], u[2]);
        let dt = (u[3] / 2000.0).min(1e-2);
        let (end, _) = flow_map(&cover, &unit_field, p, u[3], dt)?;
        let z = p.z;
        let target = phi.apply(z);
        let turn = phi.derivative(z).arg();
        let scale = (-cover.sigma(target)?.sigma).exp().recip();
        Ok([
            (end.z.re - target.re) * scale,
            (end.z.im - target.im) * scale,
            wrap(end.phi - u[2] - turn),
        ])
    };
    let mut r = residual(&u)?;
    for _ in 0..20 {
        let rn = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if rn < 1e-11 {
            break;
        }
        let mut jac = Mat::<f64>::zeros(3, 4);
        for c in 0..4 {
            let h = 1e-6 * if c == 1 { u[1].abs().max(1e-3) } else { 1.0 };
            let mut up = u;
            let mut um = u;
            up[c] += h;
            um[c] -= h;
            let (rp, rm) = (residual(&up)?, residual(&um)?);
            for i in 0..3 {
                jac[(i, c)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        // Minimum-norm step: the orbit can slide along itself.
        let jjt = &jac * jac.transpose();
        let tr = (0..3).map(|i| jjt[(i, i)]).sum::<f64>();
        let reg = Mat::<f64>::from_fn(3, 3, |i, j| jjt[(i, j)] + if i == j { 1e-12 * tr } else { 0.0 });
        let rhs = Mat::<f64>::from_fn(3, 1, |i, _| -r[i]);
        let w = reg.partial_piv_lu().solve(&rhs);
        let du = jac.transpose() * &w;
        let mut alpha = 1.0;
        loop {
            let trial = [
                u[0] + alpha * du[(0, 0)],
                u[1] + alpha * du[(1, 0)],
                u[2] + alpha * du[(2, 0)],
                u[3] + alpha * du[(3, 0)],
            ];
            if let Ok(rt) = residual(&trial) {
                if rt.iter().map(|v| v.abs()).fold(0.0, f64::max) < rn {
                    u = trial;
                    r = rt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(Error::NonConvergence {
                    what: "closed-orbit shooting",
                    iterations: 20,
                    residual: rn,
                });
            }
        }
    }
    let start = UnitPhasePoint::new(u[0], u[1], u[2]);
    let orbit = integrate(&cover, &unit_field, start, u[3], (u[3] / 2000.0).min(1e-2))?;
    let end = orbit.last();
    let target = UnitPhasePoint::new(
        phi.apply(start.z).re,
        phi.apply(start.z).im,
        start.phi + phi.derivative(start.z).arg(),
    );
    let periodicity_residual = (end.z - target.z).norm() / (-cover.sigma(target.z)?.sigma).exp()
        + wrap(end.phi - target.phi).abs();
    Ok(ClosedOrbit {
        k,
        potential: q.value,
        closing_defect,
        period: u[3] / speed,
        length: u[3],
        periodicity_residual,
        energy_residual: orbit.max_energy_residual(),
        start,
        orbit,
        minimiser: q,
    })
}

/// Velocities at both ends of the discrete minimiser from its endpoint
/// momenta `p = e^{2 sigma} v - theta`.
fn endpoint_velocities(model: &SurfaceModel, theta: &PrimitiveField, q: &PotentialQuery) -> Result<(Complex64, Complex64)> {
    let n = q.nodes.len() - 1;
    let h = q.duration / n as f64;
    let (g0, _) = segment_gradient(model, theta, q.nodes[0], q.nodes[1], h)?;
    let (_, gn) = segment_gradient(model, theta, q.nodes[n - 1], q.nodes[n], h)?;
    let vel = |z: ChartPoint, p: Complex64| -> Result<Complex64> {
        Ok((p + theta.covector(z)) * (-2.0 * model.sigma(z)?.sigma).exp())
    };
    Ok((vel(q.nodes[0], -g0)?, vel(q.nodes[n], gn)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::FuchsianGroup;

    #[test]
    fn flat_torus_unit_loop() {
        let m = SurfaceModel::flat_torus(1.0);
        let f = MagneticField::constant(0.0);
        let phi = DeckMap::Translation(Complex64::new(1.0, 0.0));
        let o = closed_orbit_search(&m, &f, &PrimitiveField::Zero, phi, 0.5, &ClosedOrbitOptions::default()).unwrap();
        assert!((o.length - 1.0).abs() < 1e-9, "{}", o.length);
        assert!((o.potential - 1.0).abs() < 1e-6, "{}", o.potential);
        assert!(o.closing_defect < 1e-6);
    }

    #[test]
    fn hyperbolic_closed_geodesic() {
        let m = SurfaceModel::genus2_octagon();
        let a = FuchsianGroup::genus2_octagon().generators()[0];
        let f = MagneticField::constant(0.0);
        let o = closed_orbit_search(&m, &f, &PrimitiveField::Zero, DeckMap::Mobius(a), 0.5, &ClosedOrbitOptions::default())
            .unwrap();
        let [[p, _], [_, s]] = a.matrix();
        let want = 2.0 * ((p + s).abs() / 2.0).acosh();
        assert!((o.length - want).abs() < 1e-4, "{} {want}", o.length);
        assert!(o.periodicity_residual < 1e-8);
    }

    #[test]
    fn magnetic_hypercycle_period() {
        // Equidistant curve at distance r with tanh r = lambda: length l_a cosh r.
        let m = SurfaceModel::genus2_octagon();
        let a = FuchsianGroup::genus2_octagon().generators()[0];
        let lambda = 0.5;
        let f = MagneticField::constant(lambda);
        let theta = PrimitiveField::horocyclic_invariant_under(lambda, &a).unwrap();
        let o = closed_orbit_search(&m, &f, &theta, DeckMap::Mobius(a), 0.5, &ClosedOrbitOptions::default()).unwrap();
        let [[p, _], [_, s]] = a.matrix();
        let la = 2.0 * ((p + s).abs() / 2.0).acosh();
        let want = la / (1.0 - lambda * lambda).sqrt();
        assert!((o.period - want).abs() < 1e-3, "{} {want}", o.period);
        assert!(o.closing_defect < 1e-3);
    }

    #[test]
    fn rejects_non_invariant_primitive() {
        let m = SurfaceModel::genus2_octagon();
        let a = FuchsianGroup::genus2_octagon().generators()[0];
        let f = MagneticField::constant(0.3);
        let theta = PrimitiveField::horocyclic(0.3);
        let err = closed_orbit_search(&m, &f, &theta, DeckMap::Mobius(a), 0.5, &ClosedOrbitOptions::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
