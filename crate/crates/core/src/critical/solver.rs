//! Upper and lower bounds for the critical value
//! `c = inf_u sup_x |du + theta|^2 / 2`.
//!
//! The sup is replaced by `L^p` norms for an increasing schedule of `p`. Each
//! stage is a smooth convex problem over P1 finite-element potentials, solved
//! by damped Newton with a sparse Cholesky factorisation whose symbolic
//! analysis is shared by all steps.

use std::f64::consts::TAU;

use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{Pair, SparseColMat, SymbolicSparseColMat};
use faer::linalg::solvers::Solve;
use faer::{Col, Side};
use num_complex::Complex64;

use super::primitive::PrimitiveField;
use crate::error::{Error, Result};
use crate::surfaces::octagon::polar_point;
use crate::surfaces::{ChartKind, ChartPoint, DeckGroup, MagneticField, SurfaceModel};

/// Triangle mesh. Each triangle carries its own vertex positions so that
/// periodic meshes can refer to wrapped node indices.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub n_nodes: usize,
    pub positions: Vec<ChartPoint>,
    pub triangles: Vec<([usize; 3], [ChartPoint; 3])>,
}

/// Mesh of the geodesic disk of radius `radius` about `i` in the upper
/// half-plane, with rings `h` apart and about `2 pi sinh(r) / h` nodes per ring.
pub fn hyperbolic_disk_mesh(radius: f64, h: f64) -> Mesh {
    let n_rings = (radius / h).ceil() as usize;
    let dr = radius / n_rings as f64;
    let mut positions = vec![polar_point(0.0, 0.0)];
    let mut rings: Vec<(usize, usize, f64)> = Vec::new();
    for i in 1..=n_rings {
        let r = i as f64 * dr;
        let m = ((TAU * r.sinh() / dr).round() as usize).max(6);
        let offset = if i % 2 == 0 { 0.0 } else { 0.5 };
        let start = positions.len();
        for j in 0..m {
            positions.push(polar_point(r, TAU * (j as f64 + offset) / m as f64));
        }
        rings.push((start, m, offset));
    }
    let mut tris = Vec::new();
    let (s1, m1, _) = rings[0];
    for j in 0..m1 {
        tris.push([0, s1 + j, s1 + (j + 1) % m1]);
    }
    for w in rings.windows(2) {
        let (sa, ma, oa) = w[0];
        let (sb, mb, ob) = w[1];
        let ta = |j: usize| (j as f64 + oa) / ma as f64;
        let tb = |j: usize| (j as f64 + ob) / mb as f64;
        let (mut ia, mut ib) = (0, 0);
        while ia < ma || ib < mb {
            let advance_a = if ia == ma {
                false
            } else if ib == mb {
                true
            } else {
                ta(ia + 1) < tb(ib + 1)
            };
            if advance_a {
                tris.push([sa + ia % ma, sa + (ia + 1) % ma, sb + ib % mb]);
                ia += 1;
            } else {
                tris.push([sa + ia % ma, sb + (ib + 1) % mb, sb + ib % mb]);
                ib += 1;
            }
        }
    }
    let triangles = tris
        .into_iter()
        .map(|t| (t, [positions[t[0]], positions[t[1]], positions[t[2]]]))
        .collect();
    Mesh {
        n_nodes: positions.len(),
        positions,
        triangles,
    }
}

/// `n x n` periodic mesh of the square `[0, l)^2`, each cell cut in two.
pub fn periodic_square_mesh(l: f64, n: usize) -> Mesh {
    let h = l / n as f64;
    let idx = |i: usize, j: usize| (i % n) + n * (j % n);
    let pos = |i: usize, j: usize| Complex64::new(i as f64 * h, j as f64 * h);
    let mut positions = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            positions.push(pos(i, j));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push((
                [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)],
                [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1)],
            ));
            triangles.push((
                [idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)],
                [pos(i, j), pos(i + 1, j + 1), pos(i, j + 1)],
            ));
        }
    }
    Mesh {
        n_nodes: n * n,
        positions,
        triangles,
    }
}

/// Metric and primitive sampled at one point of an element.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    /// Riemannian area carried by the point (zero for sup probes).
    pub weight: f64,
    /// `e^{-2 sigma}`.
    pub inv_metric: f64,
    pub theta: [f64; 2],
}

// Degree-2 rule: barycentric (2/3, 1/6, 1/6) and permutations, equal weights.
const QUAD: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

// Vertices, edge midpoints and centroid.
const PROBES: [[f64; 3]; 7] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
];

/// P1 element: constant `du`, with the metric and `theta` sampled at
/// quadrature points for the objective and at probes for the sup.
#[derive(Clone, Debug)]
pub struct Element {
    pub nodes: [usize; 3],
    /// Chart gradients of the three hat functions, `grad[d][k]`.
    pub grad: [[f64; 3]; 2],
    pub area: f64,
    pub quad: [Sample; 3],
    pub probes: [Sample; 7],
}

impl Element {
    fn new(model: &SurfaceModel, theta: &PrimitiveField, nodes: [usize; 3], p: [ChartPoint; 3]) -> Result<Self> {
        let (x0, y0) = (p[0].re, p[0].im);
        let (x1, y1) = (p[1].re, p[1].im);
        let (x2, y2) = (p[2].re, p[2].im);
        let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        if det.abs() < 1e-300 {
            return Err(Error::Degenerate("flat triangle in mesh".into()));
        }
        let grad = [
            [(y1 - y2) / det, (y2 - y0) / det, (y0 - y1) / det],
            [(x2 - x1) / det, (x0 - x2) / det, (x1 - x0) / det],
        ];
        let sample = |b: [f64; 3], chart_area: f64| -> Result<Sample> {
            let z = p[0] * b[0] + p[1] * b[1] + p[2] * b[2];
            let e2 = (2.0 * model.sigma(z)?.sigma).exp();
            let th = theta.covector(z);
            Ok(Sample {
                weight: chart_area * e2,
                inv_metric: 1.0 / e2,
                theta: [th.re, th.im],
            })
        };
        let third = det.abs() / 6.0;
        let quad = [sample(QUAD[0], third)?, sample(QUAD[1], third)?, sample(QUAD[2], third)?];
        let mut probes = [quad[0]; 7];
        for (pr, b) in probes.iter_mut().zip(PROBES) {
            *pr = sample(b, 0.0)?;
        }
        Ok(Self {
            nodes,
            grad,
            area: quad.iter().map(|q| q.weight).sum(),
            quad,
            probes,
        })
    }

    fn du(&self, u: &[f64]) -> [f64; 2] {
        let mut w = [0.0; 2];
        for (d, wd) in w.iter_mut().enumerate() {
            for k in 0..3 {
                *wd += self.grad[d][k] * u[self.nodes[k]];
            }
        }
        w
    }

    /// Largest `|du + theta|^2` over the probes.
    fn max_sq_norm(&self, u: &[f64]) -> f64 {
        let du = self.du(u);
        self.probes
            .iter()
            .map(|s| {
                let w = [du[0] + s.theta[0], du[1] + s.theta[1]];
                s.inv_metric * (w[0] * w[0] + w[1] * w[1])
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalOptions {
    /// Number of mesh cells across the domain.
    pub resolution: usize,
    pub p_schedule: Vec<u32>,
    /// Radius of the geodesic disk used on hyperbolic covers.
    pub disk_radius: f64,
    pub max_newton: usize,
    /// Newton stops once the max-norm gradient is this small relative to the
    /// largest sum of absolute element contributions at one node.
    pub gradient_tol: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self {
            resolution: 256,
            p_schedule: vec![2, 4, 8, 16, 32, 64],
            disk_radius: 5.0,
            max_newton: 200,
            gradient_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CriticalCertificate {
    /// Potential `u` at the mesh nodes.
    pub u_grid: Vec<f64>,
    pub nodes: Vec<ChartPoint>,
    /// Smallest max-cell value of `|du + theta|^2 / 2` over all iterates.
    pub c_upper: f64,
    /// Largest `(int_loop theta)^2 / (2 L^2)` over the circle witnesses.
    pub c_lower: f64,
    /// Max-cell value at `u = 0`.
    pub c_initial: f64,
    /// Newton iterations per `p`.
    pub iterations: Vec<(u32, usize)>,
    pub method: String,
}

/// The convex problem over P1 potentials with node 0 pinned to zero.
pub struct LpProblem {
    elements: Vec<Element>,
    n_nodes: usize,
    total_area: f64,
    pattern: SymbolicSparseColMat<usize>,
    argsort: faer::sparse::Argsort<usize>,
    symbolic: SymbolicLlt<usize>,
}

impl LpProblem {
    pub fn new(model: &SurfaceModel, theta: &PrimitiveField, mesh: &Mesh) -> Result<Self> {
        let elements: Vec<Element> = mesh
            .triangles
            .iter()
            .map(|(n, p)| Element::new(model, theta, *n, *p))
            .collect::<Result<_>>()?;
        let total_area = elements.iter().map(|e| e.area).sum();
        let n = mesh.n_nodes - 1;
        let mut idx = Vec::with_capacity(elements.len() * 6 + n);
        for i in 0..n {
            idx.push(Pair { row: i, col: i });
        }
        for e in &elements {
            for a in 0..3 {
                for b in 0..3 {
                    let (r, c) = (e.nodes[a], e.nodes[b]);
                    if r > 0 && c > 0 && r >= c {
                        idx.push(Pair { row: r - 1, col: c - 1 });
                    }
                }
            }
        }
        let (pattern, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &idx)
            .map_err(|e| Error::Degenerate(format!("sparsity pattern: {e:?}")))?;
        let symbolic = SymbolicLlt::try_new(pattern.as_ref(), Side::Lower)
            .map_err(|e| Error::Degenerate(format!("symbolic factorisation: {e:?}")))?;
        Ok(Self {
            elements,
            n_nodes: mesh.n_nodes,
            total_area,
            pattern,
            argsort,
            symbolic,
        })
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// `max |du + theta|^2 / 2` over the probes of every cell.
    pub fn max_cell_value(&self, u: &[f64]) -> f64 {
        0.5 * self.elements.iter().map(|e| e.max_sq_norm(u)).fold(0.0, f64::max)
    }

    /// `sum (A/A_tot) s^{p/2} / p` with `s = |du + theta|^2 / s_ref`.
    fn objective(&self, u: &[f64], p: u32, s_ref: f64) -> f64 {
        let half = (p / 2) as i32;
        let mut total = 0.0;
        for e in &self.elements {
            let du = e.du(u);
            for q in &e.quad {
                let w = [du[0] + q.theta[0], du[1] + q.theta[1]];
                let s = q.inv_metric * (w[0] * w[0] + w[1] * w[1]) / s_ref;
                total += q.weight * s.powi(half);
            }
        }
        total / (self.total_area * p as f64)
    }

    /// Gradient over the free nodes, the largest sum of absolute element
    /// contributions to one node (the scale against which cancellation in
    /// the gradient is measured), and Hessian values in pattern order.
    fn derivatives(&self, u: &[f64], p: u32, s_ref: f64) -> (Vec<f64>, f64, Vec<f64>) {
        let n = self.n_nodes - 1;
        let half = (p / 2) as i32;
        let mut g = vec![0.0; n];
        let mut gross = vec![0.0; n];
        let mut vals = vec![0.0; n];
        for e in &self.elements {
            let du = e.du(u);
            let mut ge = [0.0; 3];
            let mut he = [[0.0; 3]; 3];
            for q in &e.quad {
                let w = [du[0] + q.theta[0], du[1] + q.theta[1]];
                let scale = q.inv_metric / s_ref;
                let s = scale * (w[0] * w[0] + w[1] * w[1]);
                let a = q.weight / self.total_area;
                let c1 = a * scale * s.powi(half - 1);
                let c2 = if half >= 2 {
                    a * scale * (half - 1) as f64 * s.powi(half - 2) * 2.0 * scale
                } else {
                    0.0
                };
                let mut gw = [0.0; 3];
                for (k, gk) in gw.iter_mut().enumerate() {
                    *gk = e.grad[0][k] * w[0] + e.grad[1][k] * w[1];
                }
                for i in 0..3 {
                    ge[i] += c1 * gw[i];
                    for j in 0..3 {
                        let gg = e.grad[0][i] * e.grad[0][j] + e.grad[1][i] * e.grad[1][j];
                        he[i][j] += c1 * gg + c2 * gw[i] * gw[j];
                    }
                }
            }
            for i in 0..3 {
                let r = e.nodes[i];
                if r > 0 {
                    g[r - 1] += ge[i];
                    gross[r - 1] += ge[i].abs();
                }
                for j in 0..3 {
                    let c = e.nodes[j];
                    if r > 0 && c > 0 && r >= c {
                        vals.push(he[i][j]);
                    }
                }
            }
        }
        let gross = gross.into_iter().fold(0.0, f64::max);
        (g, gross, vals)
    }

    /// One Newton stage at exponent `p`, starting from `u`; records the max-cell
    /// value of every iterate in `track`.
    fn newton(&self, u: &mut [f64], p: u32, opts: &CriticalOptions, track: &mut f64) -> Result<usize> {
        let n = self.n_nodes - 1;
        let s_ref = 2.0 * self.max_cell_value(u);
        if s_ref == 0.0 {
            return Ok(0);
        }
        let mut j = self.objective(u, p, s_ref);
        let mut rel = f64::NAN;
        for it in 0..opts.max_newton {
            let (g, gross, mut vals) = self.derivatives(u, p, s_ref);
            let gmax = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            rel = if gross > 0.0 { gmax / gross } else { 0.0 };
            if rel <= opts.gradient_tol {
                return Ok(it);
            }
            let dmax = vals[n..].iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut mu = 1e-12 * dmax;
            let step = loop {
                for v in vals[..n].iter_mut() {
                    *v = mu;
                }
                let mat = SparseColMat::new_from_argsort(self.pattern.clone(), &self.argsort, &vals)
                    .map_err(|e| Error::Degenerate(format!("assembly: {e:?}")))?;
                match Llt::try_new_with_symbolic(self.symbolic.clone(), mat.as_ref(), Side::Lower) {
                    Ok(llt) => {
                        let mut rhs = Col::<f64>::from_fn(n, |i| -g[i]);
                        llt.solve_in_place(rhs.as_mat_mut());
                        break rhs;
                    }
                    Err(_) if mu < 1e3 * dmax => mu = (mu * 100.0).max(1e-10 * dmax),
                    Err(_) => {
                        return Err(Error::NonConvergence {
                            what: "critical-value Newton step",
                            iterations: it,
                            residual: rel,
                        })
                    }
                }
            };
            let slope: f64 = (0..n).map(|i| g[i] * step[i]).sum();
            // Predicted decrease below the summation rounding of the objective.
            if -slope <= 1e-14 * j.abs() {
                return Ok(it);
            }
            let mut alpha = 1.0;
            let mut trial = u.to_vec();
            let accepted = loop {
                for i in 0..n {
                    trial[i + 1] = u[i + 1] + alpha * step[i];
                }
                let jt = self.objective(&trial, p, s_ref);
                if jt <= j + 1e-4 * alpha * slope {
                    j = jt;
                    break true;
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    break false;
                }
            };
            if !accepted {
                return Err(Error::NonConvergence {
                    what: "critical-value line search",
                    iterations: it,
                    residual: rel,
                });
            }
            u.copy_from_slice(&trial);
            *track = track.min(self.max_cell_value(u));
        }
        Err(Error::NonConvergence {
            what: "critical-value Newton",
            iterations: opts.max_newton,
            residual: rel,
        })
    }

    /// Runs the `p` schedule from `u = 0`.
    pub fn solve(&self, opts: &CriticalOptions) -> Result<(Vec<f64>, f64, f64, Vec<(u32, usize)>)> {
        let mut u = vec![0.0; self.n_nodes];
        let c_initial = self.max_cell_value(&u);
        let mut best = c_initial;
        let mut iterations = Vec::new();
        for &p in &opts.p_schedule {
            if p < 2 || p % 2 != 0 {
                return Err(Error::InvalidArgument(format!("exponent {p} must be even and at least 2")));
            }
            let it = self.newton(&mut u, p, opts, &mut best)?;
            iterations.push((p, it));
        }
        Ok((u, best, c_initial, iterations))
    }
}

/// `(int theta)^2 / (2 L^2)` for the closed polygon through `polygon`, with
/// `L` its metric length.
fn loop_witness(model: &SurfaceModel, theta: &PrimitiveField, polygon: &[ChartPoint]) -> Result<f64> {
    let n = polygon.len();
    let mut flux = 0.0;
    let mut length = 0.0;
    for j in 0..n {
        let (a, b) = (polygon[j], polygon[(j + 1) % n]);
        let d = b - a;
        flux += theta.line_integral(a, b);
        let mut err = None;
        length += crate::quad::composite(0.0, 1.0, 2, |s| match model.norm(a + d * s, d) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(flux * flux / (2.0 * length * length))
}

/// Computes upper and lower bounds for `c(g, Omega)` using the primitive
/// `theta0`. Hyperbolic covers are truncated to a geodesic disk about `i`;
/// flat tori use periodic potentials.
pub fn critical_value_solve(
    model: &SurfaceModel,
    field: &MagneticField,
    theta0: &PrimitiveField,
    opts: &CriticalOptions,
) -> Result<CriticalCertificate> {
    model.check_field(field)?;
    let (cover, mesh, method, witnesses) = match (model.deck(), model.chart()) {
        (DeckGroup::Fuchsian(_), _) | (DeckGroup::Trivial, ChartKind::UpperHalfPlane) => {
            if !model.has_constant_curvature() {
                return Err(Error::Unsupported("variable curvature hyperbolic models".into()));
            }
            let cover = model.universal_cover();
            let radius = opts.disk_radius;
            let mesh = hyperbolic_disk_mesh(radius, 32.0 / opts.resolution as f64);
            let mut witnesses = Vec::new();
            for j in 1..=64 {
                let r = radius * j as f64 / 64.0;
                let poly: Vec<ChartPoint> = (0..512).map(|m| polar_point(r, TAU * m as f64 / 512.0)).collect();
                witnesses.push(poly);
            }
            let method = format!(
                "P1 L^p descent on the geodesic disk of radius {radius}; circle witnesses about the centre"
            );
            (cover, mesh, method, witnesses)
        }
        (DeckGroup::Lattice(l), _) => {
            let square = l.v1[1] == 0.0 && l.v2[0] == 0.0 && l.v1[0] == l.v2[1];
            if !square || !model.has_constant_curvature() {
                return Err(Error::Unsupported("only flat square tori are meshed".into()));
            }
            let side = l.v1[0];
            let mesh = periodic_square_mesh(side, opts.resolution);
            let mut witnesses = Vec::new();
            for ci in 0..8 {
                for cj in 0..8 {
                    let c = Complex64::new(side * ci as f64 / 8.0, side * cj as f64 / 8.0);
                    for j in 1..=16 {
                        let r = 0.45 * side * j as f64 / 16.0;
                        let poly: Vec<ChartPoint> = (0..256)
                            .map(|m| c + Complex64::from_polar(r, TAU * m as f64 / 256.0))
                            .collect();
                        witnesses.push(poly);
                    }
                }
            }
            (
                model.universal_cover(),
                mesh,
                "P1 L^p descent over periodic potentials; circle witnesses".to_string(),
                witnesses,
            )
        }
        _ => return Err(Error::Unsupported(format!("critical value on {}", model.name()))),
    };
    let probe: Vec<ChartPoint> = mesh.positions.iter().step_by((mesh.n_nodes / 50).max(1)).copied().collect();
    let sup = theta0.sup_norm(&cover, &probe)?;
    if !sup.is_finite() {
        return Err(Error::InvalidArgument("primitive is unbounded on the working domain".into()));
    }
    let residual = theta0.exterior_residual(&cover, field, &probe)?;
    if residual > 1e-6 {
        return Err(Error::Inconsistent { residual });
    }
    let problem = LpProblem::new(&cover, theta0, &mesh)?;
    let (u, c_upper, c_initial, iterations) = problem.solve(opts)?;
    let mut c_lower = 0.0f64;
    for poly in &witnesses {
        c_lower = c_lower.max(loop_witness(&cover, theta0, poly)?);
    }
    Ok(CriticalCertificate {
        u_grid: u,
        nodes: mesh.positions,
        c_upper,
        c_lower,
        c_initial,
        iterations,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::primitive::default_primitive;
    use crate::trig::TrigSeries;

    #[test]
    fn disk_mesh_area() {
        let mesh = hyperbolic_disk_mesh(2.0, 0.05);
        let m = SurfaceModel::half_plane();
        let p = LpProblem::new(&m, &PrimitiveField::Zero, &mesh).unwrap();
        let area: f64 = p.elements().iter().map(|e| e.area).sum();
        let exact = TAU * (2.0f64.cosh() - 1.0);
        assert!((area - exact).abs() / exact < 2e-3, "{area} {exact}");
    }

    #[test]
    fn zero_field_has_zero_critical_value() {
        let m = SurfaceModel::flat_torus(1.0);
        let f = MagneticField::constant(0.0);
        let opts = CriticalOptions {
            resolution: 16,
            ..Default::default()
        };
        let c = critical_value_solve(&m, &f, &PrimitiveField::Zero, &opts).unwrap();
        assert_eq!(c.c_upper, 0.0);
        assert_eq!(c.c_lower, 0.0);
    }

    #[test]
    fn quadratic_stage_solves_poisson_problem() {
        // With p = 2 the optimal u makes du + theta co-closed; for the
        // co-gradient primitive theta is already co-closed, so u stays ~0.
        let m = SurfaceModel::flat_torus(1.0);
        let series = TrigSeries::single(1.0, TAU, TAU, 0.0);
        let f = MagneticField::Trig { mean: 0.0, series };
        let theta = default_primitive(&m, &f).unwrap();
        let opts = CriticalOptions {
            resolution: 24,
            p_schedule: vec![2],
            ..Default::default()
        };
        let c = critical_value_solve(&m, &f, &theta, &opts).unwrap();
        let umax = c.u_grid.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(umax < 1e-3, "{umax}");
        assert!(c.c_lower <= c.c_upper);
    }

    #[test]
    fn hyperbolic_bounds_coarse() {
        let m = SurfaceModel::genus2_octagon();
        let f = MagneticField::constant(1.0);
        let theta = default_primitive(&m, &f).unwrap();
        let opts = CriticalOptions {
            resolution: 48,
            disk_radius: 3.0,
            ..Default::default()
        };
        let c = critical_value_solve(&m, &f, &theta, &opts).unwrap();
        assert!(c.c_upper <= 0.5 + 1e-12);
        let cw = 0.5 * 1.5f64.tanh().powi(2);
        assert!((c.c_lower - cw).abs() < 1e-3, "{} {cw}", c.c_lower);
        assert!(c.c_lower <= c.c_upper + 1e-9, "{} {}", c.c_lower, c.c_upper);
    }
}
