//! Action potential `Phi_k(x, y) = inf_T inf_gamma A_{L+k}(gamma)` on the cover.
//!
//! For fixed `T` the curve is a polygon with uniform node times, optimised by
//! Newton's method on the interior nodes; the Hessian is block tridiagonal
//! and assembled from coloured differences of the analytic gradient. The
//! outer minimisation over `T` is a golden-section search.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use num_complex::Complex64;

use super::action::{lagrangian_action, segment_action, segment_gradient, uniform_times};
use super::primitive::{DeckMap, PrimitiveField};
use crate::error::{Error, Result};
use crate::sl2::Sl2Element;
use crate::surfaces::octagon::{cosh_dist, polar_coords, polar_point};
use crate::surfaces::{ChartKind, ChartPoint, DeckGroup, SurfaceModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialOptions {
    /// Number of curve segments.
    pub segments: usize,
    /// Max-norm gradient tolerance of the inner Newton solve.
    pub gradient_tol: f64,
    pub max_newton: usize,
    /// Relative bracket width at which the search over `T` stops.
    pub time_tol: f64,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        Self {
            segments: 64,
            gradient_tol: 1e-10,
            max_newton: 200,
            time_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PotentialQuery {
    pub x: ChartPoint,
    pub y: ChartPoint,
    pub k: f64,
    pub value: f64,
    /// Free final time of the minimiser.
    pub duration: f64,
    pub nodes: Vec<ChartPoint>,
    pub distance: f64,
}

impl PotentialQuery {
    /// Metric speed on each segment, evaluated at its midpoint.
    pub fn segment_speeds(&self, model: &SurfaceModel) -> Result<Vec<f64>> {
        let h = self.duration / (self.nodes.len() - 1) as f64;
        self.nodes
            .windows(2)
            .map(|w| Ok(model.norm((w[0] + w[1]) * 0.5, w[1] - w[0])? / h))
            .collect()
    }
}

/// Riemannian distance on a simply connected model chart.
pub fn cover_distance(model: &SurfaceModel, x: ChartPoint, y: ChartPoint) -> Result<f64> {
    let s = model.scale().sqrt();
    match (model.deck(), model.chart()) {
        (DeckGroup::Trivial, ChartKind::UpperHalfPlane) if model.has_constant_curvature() => {
            Ok(s * cosh_dist(x, y).max(1.0).acosh())
        }
        (DeckGroup::Trivial, ChartKind::FlatPlane) if model.has_constant_curvature() => Ok(s * (x - y).norm()),
        _ => Err(Error::Unsupported(format!(
            "distance on {} is not available in closed form",
            model.name()
        ))),
    }
}

/// `T` search gives up after this many bracket extensions.
const MAX_EXTENSIONS: usize = 12;

pub struct PotentialSolver<'a> {
    model: &'a SurfaceModel,
    theta: &'a PrimitiveField,
    k: f64,
    opts: PotentialOptions,
}

impl<'a> PotentialSolver<'a> {
    /// `model` must be the universal cover (trivial deck group).
    pub fn new(model: &'a SurfaceModel, theta: &'a PrimitiveField, k: f64, opts: PotentialOptions) -> Result<Self> {
        if !matches!(model.deck(), DeckGroup::Trivial) {
            return Err(Error::InvalidArgument(
                "the action potential lives on the universal cover".into(),
            ));
        }
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("energy {k} must be positive")));
        }
        if opts.segments < 2 {
            return Err(Error::InvalidArgument("at least two segments are needed".into()));
        }
        Ok(Self {
            model,
            theta,
            k,
            opts,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Initial polygon: the geodesic for the hyperbolic model, the chart
    /// segment otherwise.
    fn initial_path(&self, x: ChartPoint, y: ChartPoint) -> Result<Vec<ChartPoint>> {
        let n = self.opts.segments;
        if self.model.chart() == ChartKind::UpperHalfPlane {
            let sy = x.im.sqrt();
            let to_x = Sl2Element::new(sy, x.re / sy, 0.0, 1.0 / sy)?;
            let (r, al) = polar_coords(to_x.inverse().apply(y));
            return Ok((0..=n)
                .map(|j| {
                    if j == 0 {
                        x
                    } else if j == n {
                        y
                    } else {
                        to_x.apply(polar_point(r * j as f64 / n as f64, al))
                    }
                })
                .collect());
        }
        Ok((0..=n).map(|j| x + (y - x) * (j as f64 / n as f64)).collect())
    }

    fn action(&self, z: &[ChartPoint], h: f64) -> Result<f64> {
        let mut total = 0.0;
        for w in z.windows(2) {
            total += segment_action(self.model, self.theta, w[0], w[1], h, self.k)?;
        }
        Ok(total)
    }

    /// Gradient with respect to the interior nodes.
    fn gradient(&self, z: &[ChartPoint], h: f64) -> Result<Vec<Complex64>> {
        let n = z.len() - 1;
        let mut g = vec![Complex64::new(0.0, 0.0); n + 1];
        for j in 0..n {
            let (gp, gq) = segment_gradient(self.model, self.theta, z[j], z[j + 1], h)?;
            g[j] += gp;
            g[j + 1] += gq;
        }
        Ok(g[1..n].to_vec())
    }

    fn local_length(&self, z: ChartPoint) -> Result<f64> {
        Ok(((-self.model.sigma(z)?.sigma).exp() * self.model.scale().sqrt()).min(1.0))
    }

    /// Block tridiagonal Hessian `(diag, upper)` over the interior nodes.
    fn hessian(&self, z: &[ChartPoint], h: f64) -> Result<(Vec<[[f64; 2]; 2]>, Vec<[[f64; 2]; 2]>)> {
        let m = z.len() - 2;
        let mut diag = vec![[[0.0; 2]; 2]; m];
        let mut upper = vec![[[0.0; 2]; 2]; m.saturating_sub(1)];
        let mut lower = vec![[[0.0; 2]; 2]; m.saturating_sub(1)];
        let eps: Vec<f64> = (0..m)
            .map(|i| Ok(1e-6 * self.local_length(z[i + 1])?))
            .collect::<Result<_>>()?;
        for colour in 0..3 {
            for d in 0..2 {
                let dir = if d == 0 { Complex64::new(1.0, 0.0) } else { Complex64::i() };
                let shifted = |sign: f64| -> Result<Vec<Complex64>> {
                    let mut zz = z.to_vec();
                    for i in (colour..m).step_by(3) {
                        zz[i + 1] += dir * (sign * eps[i]);
                    }
                    self.gradient(&zz, h)
                };
                let gp = shifted(1.0)?;
                let gm = shifted(-1.0)?;
                for i in (colour..m).step_by(3) {
                    let col = |r: usize| (gp[r] - gm[r]) / (2.0 * eps[i]);
                    let c = col(i);
                    diag[i][0][d] = c.re;
                    diag[i][1][d] = c.im;
                    if i > 0 {
                        // d g_{i-1} / d z_i
                        let c = col(i - 1);
                        upper[i - 1][0][d] = c.re;
                        upper[i - 1][1][d] = c.im;
                    }
                    if i + 1 < m {
                        // d g_{i+1} / d z_i
                        let c = col(i + 1);
                        lower[i][0][d] = c.re;
                        lower[i][1][d] = c.im;
                    }
                }
            }
        }
        for b in &mut diag {
            let s = 0.5 * (b[0][1] + b[1][0]);
            b[0][1] = s;
            b[1][0] = s;
        }
        for (u, l) in upper.iter_mut().zip(&lower) {
            for r in 0..2 {
                for c in 0..2 {
                    u[r][c] = 0.5 * (u[r][c] + l[c][r]);
                }
            }
        }
        Ok((diag, upper))
    }

    /// Minimises the action over polygons from `x` to `y` in time `t`.
    pub fn solve_fixed_time(
        &self,
        x: ChartPoint,
        y: ChartPoint,
        t: f64,
        warm: Option<&[ChartPoint]>,
    ) -> Result<(f64, Vec<ChartPoint>)> {
        let n = self.opts.segments;
        let h = t / n as f64;
        let mut z = match warm {
            Some(w) if w.len() == n + 1 => {
                let mut z = w.to_vec();
                z[0] = x;
                z[n] = y;
                z
            }
            _ => self.initial_path(x, y)?,
        };
        let mut s = self.action(&z, h)?;
        let mut mu = 0.0;
        for _ in 0..self.opts.max_newton {
            let g = self.gradient(&z, h)?;
            let gmax = g.iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
            if gmax <= self.opts.gradient_tol {
                return Ok((s, z));
            }
            let (diag, upper) = self.hessian(&z, h)?;
            let dnorm = diag.iter().map(|b| b[0][0].abs() + b[1][1].abs()).fold(0.0, f64::max);
            let mut accepted = false;
            for _ in 0..40 {
                let Some(step) = block_tridiagonal_solve(&diag, &upper, mu, &g) else {
                    mu = (4.0 * mu).max(1e-10 * dnorm);
                    continue;
                };
                let slope: f64 = g.iter().zip(&step).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
                let mut alpha = 1.0;
                while alpha > 1e-12 {
                    let mut trial = z.clone();
                    for (i, d) in step.iter().enumerate() {
                        trial[i + 1] += d * alpha;
                    }
                    if let Ok(st) = self.action(&trial, h) {
                        if st <= s + 1e-4 * alpha * slope {
                            z = trial;
                            s = st;
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if accepted {
                    mu *= 0.25;
                    if mu < 1e-14 * dnorm {
                        mu = 0.0;
                    }
                    break;
                }
                mu = (4.0 * mu).max(1e-10 * dnorm);
            }
            if !accepted {
                // No decrease is possible at working precision.
                if gmax <= 1e-6 {
                    return Ok((s, z));
                }
                return Err(Error::NonConvergence {
                    what: "curve minimisation",
                    iterations: self.opts.max_newton,
                    residual: gmax,
                });
            }
        }
        let g = self.gradient(&z, h)?;
        let gmax = g.iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
        if gmax <= 1e-6 {
            return Ok((s, z));
        }
        Err(Error::NonConvergence {
            what: "curve minimisation",
            iterations: self.opts.max_newton,
            residual: gmax,
        })
    }

    /// `Phi_k(x, y)` with its minimiser; `Phi_k(x, x) = 0`.
    pub fn query(&self, x: ChartPoint, y: ChartPoint) -> Result<PotentialQuery> {
        let d = cover_distance(self.model, x, y)?;
        if d == 0.0 {
            return Ok(PotentialQuery {
                x,
                y,
                k: self.k,
                value: 0.0,
                duration: 0.0,
                nodes: vec![x, y],
                distance: 0.0,
            });
        }
        let profile = Profile {
            solver: self,
            x,
            y,
            warm: RefCell::new(None),
            scanned: RefCell::new(Vec::new()),
        };
        let v = (2.0 * self.k).sqrt();
        let (mut lo, mut hi) = (d / (2.0 * v), 4.0 * d / v);
        let mut extensions = 0;
        let (a, b, init) = loop {
            let ts: Vec<f64> = (0..7).map(|i| lo * (hi / lo).powf(i as f64 / 6.0)).collect();
            let vals: Vec<f64> = ts.iter().map(|t| profile.eval(*t)).collect::<Result<_>>()?;
            let best = (0..7).min_by(|i, j| vals[*i].total_cmp(&vals[*j])).expect("seven samples");
            if best == 0 {
                hi = ts[1];
                lo /= 4.0;
            } else if best == 6 {
                lo = ts[5];
                hi *= 4.0;
            } else {
                break (ts[best - 1], ts[best + 1], ts[best]);
            }
            extensions += 1;
            if extensions > MAX_EXTENSIONS {
                return Err(Error::Bracket {
                    profile: profile.scanned.into_inner(),
                });
            }
        };
        let gss = GoldenSectionSearch::new(a, b)
            .and_then(|g| g.with_tolerance(self.opts.time_tol))
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let res = Executor::new(&profile, gss)
            .configure(|s| s.param(init).max_iters(200))
            .run()
            .map_err(|e| match e.downcast::<Error>() {
                Ok(err) => err,
                Err(other) => Error::InvalidArgument(other.to_string()),
            })?;
        let t_best = res.state().best_param.unwrap_or(init);
        let warm = profile.warm.borrow().clone();
        let (value, nodes) = self.solve_fixed_time(x, y, t_best, warm.as_deref())?;
        Ok(PotentialQuery {
            x,
            y,
            k: self.k,
            value,
            duration: t_best,
            nodes,
            distance: d,
        })
    }

    /// `max |Phi_k(psi x, psi y) - Phi_k(x, y) - f_psi(y) + f_psi(x)|`-style
    /// defect for a single pair, with `f_psi = int_{x0} (theta - psi^* theta)`.
    pub fn equivariance_defect(&self, psi: DeckMap, base: ChartPoint, x: ChartPoint, y: ChartPoint) -> Result<f64> {
        let moved = self.query(psi.apply(x), psi.apply(y))?.value;
        let here = self.query(x, y)?.value;
        let f = |p: ChartPoint| correction_potential(self.theta, psi, base, p);
        Ok((moved - here - f(y) + f(x)).abs())
    }
}

/// `f_psi(p) = int_{x0}^{p} (theta - psi^* theta)` along the chart segment,
/// so that `Phi_k(psi x, psi y) = Phi_k(x, y) + f_psi(y) - f_psi(x)`.
pub fn correction_potential(theta: &PrimitiveField, psi: DeckMap, base: ChartPoint, p: ChartPoint) -> f64 {
    if psi.is_identity() {
        return 0.0;
    }
    let pulled = theta.pullback(psi);
    theta.line_integral(base, p) - pulled.line_integral(base, p)
}

struct Profile<'s, 'a> {
    solver: &'s PotentialSolver<'a>,
    x: ChartPoint,
    y: ChartPoint,
    warm: RefCell<Option<Vec<ChartPoint>>>,
    scanned: RefCell<Vec<(f64, f64)>>,
}

impl Profile<'_, '_> {
    fn eval(&self, t: f64) -> Result<f64> {
        let warm = self.warm.borrow().clone();
        let (v, z) = self.solver.solve_fixed_time(self.x, self.y, t, warm.as_deref())?;
        *self.warm.borrow_mut() = Some(z);
        self.scanned.borrow_mut().push((t, v));
        Ok(v)
    }
}

impl CostFunction for &Profile<'_, '_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, t: &f64) -> std::result::Result<f64, argmin::core::Error> {
        self.eval(*t).map_err(argmin::core::Error::new)
    }
}

/// Solves `(H + mu I) x = -g` for a block tridiagonal `H`; `None` when the
/// shifted matrix is not positive definite.
fn block_tridiagonal_solve(
    diag: &[[[f64; 2]; 2]],
    upper: &[[[f64; 2]; 2]],
    mu: f64,
    g: &[Complex64],
) -> Option<Vec<Complex64>> {
    type B = [[f64; 2]; 2];
    let inv = |b: &B| -> Option<B> {
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        if !(det > 0.0 && b[0][0] > 0.0) || !det.is_finite() {
            return None;
        }
        Some([[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]])
    };
    let mul = |a: &B, b: &B| -> B {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    };
    let tr = |a: &B| -> B { [[a[0][0], a[1][0]], [a[0][1], a[1][1]]] };
    let mv = |a: &B, v: [f64; 2]| [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]];
    let m = diag.len();
    let mut s_inv: Vec<B> = Vec::with_capacity(m);
    let mut y: Vec<[f64; 2]> = Vec::with_capacity(m);
    for i in 0..m {
        let mut s = diag[i];
        s[0][0] += mu;
        s[1][1] += mu;
        let mut r = [-g[i].re, -g[i].im];
        if i > 0 {
            let ut = tr(&upper[i - 1]);
            let w = mul(&ut, &s_inv[i - 1]);
            let c = mul(&w, &upper[i - 1]);
            for a in 0..2 {
                for b in 0..2 {
                    s[a][b] -= c[a][b];
                }
            }
            let wy = mv(&w, y[i - 1]);
            r = [r[0] - wy[0], r[1] - wy[1]];
        }
        s_inv.push(inv(&s)?);
        y.push(r);
    }
    let mut x = vec![[0.0; 2]; m];
    for i in (0..m).rev() {
        let mut r = y[i];
        if i + 1 < m {
            let u = mv(&upper[i], x[i + 1]);
            r = [r[0] - u[0], r[1] - u[1]];
        }
        x[i] = mv(&s_inv[i], r);
    }
    Some(x.into_iter().map(|v| Complex64::new(v[0], v[1])).collect())
}

/// Action of the polygon in a query, recomputed from scratch.
pub fn query_action(model: &SurfaceModel, theta: &PrimitiveField, q: &PotentialQuery) -> Result<f64> {
    if q.duration == 0.0 {
        return Ok(0.0);
    }
    lagrangian_action(model, theta, &q.nodes, &uniform_times(q.nodes.len(), q.duration), q.k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_potential_is_scaled_distance() {
        let m = SurfaceModel::flat_plane();
        let theta = PrimitiveField::Zero;
        for k in [0.5, 2.0] {
            let s = PotentialSolver::new(&m, &theta, k, PotentialOptions::default()).unwrap();
            let (x, y) = (Complex64::new(0.1, 0.2), Complex64::new(1.3, -0.4));
            let q = s.query(x, y).unwrap();
            let d = (x - y).norm();
            assert!((q.value - (2.0 * k).sqrt() * d).abs() < 1e-9, "{}", q.value);
            assert!((q.duration - d / (2.0 * k).sqrt()).abs() < 1e-5);
            assert_eq!(s.query(x, x).unwrap().value, 0.0);
        }
    }

    #[test]
    fn hyperbolic_potential_without_field() {
        let m = SurfaceModel::half_plane();
        let theta = PrimitiveField::Zero;
        let s = PotentialSolver::new(&m, &theta, 0.5, PotentialOptions::default()).unwrap();
        let (x, y) = (Complex64::new(0.0, 1.0), Complex64::new(1.0, 2.0));
        let q = s.query(x, y).unwrap();
        // discretised geodesic: O(h^2) from the midpoint rule
        assert!((q.value - q.distance).abs() < 1e-4, "{} {}", q.value, q.distance);
        assert!(q.value >= 0.0);
    }

    #[test]
    fn block_solver_matches_dense() {
        let diag = [[[4.0, 1.0], [1.0, 3.0]], [[5.0, 0.5], [0.5, 4.0]], [[3.0, 0.0], [0.0, 3.0]]];
        let upper = [[[0.5, 0.2], [0.1, -0.3]], [[-0.4, 0.0], [0.3, 0.6]]];
        let g = [Complex64::new(1.0, -1.0), Complex64::new(0.5, 2.0), Complex64::new(-1.0, 0.3)];
        let x = block_tridiagonal_solve(&diag, &upper, 0.0, &g).unwrap();
        // residual H x + g
        for i in 0..3 {
            let xi = [x[i].re, x[i].im];
            let mut r = [g[i].re, g[i].im];
            for a in 0..2 {
                for b in 0..2 {
                    r[a] += diag[i][a][b] * xi[b];
                    if i + 1 < 3 {
                        r[a] += upper[i][a][b] * [x[i + 1].re, x[i + 1].im][b];
                    }
                    if i > 0 {
                        r[a] += upper[i - 1][b][a] * [x[i - 1].re, x[i - 1].im][b];
                    }
                }
            }
            assert!(r[0].abs() < 1e-13 && r[1].abs() < 1e-13);
        }
    }
}
