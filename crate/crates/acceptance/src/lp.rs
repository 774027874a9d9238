//! Linear-programming reference for the critical value of an exact field on
//! a flat square torus.
//!
//! The unknowns are nodal values of a periodic potential on an `n x n` grid
//! and a bound `t`. On every cell the gradient is the average of the two
//! edge differences in each direction, and the Euclidean norm of
//! `grad u + theta` is replaced by the max over `m` equally spaced unit
//! directions. That polygon norm lies between `cos(pi/m) |w|` and `|w|`, so
//! the discrete problem's value is bracketed by `t^2/2` and
//! `(t / cos(pi/m))^2 / 2`.

use std::f64::consts::{PI, TAU};

use microlp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpBound {
    /// Optimal polygon-norm bound on `|grad u + theta|`.
    pub t: f64,
    pub low: f64,
    pub high: f64,
}

impl LpBound {
    pub fn value(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

/// `theta(x, y)` returns the covector components `(theta_x, theta_y)`.
pub fn torus_lp_bound<F>(side: f64, n: usize, m: usize, theta: F) -> Result<LpBound, microlp::Error>
where
    F: Fn(f64, f64) -> (f64, f64),
{
    assert!(n >= 2 && m >= 3);
    let h = side / n as f64;
    let c = 0.5 / h;
    let dirs: Vec<(f64, f64)> = (0..m).map(|k| (TAU * k as f64 / m as f64).sin_cos()).map(|(s, c)| (c, s)).collect();
    // Solved through the dual, which has one row per node instead of one
    // per cell and direction: maximise sum_r y_r (d_r . theta_r) over
    // y >= 0 with sum y <= 1 and A^T y = 0, A being the gradient rows.
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let mut cols: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); n * n];
    let mut all = Vec::with_capacity(n * n * m);
    for j in 0..n {
        for i in 0..n {
            let (i1, j1) = ((i + 1) % n, (j + 1) % n);
            let corners = [j * n + i, j * n + i1, j1 * n + i, j1 * n + i1];
            let (tx, ty) = theta((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            for &(dx, dy) in &dirs {
                let y = lp.add_var(dx * tx + dy * ty, (0.0, f64::INFINITY));
                // gx = c (u10 - u00 + u11 - u01), gy = c (u01 - u00 + u11 - u10)
                let coef = [-c * (dx + dy), c * (dx - dy), c * (dy - dx), c * (dx + dy)];
                for (node, a) in corners.into_iter().zip(coef) {
                    cols[node].push((y, a));
                }
                all.push((y, 1.0));
            }
        }
    }
    // node 0 is pinned in the primal, so its row is dropped
    for col in cols.into_iter().skip(1) {
        lp.add_constraint(col, ComparisonOp::Eq, 0.0);
    }
    lp.add_constraint(all, ComparisonOp::Le, 1.0);
    let sol = lp.solve()?.into_solution().map_err(|_| microlp::Error::InternalError("interrupted".into()))?;
    let t = sol.objective();
    let sec = 1.0 / (PI / m as f64).cos();
    Ok(LpBound {
        t,
        low: 0.5 * t * t,
        high: 0.5 * (t * sec).powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_covector_is_removed() {
        // theta = d(sin 2 pi x) is a gradient of a periodic function
        let b = torus_lp_bound(1.0, 8, 8, |x, _| (TAU * (TAU * x).cos(), 0.0)).unwrap();
        assert!(b.t < 0.2, "{}", b.t);
        let b = torus_lp_bound(1.0, 8, 8, |_, _| (0.0, 0.0)).unwrap();
        assert!(b.t.abs() < 1e-12);
    }

    #[test]
    fn harmonic_part_cannot_be_removed() {
        // du has zero mean, so a dx + b dy keeps its polygon norm
        let (a, bb) = (0.3, -0.2);
        let r = torus_lp_bound(1.0, 6, 16, |_, _| (a, bb)).unwrap();
        let want = (0..16)
            .map(|k| {
                let (s, c) = (TAU * k as f64 / 16.0).sin_cos();
                a * c + bb * s
            })
            .fold(f64::MIN, f64::max);
        assert!((r.t - want).abs() < 1e-9, "{} {want}", r.t);
        assert!(r.low <= r.value() && r.value() <= r.high);
    }
}
