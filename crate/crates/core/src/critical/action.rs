//! Discrete action `A_{L+k}` of curves on the cover with `L = |v|^2/2 - theta(v)`.

use num_complex::Complex64;

use super::primitive::PrimitiveField;
use crate::error::{Error, Result};
use crate::surfaces::{ChartPoint, SurfaceModel};

/// Action of one segment by the midpoint rule.
pub(crate) fn segment_action(
    model: &SurfaceModel,
    theta: &PrimitiveField,
    p: ChartPoint,
    q: ChartPoint,
    h: f64,
    k: f64,
) -> Result<f64> {
    let d = q - p;
    let m = (p + q) * 0.5;
    let e2 = (2.0 * model.sigma(m)?.sigma).exp();
    Ok(0.5 * e2 * d.norm_sqr() / h - theta.eval(m, d) + k * h)
}

/// `int (|gamma'|^2/2 - theta(gamma') + k) dt` for the piecewise-linear curve
/// through `nodes` at `times`, each segment integrated by the midpoint rule.
pub fn lagrangian_action(
    model: &SurfaceModel,
    theta: &PrimitiveField,
    nodes: &[ChartPoint],
    times: &[f64],
    k: f64,
) -> Result<f64> {
    if nodes.len() < 2 || nodes.len() != times.len() {
        return Err(Error::InvalidArgument(
            "a curve needs at least two nodes with one time each".into(),
        ));
    }
    let mut total = 0.0;
    for j in 0..nodes.len() - 1 {
        let h = times[j + 1] - times[j];
        if !(h > 0.0) {
            return Err(Error::Degenerate(format!(
                "segment {j} has non-positive duration {h}"
            )));
        }
        total += segment_action(model, theta, nodes[j], nodes[j + 1], h, k)?;
    }
    Ok(total)
}

/// Uniform node times on `[0, duration]`.
pub fn uniform_times(n_nodes: usize, duration: f64) -> Vec<f64> {
    let n = (n_nodes - 1) as f64;
    (0..n_nodes).map(|j| duration * j as f64 / n).collect()
}

/// Gradient of one segment's action with respect to its endpoints.
pub(crate) fn segment_gradient(
    model: &SurfaceModel,
    theta: &PrimitiveField,
    p: ChartPoint,
    q: ChartPoint,
    h: f64,
) -> Result<(Complex64, Complex64)> {
    let d = q - p;
    let m = (p + q) * 0.5;
    let jet = model.sigma(m)?;
    let e2 = (2.0 * jet.sigma).exp();
    let step = 1e-4 * (-jet.sigma).exp().min(1.0) * model.scale().sqrt();
    let jt = theta.jacobian(m, step);
    let c = theta.covector(m);
    let kin = d * (e2 / h);
    let common = Complex64::new(jet.grad[0], jet.grad[1]) * (0.5 * e2 * d.norm_sqr() / h)
        - Complex64::new(
            jt[0][0] * d.re + jt[1][0] * d.im,
            jt[0][1] * d.re + jt[1][1] * d.im,
        ) * 0.5;
    Ok((-kin + c + common, kin - c + common))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_segment_closed_form() {
        let m = SurfaceModel::flat_plane();
        let nodes: Vec<_> = (0..11).map(|j| Complex64::new(0.3 * j as f64, 0.4 * j as f64)).collect();
        for (t, k) in [(2.0, 0.5), (1.0, 0.5), (3.0, 1.3)] {
            let a = lagrangian_action(&m, &PrimitiveField::Zero, &nodes, &uniform_times(11, t), k).unwrap();
            let d = 5.0;
            assert!((a - (d * d / (2.0 * t) + k * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn horocycle_arc_has_zero_action() {
        let m = SurfaceModel::half_plane();
        let y0 = 1.7;
        let n = 33;
        // unit-speed horizontal horocycle at height y0
        let nodes: Vec<_> = (0..n).map(|j| Complex64::new(y0 * 0.1 * j as f64, y0)).collect();
        let a = lagrangian_action(&m, &PrimitiveField::horocyclic(1.0), &nodes, &uniform_times(n, 3.2), 0.5).unwrap();
        assert!(a.abs() < 1e-13, "{a}");
    }

    #[test]
    fn rejects_bad_times() {
        let m = SurfaceModel::flat_plane();
        let z = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(lagrangian_action(&m, &PrimitiveField::Zero, &z, &[0.0, 0.0], 0.5).is_err());
        assert!(lagrangian_action(&m, &PrimitiveField::Zero, &z[..1], &[0.0], 0.5).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = SurfaceModel::half_plane();
        let theta = PrimitiveField::horocyclic(0.6);
        let (p, q, h) = (Complex64::new(0.2, 1.1), Complex64::new(0.5, 1.4), 0.3);
        let (gp, gq) = segment_gradient(&m, &theta, p, q, h).unwrap();
        let e = 1e-6;
        let s = |p: ChartPoint, q: ChartPoint| segment_action(&m, &theta, p, q, h, 0.5).unwrap();
        for (dir, idx) in [(Complex64::new(e, 0.0), 0), (Complex64::new(0.0, e), 1)] {
            let fp = (s(p + dir, q) - s(p - dir, q)) / (2.0 * e);
            let fq = (s(p, q + dir) - s(p, q - dir)) / (2.0 * e);
            let (ap, aq) = if idx == 0 { (gp.re, gq.re) } else { (gp.im, gq.im) };
            assert!((ap - fp).abs() < 1e-7 && (aq - fq).abs() < 1e-7);
        }
    }
}
