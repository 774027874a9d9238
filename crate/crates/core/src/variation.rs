//! Magnetic Jacobi fields, Riccati equation, Green bundles and Maslov counts
//! along stored orbits.
//!
//! A Jacobi field `J = x T + y iT` along a unit-speed magnetic geodesic obeys
//! `x' = f y` and `y'' + q y = 0` with `q = K - <grad f, iT> + f^2`; the trace
//! `u` of the associated Riccati solution obeys `u' + u^2 + q = 0`.

use crate::error::{Error, Result};
use crate::magflow::{self, OrbitSegment, UnitPhasePoint};
use crate::surfaces::{MagneticField, SurfaceModel};

/// Coarsest step accepted for variational integration.
pub const MAX_DT: f64 = 1e-2;

/// `q = K - <grad f, iv> + f^2` and `f` at a phase point.
pub fn jacobi_potential(model: &SurfaceModel, field: &MagneticField, p: &UnitPhasePoint) -> Result<(f64, f64)> {
    let k = model.curvature(p.z)?;
    let (f, g) = model.field_at(field, p.z)?;
    let es = (-model.sigma(p.z)?.sigma).exp();
    let (s, c) = p.phi.sin_cos();
    let grad_iv = es * (-g[0] * s + g[1] * c);
    Ok((k - grad_iv + f * f, f))
}

/// `<grad f, iv>` at a phase point.
pub fn field_normal_derivative(model: &SurfaceModel, field: &MagneticField, p: &UnitPhasePoint) -> Result<f64> {
    let (_, g) = model.field_at(field, p.z)?;
    let es = (-model.sigma(p.z)?.sigma).exp();
    let (s, c) = p.phi.sin_cos();
    Ok(es * (-g[0] * s + g[1] * c))
}

/// Potential and field sampled on the orbit grid and at step midpoints.
#[derive(Clone, Debug)]
pub struct PotentialTrace {
    pub t: Vec<f64>,
    q: Vec<f64>,
    f: Vec<f64>,
    q_mid: Vec<f64>,
    f_mid: Vec<f64>,
}

impl PotentialTrace {
    pub fn along(model: &SurfaceModel, field: &MagneticField, orbit: &OrbitSegment) -> Result<Self> {
        let dt = orbit.dt();
        if orbit.len() < 2 {
            return Err(Error::InvalidArgument("orbit needs at least two states".into()));
        }
        if dt > MAX_DT * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "orbit too coarse for variational integration: dt = {dt} > {MAX_DT}"
            )));
        }
        let n = orbit.len();
        let mut q = Vec::with_capacity(n);
        let mut f = Vec::with_capacity(n);
        let mut q_mid = Vec::with_capacity(n - 1);
        let mut f_mid = Vec::with_capacity(n - 1);
        for (k, p) in orbit.states.iter().enumerate() {
            let (qk, fk) = jacobi_potential(model, field, p)?;
            q.push(qk);
            f.push(fk);
            if k + 1 < n {
                let h = orbit.t[k + 1] - orbit.t[k];
                let mid = magflow::single_step(model, field, p, 0.5 * h)?;
                let (qm, fm) = jacobi_potential(model, field, &mid)?;
                q_mid.push(qm);
                f_mid.push(fm);
            }
        }
        Ok(Self {
            t: orbit.t.clone(),
            q,
            f,
            q_mid,
            f_mid,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Index of the last grid point at or before `t`.
    fn index_at(&self, t: f64) -> usize {
        let dt = self.t[1] - self.t[0];
        (((t - self.t[0]) / dt + 1e-9).floor().max(0.0) as usize).min(self.len() - 1)
    }

    /// RK4 step of the linear system `(x, y, y')` over interval `k`, forwards
    /// (`dir = 1`) or backwards (`dir = -1`).
    fn jacobi_step(&self, k: usize, s: [f64; 3], dir: f64) -> [f64; 3] {
        let h = dir * (self.t[k + 1] - self.t[k]);
        let (qa, fa, qb, fb) = if dir > 0.0 {
            (self.q[k], self.f[k], self.q[k + 1], self.f[k + 1])
        } else {
            (self.q[k + 1], self.f[k + 1], self.q[k], self.f[k])
        };
        let (qm, fm) = (self.q_mid[k], self.f_mid[k]);
        let rhs = |q: f64, f: f64, s: [f64; 3]| [f * s[1], s[2], -q * s[1]];
        let add = |s: [f64; 3], d: [f64; 3], c: f64| [s[0] + c * d[0], s[1] + c * d[1], s[2] + c * d[2]];
        let k1 = rhs(qa, fa, s);
        let k2 = rhs(qm, fm, add(s, k1, 0.5 * h));
        let k3 = rhs(qm, fm, add(s, k2, 0.5 * h));
        let k4 = rhs(qb, fb, add(s, k3, h));
        let mut out = s;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        out
    }

    /// RK4 step for the Riccati equation in `u` (`inverted = false`) or in
    /// `w = 1/u` (`w' = 1 + q w^2`).
    fn riccati_step(&self, k: usize, v: f64, inverted: bool) -> f64 {
        let h = self.t[k + 1] - self.t[k];
        let rhs = |q: f64, v: f64| if inverted { 1.0 + q * v * v } else { -v * v - q };
        let (qa, qm, qb) = (self.q[k], self.q_mid[k], self.q[k + 1]);
        let k1 = rhs(qa, v);
        let k2 = rhs(qm, v + 0.5 * h * k1);
        let k3 = rhs(qm, v + 0.5 * h * k2);
        let k4 = rhs(qb, v + h * k3);
        v + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
    }
}

/// Jacobi data along an orbit.
#[derive(Clone, Debug)]
pub struct VariationState {
    pub t: Vec<f64>,
    pub xcomp: Vec<f64>,
    pub y: Vec<f64>,
    pub ydot: Vec<f64>,
}

impl VariationState {
    /// `y1 y2' - y2 y1'` at each sample.
    pub fn wronskian(&self, other: &VariationState) -> Vec<f64> {
        (0..self.y.len())
            .map(|k| self.y[k] * other.ydot[k] - other.y[k] * self.ydot[k])
            .collect()
    }

    /// Zeros of `y` in `(t_0, t_max]`, located by cubic Hermite
    /// interpolation and bisection, with `|y'|` at each zero.
    pub fn zeros(&self, t_max: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for k in 0..self.y.len().saturating_sub(1) {
            if self.t[k + 1] > t_max + 1e-12 {
                break;
            }
            let (ya, yb) = (self.y[k], self.y[k + 1]);
            if ya == 0.0 || ya * yb > 0.0 {
                continue;
            }
            let (t0, t1) = (self.t[k], self.t[k + 1]);
            let tz = hermite_root(t0, t1, ya, yb, self.ydot[k], self.ydot[k + 1]);
            let s = (tz - t0) / (t1 - t0);
            let slope = (1.0 - s) * self.ydot[k] + s * self.ydot[k + 1];
            out.push((tz, slope));
        }
        out
    }
}

/// Root of the cubic Hermite interpolant on `[t0, t1]` with a sign change.
fn hermite_root(t0: f64, t1: f64, ya: f64, yb: f64, da: f64, db: f64) -> f64 {
    let h = t1 - t0;
    let eval = |s: f64| {
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * ya + h10 * h * da + h01 * yb + h11 * h * db
    };
    if yb == 0.0 {
        return t1;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let sign_lo = ya.signum();
    while (hi - lo) * h > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t0 + 0.5 * (lo + hi) * h
}

/// Integrates the Jacobi system along `orbit` from `(x0, y0, y0')`.
pub fn jacobi_integrate(
    model: &SurfaceModel,
    field: &MagneticField,
    orbit: &OrbitSegment,
    y0: f64,
    ydot0: f64,
    x0: f64,
) -> Result<VariationState> {
    let pot = PotentialTrace::along(model, field, orbit)?;
    Ok(jacobi_on(&pot, y0, ydot0, x0))
}

pub fn jacobi_on(pot: &PotentialTrace, y0: f64, ydot0: f64, x0: f64) -> VariationState {
    let n = pot.len();
    let mut s = [x0, y0, ydot0];
    let mut out = VariationState {
        t: pot.t.clone(),
        xcomp: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        ydot: Vec::with_capacity(n),
    };
    for k in 0..n {
        out.xcomp.push(s[0]);
        out.y.push(s[1]);
        out.ydot.push(s[2]);
        if k + 1 < n {
            s = pot.jacobi_step(k, s, 1.0);
        }
    }
    out
}

/// Conjugate times along the orbit up to `t_max`: zeros of the Jacobi
/// solution with `y(0) = 0`, `y'(0) = 1`.
pub fn conjugate_points(
    model: &SurfaceModel,
    field: &MagneticField,
    orbit: &OrbitSegment,
    t_max: f64,
) -> Result<Vec<f64>> {
    if t_max > orbit.duration() * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "horizon {t_max} exceeds orbit length {}",
            orbit.duration()
        )));
    }
    let pot = PotentialTrace::along(model, field, orbit)?;
    Ok(conjugate_points_on(&pot, t_max))
}

pub fn conjugate_points_on(pot: &PotentialTrace, t_max: f64) -> Vec<f64> {
    jacobi_on(pot, 0.0, 1.0, 0.0)
        .zeros(t_max)
        .into_iter()
        .map(|(t, _)| t)
        .collect()
}

/// Riccati trace `u` with recorded poles.
#[derive(Clone, Debug)]
pub struct RiccatiTrace {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub blowups: Vec<f64>,
}

/// `|u|` beyond which the trace counts as passing through a pole.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Integrates `u' = -u^2 - q` from `u0`. Near poles the solution is carried
/// as `w = 1/u`, which passes smoothly through zero; a sign change of `w`
/// is a pole of `u` and is recorded as a blow-up.
pub fn riccati_integrate(
    model: &SurfaceModel,
    field: &MagneticField,
    orbit: &OrbitSegment,
    u0: f64,
) -> Result<RiccatiTrace> {
    let pot = PotentialTrace::along(model, field, orbit)?;
    Ok(riccati_on(&pot, u0))
}

pub fn riccati_on(pot: &PotentialTrace, u0: f64) -> RiccatiTrace {
    let n = pot.len();
    let mut u = Vec::with_capacity(n);
    let mut blowups = Vec::new();
    let mut inverted = u0.abs() > 2.0;
    let mut v = if inverted { 1.0 / u0 } else { u0 };
    for k in 0..n {
        u.push(if inverted { 1.0 / v } else { v });
        if k + 1 == n {
            break;
        }
        let next = pot.riccati_step(k, v, inverted);
        if inverted && v * next < 0.0 || (inverted && next == 0.0) {
            let q = |i: usize| pot.q[i];
            let (t0, t1) = (pot.t[k], pot.t[k + 1]);
            let tz = hermite_root(t0, t1, v, next, 1.0 + q(k) * v * v, 1.0 + q(k + 1) * next * next);
            blowups.push(tz);
        }
        v = next;
        if !inverted && v.abs() > 2.0 {
            inverted = true;
            v = 1.0 / v;
        } else if inverted && v.abs() > 1.0 {
            inverted = false;
            v = 1.0 / v;
        }
    }
    // Samples within the pole region are reported as the blow-up value.
    for x in &mut u {
        if !x.is_finite() || x.abs() > BLOWUP_THRESHOLD {
            *x = BLOWUP_THRESHOLD.copysign(*x);
        }
    }
    RiccatiTrace {
        t: pot.t.clone(),
        u,
        blowups,
    }
}

/// Riccati value at time 0 of the solution with a pole at `t_end`
/// (`y(t_end) = 0`), by backward integration of the Jacobi equation.
fn backward_trace(pot: &PotentialTrace, t_end: f64) -> f64 {
    let mut k = pot.index_at(t_end);
    let mut s = [0.0, 0.0, -1.0];
    while k > 0 {
        s = pot.jacobi_step(k - 1, s, -1.0);
        k -= 1;
    }
    s[2] / s[1]
}

/// Finite-horizon approximation `u_E^{(T)}(p)` of the stable Green bundle.
pub fn green_bundle_trace(
    model: &SurfaceModel,
    field: &MagneticField,
    p: UnitPhasePoint,
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    let orbit = magflow::integrate(model, field, p, horizon, dt)?;
    let pot = PotentialTrace::along(model, field, &orbit)?;
    check_no_conjugate_points(&pot, horizon)?;
    Ok(backward_trace(&pot, horizon))
}

/// Green-bundle estimate with the leading `1/T` horizon error removed by
/// Richardson extrapolation, `2 u^{(2T)} - u^{(T)}`.
pub fn green_bundle_limit(
    model: &SurfaceModel,
    field: &MagneticField,
    p: UnitPhasePoint,
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    let orbit = magflow::integrate(model, field, p, 2.0 * horizon, dt)?;
    let pot = PotentialTrace::along(model, field, &orbit)?;
    check_no_conjugate_points(&pot, 2.0 * horizon)?;
    Ok(2.0 * backward_trace(&pot, 2.0 * horizon) - backward_trace(&pot, horizon))
}

/// Unstable Green bundle: the stable one for the orbit run backwards, i.e.
/// the value at 0 of the solution with a pole at `-horizon`.
pub fn unstable_green_bundle_trace(
    model: &SurfaceModel,
    field: &MagneticField,
    p: UnitPhasePoint,
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    let (start, _) = magflow::flow_map(model, field, p, -horizon, dt)?;
    let orbit = magflow::integrate(model, field, start, horizon, dt)?;
    let pot = PotentialTrace::along(model, field, &orbit)?;
    check_no_conjugate_points(&pot, horizon)?;
    let sol = jacobi_on(&pot, 0.0, 1.0, 0.0);
    let last = sol.y.len() - 1;
    Ok(sol.ydot[last] / sol.y[last])
}

fn check_no_conjugate_points(pot: &PotentialTrace, horizon: f64) -> Result<()> {
    let conj = conjugate_points_on(pot, horizon);
    if let Some(t) = conj.first() {
        return Err(Error::NotApplicable(format!(
            "conjugate point at t = {t} within the horizon {horizon}"
        )));
    }
    Ok(())
}

/// Initial Lagrangian plane, given by the Jacobi data `(y(0), y'(0))` of
/// the field spanning it together with the flow direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialPlane {
    pub y0: f64,
    pub ydot0: f64,
}

impl InitialPlane {
    pub const VERTICAL: Self = Self { y0: 0.0, ydot0: 1.0 };
    pub const HORIZONTAL: Self = Self { y0: 1.0, ydot0: 0.0 };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaslovCount {
    pub count: usize,
    /// Crossings with `|y'| < 1e-10`, each counted once.
    pub degenerate: usize,
}

/// Number of crossings in `(0, t_max]` of the transported plane with the
/// vertical, counted without sign.
pub fn maslov_count(
    model: &SurfaceModel,
    field: &MagneticField,
    orbit: &OrbitSegment,
    t_max: f64,
    plane: InitialPlane,
) -> Result<MaslovCount> {
    if t_max <= 0.0 {
        return Ok(MaslovCount {
            count: 0,
            degenerate: 0,
        });
    }
    let pot = PotentialTrace::along(model, field, orbit)?;
    Ok(maslov_count_on(&pot, t_max, plane))
}

pub fn maslov_count_on(pot: &PotentialTrace, t_max: f64, plane: InitialPlane) -> MaslovCount {
    let zeros = jacobi_on(pot, plane.y0, plane.ydot0, 0.0).zeros(t_max);
    let degenerate = zeros.iter().filter(|(_, s)| s.abs() < 1e-10).count();
    if degenerate > 0 {
        log::warn!("{degenerate} non-transverse crossings with the Maslov cycle");
    }
    MaslovCount {
        count: zeros.len(),
        degenerate,
    }
}
