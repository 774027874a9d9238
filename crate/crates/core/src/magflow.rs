//! Fixed-step RK4 integration of magnetic flows on the unit tangent bundle.
//!
//! A unit vector is stored as its chart position and chart angle `phi`, so
//! `|v| = 1` holds by construction. In the conformal chart
//! `x' = e^{-sigma} (cos phi, sin phi)` and
//! `phi' = f + e^{-sigma} (sigma_y cos phi - sigma_x sin phi)`.

use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sl2::Sl2Element;
use crate::surfaces::{ChartKind, ChartPoint, DeckGroup, DeckWord, MagneticField, SurfaceModel};

/// Default step size.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitPhasePoint {
    pub z: ChartPoint,
    pub phi: f64,
}

impl UnitPhasePoint {
    pub fn new(x: f64, y: f64, phi: f64) -> Self {
        Self {
            z: Complex64::new(x, y),
            phi,
        }
    }

    /// Chart direction `e^{i phi}`.
    pub fn direction(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phi)
    }

    /// Phase point of an algebraic frame (upper half-plane, `K = -1`).
    pub fn from_frame(g: &Sl2Element) -> Self {
        Self {
            z: g.base_point(),
            phi: g.frame_angle(),
        }
    }

    pub fn to_frame(&self) -> Result<Sl2Element> {
        Sl2Element::from_frame(self.z, self.phi)
    }

    /// Distance in `(x, y, phi mod 2 pi)`.
    pub fn chart_distance(&self, other: &Self) -> f64 {
        let dphi = (self.phi - other.phi).rem_euclid(TAU);
        let dphi = dphi.min(TAU - dphi);
        ((self.z - other.z).norm_sqr() + dphi * dphi).sqrt()
    }
}

/// Time derivative of a phase point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseDerivative {
    pub dz: Complex64,
    pub dphi: f64,
}

pub fn vector_field(model: &SurfaceModel, field: &MagneticField, p: &UnitPhasePoint) -> Result<PhaseDerivative> {
    let jet = model.sigma(p.z)?;
    let (f, _) = model.field_at(field, p.z)?;
    let es = (-jet.sigma).exp();
    let (s, c) = p.phi.sin_cos();
    Ok(PhaseDerivative {
        dz: Complex64::new(es * c, es * s),
        dphi: f + es * (jet.grad[1] * c - jet.grad[0] * s),
    })
}

fn advance(p: &UnitPhasePoint, d: &PhaseDerivative, h: f64) -> UnitPhasePoint {
    UnitPhasePoint {
        z: p.z + d.dz * h,
        phi: p.phi + d.dphi * h,
    }
}

/// One RK4 step on the cover, without reduction. `obs` is integrated along
/// with the state using the same stages.
fn rk4_step<O>(
    model: &SurfaceModel,
    field: &MagneticField,
    p: &UnitPhasePoint,
    h: f64,
    obs: &mut O,
) -> Result<(UnitPhasePoint, f64)>
where
    O: FnMut(&UnitPhasePoint, &PhaseDerivative) -> f64,
{
    let k1 = vector_field(model, field, p)?;
    if k1.dphi.abs() * h.abs() > FRAC_PI_4 {
        return Err(Error::StepTooLarge { rate: k1.dphi, dt: h });
    }
    let p2 = advance(p, &k1, 0.5 * h);
    let k2 = vector_field(model, field, &p2)?;
    let p3 = advance(p, &k2, 0.5 * h);
    let k3 = vector_field(model, field, &p3)?;
    let p4 = advance(p, &k3, h);
    let k4 = vector_field(model, field, &p4)?;
    let w = h / 6.0;
    let next = UnitPhasePoint {
        z: p.z + (k1.dz + (k2.dz + k3.dz) * 2.0 + k4.dz) * w,
        phi: p.phi + (k1.dphi + 2.0 * (k2.dphi + k3.dphi) + k4.dphi) * w,
    };
    let o = w * (obs(p, &k1) + 2.0 * (obs(&p2, &k2) + obs(&p3, &k3)) + obs(&p4, &k4));
    Ok((next, o))
}

/// State after a single RK4 step of size `h`, without reduction.
pub(crate) fn single_step(model: &SurfaceModel, field: &MagneticField, p: &UnitPhasePoint, h: f64) -> Result<UnitPhasePoint> {
    Ok(rk4_step(model, field, p, h, &mut |_: &UnitPhasePoint, _: &PhaseDerivative| 0.0)?.0)
}

/// Reduces `p` into the canonical domain; returns the applied word, if any.
fn recenter(model: &SurfaceModel, p: &mut UnitPhasePoint) -> Result<Option<DeckWord>> {
    Ok(model.recenter(p.z)?.map(|r| {
        p.z = r.point;
        p.phi += r.turn;
        r.word
    }))
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("bad time step {dt} or horizon {t}")));
    }
    Ok(((t.abs() / dt) - 1e-9).ceil().max(0.0) as usize)
}

/// Stored orbit on a uniform time grid.
#[derive(Clone, Debug)]
pub struct OrbitSegment {
    pub t: Vec<f64>,
    pub states: Vec<UnitPhasePoint>,
    /// `(k, w)`: the state at index `k` was reduced by applying `w`.
    pub deck_words: Vec<(usize, DeckWord)>,
    /// `|e^{sigma} |x'| - 1|` at each state.
    pub energy_residual: Vec<f64>,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            self.t[1] - self.t[0]
        }
    }

    pub fn duration(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0) - self.t.first().copied().unwrap_or(0.0)
    }

    pub fn first(&self) -> &UnitPhasePoint {
        &self.states[0]
    }

    pub fn last(&self) -> &UnitPhasePoint {
        self.states.last().expect("non-empty orbit")
    }

    /// Word taking the starting copy of the domain to the final one.
    pub fn total_word(&self) -> DeckWord {
        self.deck_words
            .iter()
            .fold(DeckWord::empty(), |acc, (_, w)| w.then_left(&acc))
    }

    /// Deck-word length recorded at each state (cumulative).
    pub fn word_lengths(&self) -> Vec<usize> {
        let mut out = vec![0; self.states.len()];
        let mut acc = DeckWord::empty();
        let mut it = self.deck_words.iter().peekable();
        for (k, slot) in out.iter_mut().enumerate() {
            while let Some((idx, w)) = it.peek() {
                if *idx != k {
                    break;
                }
                acc = w.then_left(&acc);
                it.next();
            }
            *slot = acc.len();
        }
        out
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.energy_residual.iter().cloned().fold(0.0, f64::max)
    }
}

fn energy_residual(model: &SurfaceModel, field: &MagneticField, p: &UnitPhasePoint) -> Result<f64> {
    let d = vector_field(model, field, p)?;
    Ok((model.sigma(p.z)?.sigma.exp() * d.dz.norm() - 1.0).abs())
}

/// Integrates for time `t_end > 0` with steps of about `dt` (shrunk so that
/// they divide `t_end`), reducing into the fundamental domain after each step.
pub fn integrate(
    model: &SurfaceModel,
    field: &MagneticField,
    p0: UnitPhasePoint,
    t_end: f64,
    dt: f64,
) -> Result<OrbitSegment> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {t_end} must be positive")));
    }
    model.check_field(field)?;
    let n = step_count(t_end, dt)?;
    let h = t_end / n as f64;
    let mut p = p0;
    let mut deck_words = Vec::new();
    if let Some(w) = recenter(model, &mut p)? {
        deck_words.push((0, w));
    }
    let mut t = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut energy = Vec::with_capacity(n + 1);
    t.push(0.0);
    states.push(p);
    energy.push(energy_residual(model, field, &p)?);
    let mut none = |_: &UnitPhasePoint, _: &PhaseDerivative| 0.0;
    for k in 1..=n {
        p = rk4_step(model, field, &p, h, &mut none)?.0;
        if let Some(w) = recenter(model, &mut p)? {
            deck_words.push((k, w));
        }
        t.push(k as f64 * h);
        states.push(p);
        energy.push(energy_residual(model, field, &p)?);
    }
    Ok(OrbitSegment {
        t,
        states,
        deck_words,
        energy_residual: energy,
    })
}

/// Time-`t` map for either sign of `t`, with the accumulated deck word.
pub fn flow_map(
    model: &SurfaceModel,
    field: &MagneticField,
    p0: UnitPhasePoint,
    t: f64,
    dt: f64,
) -> Result<(UnitPhasePoint, DeckWord)> {
    let (p, w, _) = flow_with_observable(model, field, p0, t, dt, |_, _| 0.0)?;
    Ok((p, w))
}

/// Time-`t` map together with `int_0^t obs dt`, the observable being a
/// function of the state and its derivative evaluated at the RK4 stages.
pub fn flow_with_observable<O>(
    model: &SurfaceModel,
    field: &MagneticField,
    p0: UnitPhasePoint,
    t: f64,
    dt: f64,
    mut obs: O,
) -> Result<(UnitPhasePoint, DeckWord, f64)>
where
    O: FnMut(&UnitPhasePoint, &PhaseDerivative) -> f64,
{
    model.check_field(field)?;
    let n = step_count(t, dt)?;
    let mut p = p0;
    let mut word = recenter(model, &mut p)?.unwrap_or_default();
    if n == 0 {
        return Ok((p, word, 0.0));
    }
    let h = t / n as f64;
    let mut total = 0.0;
    for _ in 0..n {
        let (next, o) = rk4_step(model, field, &p, h, &mut obs)?;
        p = next;
        total += o;
        if let Some(w) = recenter(model, &mut p)? {
            word = w.then_left(&word);
        }
    }
    Ok((p, word, total))
}

/// RNG for sample `index` of the stream with master seed `seed`; independent
/// of how samples are distributed over workers.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws a Liouville-distributed unit vector: base point uniform for the
/// area form on the fundamental domain, angle uniform.
pub fn liouville_draw<R: Rng + ?Sized>(model: &SurfaceModel, rng: &mut R) -> Result<UnitPhasePoint> {
    let phi = rng.random::<f64>() * TAU;
    let z = match (model.deck(), model.chart()) {
        (DeckGroup::Fuchsian(g), _) => {
            let cmax = g.cosh_circumradius();
            loop {
                let r = (1.0 + rng.random::<f64>() * (cmax - 1.0)).acosh();
                let z = crate::surfaces::octagon::polar_point(r, rng.random::<f64>() * TAU);
                if g.contains(z) {
                    break z;
                }
            }
        }
        (DeckGroup::Lattice(l), _) => {
            let smax = model.sigma_sup();
            loop {
                let (s, t) = (rng.random::<f64>(), rng.random::<f64>());
                let z = Complex64::new(s * l.v1[0] + t * l.v2[0], s * l.v1[1] + t * l.v2[1]);
                let accept = (2.0 * (model.sigma(z)?.sigma - smax)).exp();
                if accept >= 1.0 || rng.random::<f64>() < accept {
                    break z;
                }
            }
        }
        (DeckGroup::Trivial, ChartKind::SphereChart) => {
            // Lower hemisphere, which the chart shows as the closed unit disk.
            let zc = -rng.random::<f64>();
            let rho = (1.0 - zc * zc).max(0.0).sqrt();
            Complex64::from_polar(rho, rng.random::<f64>() * TAU) / (1.0 - zc)
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "Liouville measure of {} is not finite",
                model.name()
            )))
        }
    };
    Ok(UnitPhasePoint { z, phi })
}

/// First Liouville sample of the stream for `seed`.
pub fn liouville_sample(model: &SurfaceModel, seed: u64) -> Result<UnitPhasePoint> {
    liouville_draw(model, &mut sample_rng(seed, 0))
}

/// `n` samples, sample `k` drawn from stream `k` of `seed`.
pub fn liouville_samples(model: &SurfaceModel, seed: u64, n: usize) -> Result<Vec<UnitPhasePoint>> {
    (0..n as u64)
        .map(|k| liouville_draw(model, &mut sample_rng(seed, k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::{exp_generator, Sl2Generator};
    use std::f64::consts::PI;

    #[test]
    fn flat_circle() {
        let m = SurfaceModel::flat_plane();
        let lam = 2.0;
        let f = MagneticField::constant(lam);
        let p0 = UnitPhasePoint::new(0.0, 0.0, 0.0);
        let orbit = integrate(&m, &f, p0, 1.0, 1e-3).unwrap();
        for (t, p) in orbit.t.iter().zip(&orbit.states) {
            // circle of radius 1/lambda centred at i/lambda
            let exact = Complex64::new((lam * t).sin(), 1.0 - (lam * t).cos()) / lam;
            assert!((p.z - exact).norm() < 1e-11);
            assert!((p.phi - lam * t).abs() < 1e-12);
        }
    }

    #[test]
    fn horocycle_matches_algebraic_flow() {
        let m = SurfaceModel::half_plane();
        let f = MagneticField::constant(1.0);
        let p0 = UnitPhasePoint::new(0.0, 1.0, PI / 2.0);
        let orbit = integrate(&m, &f, p0, 10.0, 1e-3).unwrap();
        let x1 = Sl2Generator::horocyclic();
        let mut worst: f64 = 0.0;
        for (t, p) in orbit.t.iter().zip(&orbit.states) {
            let g = exp_generator(&x1, *t);
            worst = worst.max((g.base_point() - p.z).norm());
        }
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn geodesic_turning_in_half_plane() {
        let m = SurfaceModel::half_plane();
        let d = vector_field(&m, &MagneticField::constant(0.0), &UnitPhasePoint::new(0.0, 2.0, 0.0)).unwrap();
        assert_eq!(d.dphi, -1.0);
        assert_eq!(d.dz, Complex64::new(2.0, 0.0));
        let d = vector_field(&m, &MagneticField::constant(0.0), &UnitPhasePoint::new(0.0, 2.0, PI / 2.0)).unwrap();
        assert!(d.dphi.abs() < 1e-15);
    }

    #[test]
    fn reversal_returns_to_start() {
        let m = SurfaceModel::genus2_octagon();
        let f = MagneticField::octagon_bump(0.7, 0.3);
        let p0 = UnitPhasePoint::new(0.2, 1.1, 0.4);
        let (p1, w1) = flow_map(&m, &f, p0, 3.0, 1e-3).unwrap();
        let (p2, w2) = flow_map(&m, &f, p1, -3.0, 1e-3).unwrap();
        assert!(p2.chart_distance(&p0) < 1e-9, "{p2:?}");
        assert!(w2.then_left(&w1).is_empty());
    }

    #[test]
    fn step_too_large_is_reported() {
        let m = SurfaceModel::flat_plane();
        let r = integrate(&m, &MagneticField::constant(100.0), UnitPhasePoint::new(0.0, 0.0, 0.0), 1.0, 0.01);
        assert!(matches!(r, Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn samples_are_reproducible_and_in_domain() {
        let m = SurfaceModel::genus2_octagon();
        let a = liouville_samples(&m, 7, 50).unwrap();
        let b = liouville_samples(&m, 7, 50).unwrap();
        assert_eq!(a, b);
        let g = m.deck().fuchsian().unwrap();
        assert!(a.iter().all(|p| g.contains(p.z)));
        let s = liouville_samples(&SurfaceModel::sphere(), 1, 50).unwrap();
        assert!(s.iter().all(|p| p.z.norm() <= 1.0));
        assert!(liouville_sample(&SurfaceModel::half_plane(), 1).is_err());
    }

    #[test]
    fn total_word_composes_in_order() {
        let m = SurfaceModel::flat_torus(1.0);
        let orbit = integrate(&m, &MagneticField::constant(0.0), UnitPhasePoint::new(0.5, 0.5, 0.3), 5.0, 1e-2).unwrap();
        let w = orbit.total_word();
        let l = m.deck().lattice().unwrap();
        // unwrapped displacement equals the straight-line displacement
        let moved = orbit.last().z - l.word_translation(&w);
        let exact = Complex64::new(0.5, 0.5) + Complex64::from_polar(5.0, 0.3);
        assert!((moved - exact).norm() < 1e-10);
        assert_eq!(orbit.word_lengths().last().copied(), Some(w.len()));
    }
}
