//! Primitives `theta` of the lifted field on the universal cover.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sl2::Sl2Element;
use crate::surfaces::{ChartPoint, DeckGroup, DeckWord, MagneticField, SurfaceModel};
use crate::trig::TrigSeries;

/// A deck transformation acting on the cover chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeckMap {
    Translation(Complex64),
    Mobius(Sl2Element),
}

impl DeckMap {
    pub const IDENTITY: Self = DeckMap::Translation(Complex64::new(0.0, 0.0));

    /// The deck transformation of `word`.
    pub fn from_word(deck: &DeckGroup, word: &DeckWord) -> Result<Self> {
        match deck {
            DeckGroup::Trivial => Ok(Self::IDENTITY),
            DeckGroup::Lattice(l) => Ok(DeckMap::Translation(l.word_translation(word))),
            DeckGroup::Fuchsian(g) => Ok(DeckMap::Mobius(g.word_element(word))),
        }
    }

    pub fn apply(&self, z: ChartPoint) -> ChartPoint {
        match self {
            DeckMap::Translation(t) => z + t,
            DeckMap::Mobius(g) => g.apply(z),
        }
    }

    pub fn derivative(&self, z: ChartPoint) -> Complex64 {
        match self {
            DeckMap::Translation(_) => Complex64::new(1.0, 0.0),
            DeckMap::Mobius(g) => g.derivative(z),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            DeckMap::Translation(t) => DeckMap::Translation(-t),
            DeckMap::Mobius(g) => DeckMap::Mobius(g.inverse()),
        }
    }

    /// `self^k`.
    pub fn power(&self, k: i64) -> Self {
        match self {
            DeckMap::Translation(t) => DeckMap::Translation(t * k as f64),
            DeckMap::Mobius(g) => {
                let base = if k < 0 { g.inverse() } else { *g };
                let mut out = Sl2Element::IDENTITY;
                for _ in 0..k.unsigned_abs() {
                    out = out * base;
                }
                DeckMap::Mobius(out)
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            DeckMap::Translation(t) => *t == Complex64::new(0.0, 0.0),
            DeckMap::Mobius(g) => g.distance(&Sl2Element::IDENTITY) == 0.0,
        }
    }
}

/// A 1-form on the cover chart. Covectors are stored as `theta_x + i theta_y`,
/// so `theta(v) = Re(conj(c) v)` and the pullback by a holomorphic map with
/// derivative `m` is `conj(m) c`.
#[derive(Clone, Debug)]
pub enum PrimitiveField {
    Zero,
    /// `lambda * chart^*(dx / y)` on the upper half-plane: `|theta| = |lambda|`
    /// and `d theta = lambda dA`.
    Horocyclic { lambda: f64, chart: Sl2Element },
    /// `-w_y dx + w_x dy`, with differential `(Laplacian w) dx dy`.
    CoGradient(TrigSeries),
    /// `base + dg`; `g` need not be periodic.
    Gauged { base: Box<PrimitiveField>, gauge: TrigSeries },
    /// Mean of the pullbacks `psi^* base` over the listed maps.
    Averaged { base: Box<PrimitiveField>, maps: Vec<DeckMap> },
}

impl PrimitiveField {
    pub fn horocyclic(lambda: f64) -> Self {
        PrimitiveField::Horocyclic {
            lambda,
            chart: Sl2Element::IDENTITY,
        }
    }

    /// Horocyclic primitive invariant under the hyperbolic element `g`: the
    /// chart sends a fixed point of `g` to infinity, where `dx/y` is
    /// invariant under every affine map.
    pub fn horocyclic_invariant_under(lambda: f64, g: &Sl2Element) -> Result<Self> {
        let [[a, b], [c, d]] = g.matrix();
        let fixed = if c.abs() < 1e-300 {
            return Ok(Self::horocyclic(lambda));
        } else {
            let disc = (d - a).powi(2) + 4.0 * b * c;
            if disc <= 0.0 {
                return Err(Error::Degenerate("element has no real fixed points".into()));
            }
            ((a - d) + disc.sqrt()) / (2.0 * c)
        };
        Ok(PrimitiveField::Horocyclic {
            lambda,
            chart: Sl2Element::new(0.0, -1.0, 1.0, -fixed)?,
        })
    }

    /// Chart covector at `z`.
    pub fn covector(&self, z: ChartPoint) -> Complex64 {
        match self {
            PrimitiveField::Zero => Complex64::new(0.0, 0.0),
            PrimitiveField::Horocyclic { lambda, chart } => {
                let w = chart.apply(z);
                chart.derivative(z).conj() * (lambda / w.im)
            }
            PrimitiveField::CoGradient(w) => {
                let g = w.gradient(z.re, z.im);
                Complex64::new(-g[1], g[0])
            }
            PrimitiveField::Gauged { base, gauge } => {
                let g = gauge.gradient(z.re, z.im);
                base.covector(z) + Complex64::new(g[0], g[1])
            }
            PrimitiveField::Averaged { base, maps } => {
                let sum: Complex64 = maps
                    .iter()
                    .map(|m| m.derivative(z).conj() * base.covector(m.apply(z)))
                    .sum();
                sum / maps.len() as f64
            }
        }
    }

    /// `theta_z(v)` for a chart vector `v`.
    pub fn eval(&self, z: ChartPoint, v: Complex64) -> f64 {
        let c = self.covector(z);
        c.re * v.re + c.im * v.im
    }

    /// Pullback `psi^* theta`.
    pub fn pullback(&self, psi: DeckMap) -> Self {
        PrimitiveField::Averaged {
            base: Box::new(self.clone()),
            maps: vec![psi],
        }
    }

    /// Riemannian norm `e^{-sigma} |c|`.
    pub fn norm(&self, model: &SurfaceModel, z: ChartPoint) -> Result<f64> {
        Ok((-model.sigma(z)?.sigma).exp() * self.covector(z).norm())
    }

    /// `max |theta|` over the given points.
    pub fn sup_norm(&self, model: &SurfaceModel, points: &[ChartPoint]) -> Result<f64> {
        points.iter().try_fold(0.0f64, |acc, z| Ok(acc.max(self.norm(model, *z)?)))
    }

    /// Chart Jacobian `[[d theta_x/dx, d theta_x/dy], [d theta_y/dx, d theta_y/dy]]`
    /// by a fourth-order central stencil with step `h`.
    pub fn jacobian(&self, z: ChartPoint, h: f64) -> [[f64; 2]; 2] {
        let d = |e: Complex64| {
            let at = |s: f64| self.covector(z + e * s);
            (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
        };
        let dx = d(Complex64::new(1.0, 0.0));
        let dy = d(Complex64::i());
        [[dx.re, dy.re], [dx.im, dy.im]]
    }

    /// `max |d theta - f dA|` relative to `dA`, at the given points of the cover.
    pub fn exterior_residual(&self, model: &SurfaceModel, field: &MagneticField, points: &[ChartPoint]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for z in points {
            let jet = model.sigma(*z)?;
            let h = 1e-3 * (-jet.sigma).exp().min(1.0) * model.scale().sqrt();
            let j = self.jacobian(*z, h);
            let curl = j[1][0] - j[0][1];
            let (f, _) = model.field_at(field, *z)?;
            worst = worst.max((curl * (-2.0 * jet.sigma).exp() - f).abs());
        }
        Ok(worst)
    }

    /// `max |psi^* theta - theta|` in the metric, at the given points.
    pub fn invariance_defect(&self, model: &SurfaceModel, psi: DeckMap, points: &[ChartPoint]) -> Result<f64> {
        let pulled = self.pullback(psi);
        let mut worst: f64 = 0.0;
        for z in points {
            let d = (pulled.covector(*z) - self.covector(*z)).norm();
            worst = worst.max((-model.sigma(*z)?.sigma).exp() * d);
        }
        Ok(worst)
    }

    /// `int theta` along the straight chart segment from `a` to `b`.
    pub fn line_integral(&self, a: ChartPoint, b: ChartPoint) -> f64 {
        let d = b - a;
        crate::quad::composite(0.0, 1.0, 4, |s| self.eval(a + d * s, d))
    }
}

/// Primitive of a constant-curvature field on the cover of a closed model:
/// horocyclic for `K < 0` and constant `f`, co-gradient for exact fields on a
/// flat torus, zero for `Omega = 0`.
pub fn default_primitive(model: &SurfaceModel, field: &MagneticField) -> Result<PrimitiveField> {
    match (model.deck(), field) {
        (_, MagneticField::Constant(l)) if *l == 0.0 => Ok(PrimitiveField::Zero),
        (DeckGroup::Fuchsian(_), MagneticField::Constant(l)) if model.has_constant_curvature() => {
            // dx/y has differential dA for the unit metric; rescale for `a g`.
            Ok(PrimitiveField::horocyclic(l * model.scale()))
        }
        (DeckGroup::Lattice(_), MagneticField::Trig { mean, series }) if *mean == 0.0 && model.has_constant_curvature() => {
            let w = series.poisson_inverse().ok_or_else(|| {
                Error::Unsupported("field has a constant trigonometric term".into())
            })?;
            Ok(PrimitiveField::CoGradient(w))
        }
        _ => Err(Error::Unsupported(
            "no closed-form primitive for this field; the lift must be exact with a bounded primitive".into(),
        )),
    }
}
