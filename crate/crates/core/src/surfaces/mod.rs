//! Surface models: conformal charts, curvature and area data, deck groups and
//! fundamental-domain reduction.

mod field;
pub mod grid;
pub mod octagon;

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

pub use field::{GridField, MagneticField, RadialBump};
pub use grid::Grid;
pub use octagon::FuchsianGroup;

use crate::error::{Error, Result};
use crate::quad;
use crate::trig::TrigSeries;

/// Points are complex chart coordinates `x + iy`.
pub type ChartPoint = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    UpperHalfPlane,
    PoincareDisk,
    FlatPlane,
    SphereChart,
}

impl ChartKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChartKind::UpperHalfPlane => "upper-half-plane",
            ChartKind::PoincareDisk => "poincare-disk",
            ChartKind::FlatPlane => "flat-plane",
            ChartKind::SphereChart => "sphere-chart",
        }
    }
}

/// One letter `g^power` of a deck word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Letter {
    pub generator: usize,
    pub power: i32,
}

impl Letter {
    pub fn new(generator: usize, power: i32) -> Self {
        Self { generator, power }
    }
}

/// Word in the deck generators, read as a product from left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeckWord {
    letters: Vec<Letter>,
}

impl DeckWord {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a word, merging adjacent powers of the same generator.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if l.power == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.generator == l.generator => {
                    last.power += l.power;
                    if last.power == 0 {
                        out.pop();
                    }
                }
                _ => out.push(l),
            }
        }
        Self { letters: out }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Total number of generator applications.
    pub fn len(&self) -> usize {
        self.letters.iter().map(|l| l.power.unsigned_abs() as usize).sum()
    }

    pub fn inverse(&self) -> Self {
        Self::from_letters(
            self.letters
                .iter()
                .rev()
                .map(|l| Letter::new(l.generator, -l.power)),
        )
    }

    /// The product `self * other`.
    pub fn then_left(&self, other: &DeckWord) -> Self {
        Self::from_letters(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn format(&self, names: &[&str]) -> String {
        if self.letters.is_empty() {
            return "e".into();
        }
        self.letters
            .iter()
            .map(|l| format!("{}^{}", names[l.generator], l.power))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Translation lattice of a flat torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

impl Lattice {
    pub fn det(&self) -> f64 {
        self.v1[0] * self.v2[1] - self.v1[1] * self.v2[0]
    }

    fn coords(&self, z: ChartPoint) -> (f64, f64) {
        let d = self.det();
        (
            (z.re * self.v2[1] - z.im * self.v2[0]) / d,
            (self.v1[0] * z.im - self.v1[1] * z.re) / d,
        )
    }

    pub fn translation(&self, n1: i64, n2: i64) -> ChartPoint {
        Complex64::new(
            n1 as f64 * self.v1[0] + n2 as f64 * self.v2[0],
            n1 as f64 * self.v1[1] + n2 as f64 * self.v2[1],
        )
    }

    /// Reduces to the half-open cell `s v1 + t v2`, `s, t` in `[0, 1)`.
    pub fn reduce(&self, z: ChartPoint) -> (ChartPoint, DeckWord) {
        let (s, t) = self.coords(z);
        let (n1, n2) = (s.floor() as i64, t.floor() as i64);
        let w = z - self.translation(n1, n2);
        let word = DeckWord::from_letters([Letter::new(0, -n1 as i32), Letter::new(1, -n2 as i32)]);
        (w, word)
    }

    pub fn contains(&self, z: ChartPoint) -> bool {
        let (s, t) = self.coords(z);
        (0.0..1.0).contains(&s) && (0.0..1.0).contains(&t)
    }

    /// Total translation of a word.
    pub fn word_translation(&self, word: &DeckWord) -> ChartPoint {
        let mut n = [0i64; 2];
        for l in word.letters() {
            n[l.generator] += l.power as i64;
        }
        self.translation(n[0], n[1])
    }

    pub fn centre(&self) -> ChartPoint {
        self.translation(1, 1) * 0.5
    }
}

#[derive(Clone, Debug)]
pub enum DeckGroup {
    Trivial,
    Lattice(Lattice),
    Fuchsian(Arc<FuchsianGroup>),
}

impl DeckGroup {
    pub fn fuchsian(&self) -> Option<&FuchsianGroup> {
        match self {
            DeckGroup::Fuchsian(g) => Some(g),
            _ => None,
        }
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        match self {
            DeckGroup::Lattice(l) => Some(l),
            _ => None,
        }
    }

    pub fn generator_names(&self) -> Vec<&'static str> {
        match self {
            DeckGroup::Trivial => vec![],
            DeckGroup::Lattice(_) => vec!["T1", "T2"],
            DeckGroup::Fuchsian(g) => g.names().to_vec(),
        }
    }

    pub fn format_word(&self, word: &DeckWord) -> String {
        word.format(&self.generator_names())
    }

    /// Applies the deck transformation of `word` to a chart point.
    pub fn apply_word(&self, word: &DeckWord, z: ChartPoint) -> ChartPoint {
        match self {
            DeckGroup::Trivial => z,
            DeckGroup::Lattice(l) => z + l.word_translation(word),
            DeckGroup::Fuchsian(g) => g.word_element(word).apply(z),
        }
    }

    /// Complex derivative of the deck transformation of `word` at `z`.
    pub fn word_derivative(&self, word: &DeckWord, z: ChartPoint) -> Complex64 {
        match self {
            DeckGroup::Fuchsian(g) => g.word_element(word).derivative(z),
            _ => Complex64::new(1.0, 0.0),
        }
    }
}

/// Conformal factor data `sigma` for the metric `e^{2 sigma} |dz|^2`.
#[derive(Clone, Debug)]
enum Conformal {
    /// Determined by the chart kind.
    Model,
    Trig(TrigSeries),
    Grid(Arc<SigmaGrid>),
}

#[derive(Debug)]
struct SigmaGrid {
    sigma: Grid,
    dx: Grid,
    dy: Grid,
    lap: Grid,
}

/// `sigma`, its chart gradient and its flat Laplacian at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaJet {
    pub sigma: f64,
    pub grad: [f64; 2],
    pub lap: f64,
}

/// How a chart point is brought back into the canonical domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Recentering {
    pub point: ChartPoint,
    /// Rotation of chart directions under the deck map or chart change.
    pub turn: f64,
    pub word: DeckWord,
}

#[derive(Clone, Debug)]
pub struct SurfaceModel {
    name: String,
    chart: ChartKind,
    conformal: Conformal,
    /// Constant metric multiplier.
    scale: f64,
    deck: DeckGroup,
}

impl SurfaceModel {
    /// Genus-2 hyperbolic surface from the regular octagon, `K = -1`.
    pub fn genus2_octagon() -> Self {
        Self::genus2_octagon_scaled(1.0)
    }

    /// The octagon surface with metric multiplied by `a`, so `K = -1/a`.
    pub fn genus2_octagon_scaled(a: f64) -> Self {
        Self {
            name: "genus2-octagon".into(),
            chart: ChartKind::UpperHalfPlane,
            conformal: Conformal::Model,
            scale: a,
            deck: DeckGroup::Fuchsian(Arc::new(FuchsianGroup::genus2_octagon())),
        }
    }

    /// Square flat torus of side `l`.
    pub fn flat_torus(l: f64) -> Self {
        Self::flat_torus_lattice([l, 0.0], [0.0, l])
    }

    pub fn flat_torus_lattice(v1: [f64; 2], v2: [f64; 2]) -> Self {
        Self {
            name: "flat-torus".into(),
            chart: ChartKind::FlatPlane,
            conformal: Conformal::Model,
            scale: 1.0,
            deck: DeckGroup::Lattice(Lattice { v1, v2 }),
        }
    }

    /// Square torus of side `l` with metric `e^{2 sigma}|dz|^2`, `sigma` a sine series.
    pub fn conformal_torus(l: f64, sigma: TrigSeries) -> Result<Self> {
        if !sigma.periodic_on(l) {
            return Err(Error::InvalidArgument(
                "sigma series is not periodic on the torus".into(),
            ));
        }
        Ok(Self {
            name: "conformal-torus".into(),
            conformal: Conformal::Trig(sigma),
            ..Self::flat_torus(l)
        })
    }

    /// Torus whose period cell is the grid's bounding box, with sampled `sigma`.
    pub fn conformal_torus_grid(sigma: Grid) -> Self {
        let [x0, x1, y0, y1] = sigma.bounds();
        let (dx, dy) = sigma.fd4_gradient();
        let lap = sigma.fd4_laplacian();
        Self {
            name: "conformal-torus".into(),
            conformal: Conformal::Grid(Arc::new(SigmaGrid { sigma, dx, dy, lap })),
            ..Self::flat_torus_lattice([x1 - x0, 0.0], [0.0, y1 - y0])
        }
    }

    /// Round unit sphere in the stereographic chart, `K = 1`.
    pub fn sphere() -> Self {
        Self {
            name: "sphere".into(),
            chart: ChartKind::SphereChart,
            conformal: Conformal::Model,
            scale: 1.0,
            deck: DeckGroup::Trivial,
        }
    }

    pub fn half_plane() -> Self {
        Self {
            name: "half-plane".into(),
            chart: ChartKind::UpperHalfPlane,
            conformal: Conformal::Model,
            scale: 1.0,
            deck: DeckGroup::Trivial,
        }
    }

    pub fn poincare_disk() -> Self {
        Self {
            name: "poincare-disk".into(),
            chart: ChartKind::PoincareDisk,
            conformal: Conformal::Model,
            scale: 1.0,
            deck: DeckGroup::Trivial,
        }
    }

    pub fn flat_plane() -> Self {
        Self {
            name: "flat-plane".into(),
            chart: ChartKind::FlatPlane,
            conformal: Conformal::Model,
            scale: 1.0,
            deck: DeckGroup::Trivial,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> ChartKind {
        self.chart
    }

    pub fn deck(&self) -> &DeckGroup {
        &self.deck
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The same model with a trivial deck group, i.e. its universal cover.
    pub fn universal_cover(&self) -> Self {
        Self {
            deck: DeckGroup::Trivial,
            name: format!("{}-cover", self.name),
            ..self.clone()
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self.deck, DeckGroup::Trivial) || self.chart == ChartKind::SphereChart
    }

    /// True when curvature is constant over the model.
    pub fn has_constant_curvature(&self) -> bool {
        matches!(self.conformal, Conformal::Model)
    }

    pub fn euler_characteristic(&self) -> Option<i32> {
        match (&self.deck, self.chart) {
            (DeckGroup::Fuchsian(_), _) => Some(-2),
            (DeckGroup::Lattice(_), _) => Some(0),
            (DeckGroup::Trivial, ChartKind::SphereChart) => Some(2),
            _ => None,
        }
    }

    fn domain_error(&self, z: ChartPoint) -> Error {
        Error::Domain {
            chart: self.chart.name(),
            x: z.re,
            y: z.im,
        }
    }

    pub fn in_chart(&self, z: ChartPoint) -> bool {
        z.re.is_finite()
            && z.im.is_finite()
            && match self.chart {
                ChartKind::UpperHalfPlane => z.im > 0.0,
                ChartKind::PoincareDisk => z.norm_sqr() < 1.0,
                ChartKind::FlatPlane | ChartKind::SphereChart => true,
            }
    }

    /// `sigma` with first derivatives and flat Laplacian.
    pub fn sigma(&self, z: ChartPoint) -> Result<SigmaJet> {
        if !self.in_chart(z) {
            return Err(self.domain_error(z));
        }
        let offset = 0.5 * self.scale.ln();
        let (x, y) = (z.re, z.im);
        let mut jet = match (&self.conformal, self.chart) {
            (Conformal::Model, ChartKind::UpperHalfPlane) => SigmaJet {
                sigma: -y.ln(),
                grad: [0.0, -1.0 / y],
                lap: 1.0 / (y * y),
            },
            (Conformal::Model, ChartKind::PoincareDisk) => {
                let q = 1.0 - z.norm_sqr();
                SigmaJet {
                    sigma: (2.0 / q).ln(),
                    grad: [2.0 * x / q, 2.0 * y / q],
                    lap: 4.0 / (q * q),
                }
            }
            (Conformal::Model, ChartKind::SphereChart) => {
                let q = 1.0 + z.norm_sqr();
                SigmaJet {
                    sigma: (2.0 / q).ln(),
                    grad: [-2.0 * x / q, -2.0 * y / q],
                    lap: -4.0 / (q * q),
                }
            }
            (Conformal::Model, ChartKind::FlatPlane) => SigmaJet {
                sigma: 0.0,
                grad: [0.0; 2],
                lap: 0.0,
            },
            (Conformal::Trig(s), _) => SigmaJet {
                sigma: s.value(x, y),
                grad: s.gradient(x, y),
                lap: s.laplacian(x, y),
            },
            (Conformal::Grid(g), _) => SigmaJet {
                sigma: g.sigma.sample(x, y),
                grad: [g.dx.sample(x, y), g.dy.sample(x, y)],
                lap: g.lap.sample(x, y),
            },
        };
        jet.sigma += offset;
        Ok(jet)
    }

    /// Gaussian curvature `K = -e^{-2 sigma} Laplacian(sigma)`.
    pub fn curvature(&self, z: ChartPoint) -> Result<f64> {
        let jet = self.sigma(z)?;
        Ok(match (&self.conformal, self.chart) {
            (Conformal::Model, ChartKind::UpperHalfPlane | ChartKind::PoincareDisk) => -1.0 / self.scale,
            (Conformal::Model, ChartKind::SphereChart) => 1.0 / self.scale,
            (Conformal::Model, ChartKind::FlatPlane) => 0.0,
            _ => -(-2.0 * jet.sigma).exp() * jet.lap,
        })
    }

    /// Riemannian length of a chart vector at `z`.
    pub fn norm(&self, z: ChartPoint, v: Complex64) -> Result<f64> {
        Ok(self.sigma(z)?.sigma.exp() * v.norm())
    }

    /// Upper bound for `sigma` over the fundamental domain (sampling density).
    pub(crate) fn sigma_sup(&self) -> f64 {
        let offset = 0.5 * self.scale.ln();
        offset
            + match &self.conformal {
                Conformal::Model => 0.0,
                Conformal::Trig(s) => s.terms.iter().map(|t| t.amplitude.abs()).sum(),
                Conformal::Grid(g) => g.sigma.data().iter().cloned().fold(f64::MIN, f64::max),
            }
    }

    /// Canonical centre of the fundamental domain.
    pub fn centre(&self) -> ChartPoint {
        match (&self.deck, self.chart) {
            (DeckGroup::Lattice(l), _) => l.centre(),
            (_, ChartKind::UpperHalfPlane) => Complex64::i(),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn reduce_to_fundamental_domain(&self, z: ChartPoint) -> Result<(ChartPoint, DeckWord)> {
        if !self.in_chart(z) {
            return Err(self.domain_error(z));
        }
        match &self.deck {
            DeckGroup::Trivial => Err(Error::Unsupported(
                "reduction needs a non-trivial deck group".into(),
            )),
            DeckGroup::Lattice(l) => Ok(l.reduce(z)),
            DeckGroup::Fuchsian(g) => g.reduce(z),
        }
    }

    /// Brings `z` back to the canonical domain if it left it. For the sphere
    /// the chart is switched to `1/z` outside the unit disk.
    pub fn recenter(&self, z: ChartPoint) -> Result<Option<Recentering>> {
        match &self.deck {
            DeckGroup::Trivial => {
                if self.chart == ChartKind::SphereChart && z.norm_sqr() > 1.0 {
                    return Ok(Some(Recentering {
                        point: z.inv(),
                        turn: PI - 2.0 * z.arg(),
                        word: DeckWord::empty(),
                    }));
                }
                if !self.in_chart(z) {
                    return Err(self.domain_error(z));
                }
                Ok(None)
            }
            DeckGroup::Lattice(l) => {
                if l.contains(z) {
                    return Ok(None);
                }
                let (point, word) = l.reduce(z);
                Ok(Some(Recentering {
                    point,
                    turn: 0.0,
                    word,
                }))
            }
            DeckGroup::Fuchsian(g) => {
                let (point, word) = g.reduce(z)?;
                if word.is_empty() {
                    return Ok(None);
                }
                let turn = g.word_element(&word).derivative(z).arg();
                Ok(Some(Recentering { point, turn, word }))
            }
        }
    }

    /// Rejects fields that the model cannot carry.
    pub fn check_field(&self, field: &MagneticField) -> Result<()> {
        let ok = match (&self.deck, self.chart, field) {
            (_, _, MagneticField::Constant(_)) => true,
            (DeckGroup::Lattice(_), _, MagneticField::Trig { .. } | MagneticField::Grid(_)) => true,
            (_, ChartKind::UpperHalfPlane, MagneticField::Bump { .. }) => true,
            (DeckGroup::Trivial, ChartKind::FlatPlane, MagneticField::Trig { .. }) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "this field representation is not defined on {}",
                self.name
            )))
        }
    }

    /// Field value and chart gradient at a point of the cover. On the octagon
    /// surface non-constant fields are evaluated at the reduced point and the
    /// gradient is pulled back, so `f` is a genuine function on the quotient.
    pub fn field_at(&self, field: &MagneticField, z: ChartPoint) -> Result<(f64, [f64; 2])> {
        if let MagneticField::Constant(l) = field {
            return Ok((*l, [0.0; 2]));
        }
        if let DeckGroup::Fuchsian(g) = &self.deck {
            if octagon::cosh_dist_to_i(z) > g.cosh_inradius() {
                let (w, word) = g.reduce(z)?;
                if !word.is_empty() {
                    let (f, gw) = field.value_and_gradient(w);
                    let d = g.word_element(&word).derivative(z).conj();
                    let gz = d * Complex64::new(gw[0], gw[1]);
                    return Ok((f, [gz.re, gz.im]));
                }
            }
        }
        Ok(field.value_and_gradient(z))
    }

    /// `int g dA` over the fundamental domain by tensor Gauss-Legendre or
    /// periodic trapezoid quadrature.
    pub fn integrate<F: Fn(ChartPoint) -> f64>(&self, g: F) -> Result<f64> {
        match (&self.deck, self.chart) {
            (DeckGroup::Fuchsian(grp), _) => {
                let tanh_rm = grp.cosh_inradius().acosh().tanh();
                let mut total = 0.0;
                for i in 0..8 {
                    let mid = i as f64 * FRAC_PI_4;
                    total += quad::gl64().integrate(mid - FRAC_PI_8, mid + FRAC_PI_8, |al| {
                        let rmax = (tanh_rm / (al - mid).cos()).atanh();
                        quad::gl64().integrate(0.0, rmax, |r| g(octagon::polar_point(r, al)) * r.sinh())
                    });
                }
                Ok(self.scale * total)
            }
            (DeckGroup::Lattice(l), _) => {
                let n = 256;
                let h = 1.0 / n as f64;
                let mut total = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let z = Complex64::new(
                            i as f64 * h * l.v1[0] + j as f64 * h * l.v2[0],
                            i as f64 * h * l.v1[1] + j as f64 * h * l.v2[1],
                        );
                        total += g(z) * (2.0 * self.sigma(z)?.sigma).exp();
                    }
                }
                Ok(total * h * h * l.det().abs())
            }
            (DeckGroup::Trivial, ChartKind::SphereChart) => {
                let total = quad::gl64().integrate(0.0, TAU, |al| {
                    quad::gl64().integrate(0.0, PI, |psi| {
                        g(Complex64::from_polar((0.5 * psi).tan(), al)) * psi.sin()
                    })
                });
                Ok(self.scale * total)
            }
            _ => Err(Error::Unsupported(format!(
                "{} is not compact",
                self.name
            ))),
        }
    }

    /// Area of the fundamental domain by quadrature.
    pub fn surface_area(&self) -> Result<f64> {
        self.integrate(|_| 1.0)
    }

    /// Closed-form area `2 pi chi / K` for compact constant-curvature models
    /// with `K != 0`, and the cell area for flat tori.
    pub fn exact_area(&self) -> Option<f64> {
        if !self.has_constant_curvature() {
            return None;
        }
        match (&self.deck, self.chart) {
            (DeckGroup::Lattice(l), _) => Some(l.det().abs()),
            _ => {
                let chi = self.euler_characteristic()? as f64;
                let k = self.curvature(self.centre()).ok()?;
                Some(TAU * chi / k)
            }
        }
    }

    /// Exact area when available, otherwise quadrature.
    pub fn area(&self) -> Result<f64> {
        match self.exact_area() {
            Some(a) => Ok(a),
            None => self.surface_area(),
        }
    }
}

impl fmt::Display for SurfaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.chart.name())
    }
}

/// Free-function form of [`SurfaceModel::curvature`].
pub fn curvature_at(model: &SurfaceModel, z: ChartPoint) -> Result<f64> {
    model.curvature(z)
}

/// Free-function form of [`SurfaceModel::reduce_to_fundamental_domain`].
pub fn reduce_to_fundamental_domain(model: &SurfaceModel, z: ChartPoint) -> Result<(ChartPoint, DeckWord)> {
    model.reduce_to_fundamental_domain(z)
}

/// Free-function form of [`SurfaceModel::surface_area`].
pub fn surface_area(model: &SurfaceModel) -> Result<f64> {
    model.surface_area()
}
