//! Exact algebraic flows on quotients of PSL(2,R).
//!
//! Frames are identified with group elements: `g` corresponds to the unit
//! vector `dg_i(up)` based at `g(i)` in the upper half-plane, so the identity
//! is the upward unit vector at `i`. Right multiplication by `exp(tX)` is the
//! flow generated by `X`.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::surfaces::{DeckGroup, DeckWord};

/// Trace-free 2x2 real matrix `[[a, b], [c, -a]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sl2Generator {
    a: f64,
    b: f64,
    c: f64,
}

/// Classification of a generator by the sign of its determinant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorClass {
    GeodesicLike,
    Horocyclic,
    Elliptic,
}

impl fmt::Display for GeneratorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorClass::GeodesicLike => "geodesic-like",
            GeneratorClass::Horocyclic => "horocyclic",
            GeneratorClass::Elliptic => "elliptic",
        })
    }
}

impl Sl2Generator {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Accepts a full matrix; the trace must vanish exactly.
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Result<Self> {
        if m[0][0] + m[1][1] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "generator trace is {}, must be exactly zero",
                m[0][0] + m[1][1]
            )));
        }
        Ok(Self::new(m[0][0], m[0][1], m[1][0]))
    }

    /// Geodesic flow generator `diag(1/2, -1/2)`.
    pub const fn geodesic() -> Self {
        Self::new(0.5, 0.0, 0.0)
    }

    /// Vertical (rotation) generator `[[0, 1/2], [-1/2, 0]]`.
    pub const fn vertical() -> Self {
        Self::new(0.0, 0.5, -0.5)
    }

    /// Standard nilpotent `[[0, 1], [0, 0]]`.
    pub const fn nilpotent() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    /// `X_lambda = X_0 + lambda V`, the magnetic flow with constant field lambda.
    pub fn magnetic(lambda: f64) -> Self {
        Self::new(0.5, 0.5 * lambda, -0.5 * lambda)
    }

    /// `X_1`, the horocycle flow in the magnetic family.
    pub fn horocyclic() -> Self {
        Self::magnetic(1.0)
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, -self.a]]
    }

    pub fn det(&self) -> f64 {
        -self.a * self.a - self.b * self.c
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (2.0 * self.a * self.a + self.b * self.b + self.c * self.c).sqrt()
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.a, s * self.b, s * self.c)
    }

    /// Eigenvalues `+-sqrt(-det)` for the geodesic-like class.
    pub fn real_eigenvalues(&self) -> Option<(f64, f64)> {
        let d = self.det();
        (d < 0.0).then(|| {
            let w = (-d).sqrt();
            (w, -w)
        })
    }
}

/// `det X` is treated as zero below this multiple of `|X|^2`.
const DET_ZERO_REL: f64 = 1e-14;

pub fn classify_generator(x: &Sl2Generator) -> (GeneratorClass, f64) {
    let det = x.det();
    let n2 = x.norm().powi(2);
    let class = if det.abs() <= DET_ZERO_REL * n2 {
        GeneratorClass::Horocyclic
    } else if det < 0.0 {
        GeneratorClass::GeodesicLike
    } else {
        GeneratorClass::Elliptic
    };
    (class, det)
}

/// Element of PSL(2,R), stored with unit determinant and a canonical sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sl2Element {
    m: [[f64; 2]; 2],
}

impl Sl2Element {
    pub const IDENTITY: Self = Self {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    /// Builds an element from a matrix with positive determinant, rescaling
    /// by `1/sqrt(det)`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Degenerate(format!(
                "matrix determinant {det} is not positive"
            )));
        }
        Ok(Self::from_raw([[a, b], [c, d]]))
    }

    fn from_raw(m: [[f64; 2]; 2]) -> Self {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let noise = 8.0 * f64::EPSILON * ((m[0][0] * m[1][1]).abs() + (m[0][1] * m[1][0]).abs());
        let mut g = Self { m };
        // Rescaling by a determinant that is mostly rounding error does harm.
        if (det - 1.0).abs() > noise {
            let s = det.sqrt().recip();
            for row in &mut g.m {
                for v in row {
                    *v *= s;
                }
            }
        }
        g.canonicalize();
        g
    }

    fn canonicalize(&mut self) {
        let first = [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
            .into_iter()
            .find(|v| *v != 0.0)
            .unwrap_or(1.0);
        if first < 0.0 {
            for row in &mut self.m {
                for v in row {
                    *v = -*v;
                }
            }
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::from_raw([[d, -b], [-c, a]])
    }

    /// `a(r) = diag(e^{r/2}, e^{-r/2})`, translation by `r` along the imaginary axis.
    pub fn translation(r: f64) -> Self {
        Self::from_raw([[(0.5 * r).exp(), 0.0], [0.0, (-0.5 * r).exp()]])
    }

    /// `k(t)`, rotating tangent vectors at `i` by `2t`.
    pub fn rotation(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        Self::from_raw([[c, s], [-s, c]])
    }

    /// Half-turn about the point `g(i)`.
    pub fn half_turn(g: &Self) -> Self {
        *g * Self::rotation(std::f64::consts::FRAC_PI_2) * g.inverse()
    }

    /// Distance in PSL(2,R): the smaller Frobenius distance over the two lifts.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut plus = 0.0;
        let mut minus = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                plus += (self.m[i][j] - other.m[i][j]).powi(2);
                minus += (self.m[i][j] + other.m[i][j]).powi(2);
            }
        }
        plus.min(minus).sqrt()
    }

    /// Mobius action on the upper half-plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let [[a, b], [c, d]] = self.m;
        (z * a + b) / (z * c + d)
    }

    /// Complex derivative of the Mobius map at `z`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let [[_, _], [c, d]] = self.m;
        (z * c + d).powi(-2)
    }

    /// Base point `g(i)` of the frame.
    pub fn base_point(&self) -> Complex64 {
        self.apply(Complex64::i())
    }

    /// Chart angle of the frame vector `dg_i(up)`.
    pub fn frame_angle(&self) -> f64 {
        let [[_, _], [c, d]] = self.m;
        std::f64::consts::FRAC_PI_2 - 2.0 * Complex64::new(d, c).arg()
    }

    /// Frame at `z` whose vector has chart angle `phi`.
    pub fn from_frame(z: Complex64, phi: f64) -> Result<Self> {
        if !(z.im > 0.0) {
            return Err(Error::Domain {
                chart: "upper half-plane",
                x: z.re,
                y: z.im,
            });
        }
        let s = z.im.sqrt();
        let p = Self::from_raw([[s, z.re / s], [0.0, 1.0 / s]]);
        Ok(p * Self::rotation(0.5 * (phi - std::f64::consts::FRAC_PI_2)))
    }

    /// Translation length `2 arccosh(|tr|/2)` for hyperbolic elements.
    pub fn translation_length(&self) -> Option<f64> {
        let t = self.trace().abs();
        (t > 2.0).then(|| 2.0 * (0.5 * t).acosh())
    }
}

impl Mul for Sl2Element {
    type Output = Sl2Element;

    fn mul(self, rhs: Sl2Element) -> Sl2Element {
        let a = self.m;
        let b = rhs.m;
        Sl2Element::from_raw([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Closed-form `exp(tX)`, branching on the sign of `det X`.
pub fn exp_generator(x: &Sl2Generator, t: f64) -> Sl2Element {
    let (class, det) = classify_generator(x);
    let [[a, b], [c, _]] = x.matrix();
    let (p, q) = match class {
        GeneratorClass::Horocyclic => (1.0, t),
        GeneratorClass::GeodesicLike => {
            // exp(tX) = e^{wt} (X + w)/2w - e^{-wt} (X - w)/2w, which avoids the
            // cancellation in cosh + a sinh / w for large |t|.
            let w = (-det).sqrt();
            let (wpa, wma) = if a >= 0.0 { (w + a, b * c / (w + a)) } else { (b * c / (w - a), w - a) };
            let (ep, em) = ((w * t).exp(), (-w * t).exp());
            let q = if (w * t).abs() < 1.0 { (w * t).sinh() / w } else { (ep - em) / (2.0 * w) };
            return Sl2Element::from_raw([
                [(ep * wpa + em * wma) / (2.0 * w), q * b],
                [q * c, (ep * wma + em * wpa) / (2.0 * w)],
            ]);
        }
        GeneratorClass::Elliptic => {
            let w = det.sqrt();
            ((w * t).cos(), (w * t).sin() / w)
        }
    };
    Sl2Element::from_raw([[p + q * a, q * b], [q * c, p - q * a]])
}

/// Frobenius residual of the geodesic/horocycle commutation relation
/// `phi_t(h_s(g)) = h_{s e^{-t}}(phi_t(g))`. Flows act by right
/// multiplication, so this is `exp(sN) exp(tX0) = exp(tX0) exp(s e^{-t} N)`.
pub fn horocycle_commutation_residual(t: f64, s: f64) -> f64 {
    let x0 = Sl2Generator::geodesic();
    let n = Sl2Generator::nilpotent();
    let lhs = exp_generator(&n, s) * exp_generator(&x0, t);
    let rhs = exp_generator(&x0, t) * exp_generator(&n, s * (-t).exp());
    lhs.distance(&rhs)
}

/// Conjugacy `c` with `c^{-1} X c = kappa N`.
#[derive(Clone, Copy, Debug)]
pub struct HorocycleConjugacy {
    pub c: Sl2Element,
    pub kappa: f64,
}

impl HorocycleConjugacy {
    /// Frobenius residual of `c^{-1} X c - kappa N`.
    pub fn residual(&self, x: &Sl2Generator) -> f64 {
        let ci = self.c.inverse().matrix();
        let c = self.c.matrix();
        let xm = x.matrix();
        let mut r = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut v = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        v += ci[i][k] * xm[k][l] * c[l][j];
                    }
                }
                let target = if (i, j) == (0, 1) { self.kappa } else { 0.0 };
                r += (v - target).powi(2);
            }
        }
        r.sqrt()
    }
}

/// Conjugates a nonzero parabolic generator to a multiple of `N`, using the
/// kernel vector of `X` as the first column of `c`.
pub fn conjugate_to_standard_horocycle(x: &Sl2Generator) -> Result<HorocycleConjugacy> {
    let n = x.norm();
    if n == 0.0 {
        return Err(Error::Degenerate("zero generator".into()));
    }
    let (class, det) = classify_generator(x);
    if class != GeneratorClass::Horocyclic || det.abs() > 1e-12 * n.max(1.0).powi(2) {
        return Err(Error::Classification { det });
    }
    let [[a, b], [c, _]] = x.matrix();
    // Kernel vector from the larger row of X.
    let (mut v0, mut v1) = if a * a + b * b >= a * a + c * c {
        (-b, a)
    } else {
        (a, c)
    };
    let len = v0.hypot(v1);
    v0 /= len;
    v1 /= len;
    if v0 < 0.0 || (v0 == 0.0 && v1 < 0.0) {
        v0 = -v0;
        v1 = -v1;
    }
    let (w0, w1) = (-v1, v0);
    // X w lies in the kernel line, so X w = kappa v.
    let xw0 = a * w0 + b * w1;
    let xw1 = c * w0 - a * w1;
    let kappa = xw0 * v0 + xw1 * v1;
    let cm = Sl2Element::from_raw([[v0, w0], [v1, w1]]);
    Ok(HorocycleConjugacy { c: cm, kappa })
}

/// One step of the algebraic flow on the quotient: right-multiply by
/// `exp(tX)` and bring the base point back into the fundamental domain.
pub fn quotient_flow_step(
    deck: &DeckGroup,
    g: &Sl2Element,
    x: &Sl2Generator,
    t: f64,
) -> Result<(Sl2Element, DeckWord)> {
    let fuchsian = deck
        .fuchsian()
        .ok_or_else(|| Error::Unsupported("quotient flow needs a Fuchsian deck group".into()))?;
    let moved = *g * exp_generator(x, t);
    let (_, word) = fuchsian.reduce(moved.base_point())?;
    let w = fuchsian.word_element(&word);
    Ok((w * moved, word))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Sl2Element, b: [[f64; 2]; 2], tol: f64) -> bool {
        let b = Sl2Element::new(b[0][0], b[0][1], b[1][0], b[1][1]).unwrap();
        a.distance(&b) <= tol
    }

    #[test]
    fn geodesic_exponential_is_diagonal() {
        let t = 0.7_f64;
        let g = exp_generator(&Sl2Generator::geodesic(), t);
        assert!(close(&g, [[(t / 2.0).exp(), 0.0], [0.0, (-t / 2.0).exp()]], 1e-15));
    }

    #[test]
    fn horocyclic_exponential_truncates() {
        let x1 = Sl2Generator::horocyclic();
        let m = x1.matrix();
        let sq = [
            m[0][0] * m[0][0] + m[0][1] * m[1][0],
            m[0][0] * m[0][1] + m[0][1] * m[1][1],
        ];
        assert_eq!(sq, [0.0, 0.0]);
        let g = exp_generator(&x1, 2.0);
        assert!(close(&g, [[2.0, 1.0], [-1.0, 0.0]], 1e-15));
    }

    #[test]
    fn exp_at_zero_is_identity() {
        for x in [Sl2Generator::geodesic(), Sl2Generator::magnetic(3.0), Sl2Generator::horocyclic()] {
            assert_eq!(exp_generator(&x, 0.0), Sl2Element::IDENTITY);
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_generator(&Sl2Generator::magnetic(0.0)),
            (GeneratorClass::GeodesicLike, -0.25)
        );
        assert_eq!(
            classify_generator(&Sl2Generator::magnetic(1.0)),
            (GeneratorClass::Horocyclic, 0.0)
        );
        assert_eq!(
            classify_generator(&Sl2Generator::magnetic(2.0)),
            (GeneratorClass::Elliptic, 0.75)
        );
    }

    #[test]
    fn commutation_examples() {
        assert_eq!(horocycle_commutation_residual(0.0, 3.0), 0.0);
        assert!(horocycle_commutation_residual(1.0, 1.0) <= 1e-13);
        let both = exp_generator(&Sl2Generator::nilpotent(), 1.0) * exp_generator(&Sl2Generator::geodesic(), 1.0);
        let h = (0.5f64).exp();
        assert!(close(&both, [[h, 1.0 / h], [0.0, 1.0 / h]], 1e-15));
    }

    #[test]
    fn conjugacy_examples() {
        let n = conjugate_to_standard_horocycle(&Sl2Generator::nilpotent()).unwrap();
        assert_eq!(n.c, Sl2Element::IDENTITY);
        assert_eq!(n.kappa, 1.0);

        let x1 = Sl2Generator::horocyclic();
        let c = conjugate_to_standard_horocycle(&x1).unwrap();
        assert!((c.kappa - 1.0).abs() < 1e-15);
        assert!(c.residual(&x1) <= 1e-10);

        let xt = x1.transpose();
        let c = conjugate_to_standard_horocycle(&xt).unwrap();
        assert!(c.residual(&xt) <= 1e-10);
    }

    #[test]
    fn conjugacy_errors() {
        assert!(matches!(
            conjugate_to_standard_horocycle(&Sl2Generator::geodesic()),
            Err(Error::Classification { .. })
        ));
        assert!(matches!(
            conjugate_to_standard_horocycle(&Sl2Generator::new(0.0, 0.0, 0.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn frames_round_trip() {
        let z = Complex64::new(0.3, 2.1);
        let g = Sl2Element::from_frame(z, 1.1).unwrap();
        assert!((g.base_point() - z).norm() < 1e-14);
        assert!((g.frame_angle() - 1.1).abs() < 1e-14);
        assert_eq!(Sl2Element::IDENTITY.frame_angle(), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn rotation_turns_frame() {
        let g = Sl2Element::rotation(0.4);
        assert!((g.base_point() - Complex64::i()).norm() < 1e-15);
        assert!((g.frame_angle() - (std::f64::consts::FRAC_PI_2 + 0.8)).abs() < 1e-14);
    }

    #[test]
    fn trace_free_enforced() {
        assert!(Sl2Generator::from_matrix([[1.0, 0.0], [0.0, -1.0]]).is_ok());
        assert!(Sl2Generator::from_matrix([[1.0, 0.0], [0.0, -0.9]]).is_err());
    }
}
