//! The regular hyperbolic octagon with interior angles 2pi/8 and its
//! side-pairing group, a genus-2 surface group.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use num_complex::Complex64;

use super::{DeckWord, Letter};
use crate::error::{Error, Result};
use crate::sl2::Sl2Element;

/// Word-length cap for greedy reduction.
pub const REDUCTION_CAP: usize = 64;

/// `cosh` of the hyperbolic distance from `z` to `i`.
pub fn cosh_dist_to_i(z: Complex64) -> f64 {
    1.0 + (z - Complex64::i()).norm_sqr() / (2.0 * z.im)
}

/// `cosh` of the hyperbolic distance between two points of the upper half-plane.
pub fn cosh_dist(z: Complex64, w: Complex64) -> f64 {
    1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im)
}

/// Point at hyperbolic distance `r` from `i` in direction `alpha`, measured
/// counterclockwise from the upward vector.
pub fn polar_point(r: f64, alpha: f64) -> Complex64 {
    (Sl2Element::rotation(0.5 * alpha) * Sl2Element::translation(r)).base_point()
}

/// Geodesic polar coordinates `(r, alpha)` of `z` about `i`.
pub fn polar_coords(z: Complex64) -> (f64, f64) {
    // The Cayley map sends i to 0 and the upward vector at i to the positive
    // real direction.
    let w = (z - Complex64::i()) / (z + Complex64::i());
    let r = 2.0 * w.norm().atanh();
    let alpha = w.arg();
    (r, alpha)
}

/// Fuchsian group of the genus-2 octagon surface.
#[derive(Clone, Debug)]
pub struct FuchsianGroup {
    generators: [Sl2Element; 4],
    /// All eight side pairings with the letter each one contributes.
    pairings: Vec<(Sl2Element, Letter)>,
    cosh_inradius: f64,
    cosh_circumradius: f64,
}

impl FuchsianGroup {
    pub fn genus2_octagon() -> Self {
        let cosh_rm = 1.0 + SQRT_2;
        let rm = cosh_rm.acosh();
        let theta = |i: usize| i as f64 * FRAC_PI_4;
        let pair = |i: usize, j: usize| {
            let mid = Sl2Element::rotation(0.5 * theta(i)) * Sl2Element::translation(rm);
            Sl2Element::half_turn(&mid) * Sl2Element::rotation(0.5 * (theta(i) - theta(j)))
        };
        let a = pair(0, 2);
        let b = pair(1, 3).inverse();
        let c = pair(4, 6);
        let d = pair(5, 7).inverse();
        let generators = [a, b, c, d];
        let mut pairings = Vec::with_capacity(8);
        for (k, g) in generators.iter().enumerate() {
            pairings.push((*g, Letter::new(k, 1)));
            pairings.push((g.inverse(), Letter::new(k, -1)));
        }
        Self {
            generators,
            pairings,
            cosh_inradius: cosh_rm,
            cosh_circumradius: cosh_rm * cosh_rm,
        }
    }

    /// Generators `a, b, c, d` with `[a,b][c,d] = 1`.
    pub fn generators(&self) -> &[Sl2Element; 4] {
        &self.generators
    }

    pub fn names(&self) -> [&'static str; 4] {
        ["a", "b", "c", "d"]
    }

    pub fn cosh_inradius(&self) -> f64 {
        self.cosh_inradius
    }

    pub fn cosh_circumradius(&self) -> f64 {
        self.cosh_circumradius
    }

    /// Frobenius distance of `[a,b][c,d]` from the identity.
    pub fn relation_residual(&self) -> f64 {
        let [a, b, c, d] = self.generators;
        let comm = |x: Sl2Element, y: Sl2Element| x * y * x.inverse() * y.inverse();
        (comm(a, b) * comm(c, d)).distance(&Sl2Element::IDENTITY)
    }

    /// Membership in the closed Dirichlet octagon about `i`.
    pub fn contains(&self, z: Complex64) -> bool {
        let c0 = cosh_dist_to_i(z);
        if c0 <= self.cosh_inradius {
            return true;
        }
        self.pairings
            .iter()
            .all(|(g, _)| cosh_dist_to_i(g.apply(z)) >= c0 * (1.0 - 1e-12))
    }

    /// Greedy reduction: repeatedly apply the pairing that brings the point
    /// closest to `i`. The returned word maps `z` to the reduced point.
    pub fn reduce(&self, z: Complex64) -> Result<(Complex64, DeckWord)> {
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Err(Error::Domain {
                chart: "upper half-plane",
                x: z.re,
                y: z.im,
            });
        }
        let mut cur = z;
        let mut applied: Vec<Letter> = Vec::new();
        loop {
            let c0 = cosh_dist_to_i(cur);
            if c0 <= self.cosh_inradius {
                break;
            }
            let mut best: Option<(f64, Complex64, Letter)> = None;
            for (g, letter) in &self.pairings {
                let w = g.apply(cur);
                let c = cosh_dist_to_i(w);
                if best.is_none_or(|(bc, _, _)| c < bc) {
                    best = Some((c, w, *letter));
                }
            }
            let (bc, w, letter) = best.expect("eight pairings");
            if bc >= c0 * (1.0 - 1e-12) {
                break;
            }
            if applied.len() == REDUCTION_CAP {
                return Err(Error::Reduction {
                    steps: REDUCTION_CAP,
                    x: z.re,
                    y: z.im,
                });
            }
            applied.push(letter);
            cur = w;
        }
        applied.reverse();
        Ok((cur, DeckWord::from_letters(applied)))
    }

    /// Product of the word's letters, left to right.
    pub fn word_element(&self, word: &DeckWord) -> Sl2Element {
        let mut g = Sl2Element::IDENTITY;
        for l in word.letters() {
            let base = if l.power > 0 {
                self.generators[l.generator]
            } else {
                self.generators[l.generator].inverse()
            };
            for _ in 0..l.power.unsigned_abs() {
                g = g * base;
            }
        }
        g
    }

    /// Frame on the axis of `g` closest to `i`, pointing in the direction of
    /// translation, so that `h exp(l X0) = g h` with `l` the translation length.
    pub fn axis_frame(g: &Sl2Element) -> Result<Sl2Element> {
        let m = g.matrix();
        let tr = g.trace();
        if tr.abs() <= 2.0 {
            return Err(Error::Degenerate("element is not hyperbolic".into()));
        }
        let sgn = tr.signum();
        let [[a, b], [c, d]] = m.map(|row| row.map(|v| sgn * v));
        let t = a + d;
        let mu = 0.5 * (t + (t * t - 4.0).sqrt());
        let eig = |lam: f64| -> [f64; 2] {
            // (a - lam) x + b y = 0 or c x + (d - lam) y = 0, whichever row is larger.
            if (a - lam).abs() + b.abs() >= c.abs() + (d - lam).abs() {
                [-b, a - lam]
            } else {
                [d - lam, -c]
            }
        };
        let up = eig(mu);
        let down = eig(1.0 / mu);
        let mut det = up[0] * down[1] - up[1] * down[0];
        let mut down = down;
        if det < 0.0 {
            down = [-down[0], -down[1]];
            det = -det;
        }
        let s = det.sqrt().recip();
        let h = Sl2Element::new(up[0] * s, down[0] * s, up[1] * s, down[1] * s)?;
        // Slide along the axis to the foot of the perpendicular from i.
        let [[p, q], [r, w]] = h.matrix();
        let t0 = 0.5 * ((q * q + w * w) / (p * p + r * r)).ln();
        Ok(h * Sl2Element::translation(t0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_holds() {
        let g = FuchsianGroup::genus2_octagon();
        assert!(g.relation_residual() < 1e-9, "{}", g.relation_residual());
    }

    #[test]
    fn translation_length_of_a() {
        let g = FuchsianGroup::genus2_octagon();
        let a = g.generators()[0];
        assert!((a.trace().abs() - (2.0 + SQRT_2)).abs() < 1e-12);
        let l = a.translation_length().unwrap();
        assert!((l - 2.0 * (1.0 + 0.5 * SQRT_2).acosh()).abs() < 1e-12);
    }

    #[test]
    fn polar_round_trip() {
        for (r, al) in [(0.5, 0.3), (1.7, -2.0), (3.0, 3.0)] {
            let z = polar_point(r, al);
            assert!((cosh_dist_to_i(z) - f64::cosh(r)).abs() < 1e-12);
            let (r2, al2) = polar_coords(z);
            assert!((r - r2).abs() < 1e-12);
            assert!((al - al2).abs() < 1e-12, "{al} {al2}");
        }
    }

    #[test]
    fn axis_frame_conjugates_to_translation() {
        let g = FuchsianGroup::genus2_octagon();
        for gen in g.generators() {
            let h = FuchsianGroup::axis_frame(gen).unwrap();
            let l = gen.translation_length().unwrap();
            let lhs = h * Sl2Element::translation(l);
            let rhs = *gen * h;
            assert!(lhs.distance(&rhs) < 1e-11);
            // foot of the perpendicular: moving along the axis increases distance
            let c0 = cosh_dist_to_i(h.base_point());
            for dt in [-0.01, 0.01] {
                let c1 = cosh_dist_to_i((h * Sl2Element::translation(dt)).base_point());
                assert!(c1 > c0);
            }
        }
    }

    #[test]
    fn vertices_are_on_circumcircle() {
        let g = FuchsianGroup::genus2_octagon();
        let v = polar_point(g.cosh_circumradius().acosh(), FRAC_PI_4 / 2.0);
        assert!(g.contains(v));
        let outside = polar_point(g.cosh_circumradius().acosh() + 0.05, FRAC_PI_4 / 2.0);
        assert!(!g.contains(outside));
    }
}
