//! Magnetic field strengths `f`, with `Omega = f dA`.

use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;
use super::octagon::cosh_dist_to_i;
use crate::quad;
use crate::trig::TrigSeries;

/// Zero-mean radial profile about `i` in the upper half-plane:
/// `beta(r) = (1 - s^2)^3 (1 - alpha s^2)` with `s = r / radius`, zero for
/// `r >= radius`, and `alpha` chosen so that `int beta dA = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialBump {
    pub radius: f64,
    alpha: f64,
}

impl RadialBump {
    pub fn new(radius: f64) -> Self {
        let w = |r: f64, k: i32| {
            let s = r / radius;
            (1.0 - s * s).powi(3) * s.powi(k) * r.sinh()
        };
        let i0 = quad::composite(0.0, radius, 8, |r| w(r, 0));
        let i2 = quad::composite(0.0, radius, 8, |r| w(r, 2));
        Self {
            radius,
            alpha: i0 / i2,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn profile(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let s2 = (r / self.radius).powi(2);
        (1.0 - s2).powi(3) * (1.0 - self.alpha * s2)
    }

    /// `beta'(r) / sinh(r)`, finite at the centre.
    fn slope_over_sinh(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let s2 = (r / self.radius).powi(2);
        let q = -6.0 * (1.0 - s2).powi(2) * (1.0 - self.alpha * s2) - 2.0 * self.alpha * (1.0 - s2).powi(3);
        let r_over_sinh = if r < 1e-8 { 1.0 } else { r / r.sinh() };
        q * r_over_sinh / (self.radius * self.radius)
    }

    /// `int_0^r beta(s) sinh(s) ds`, the flux of `beta dA` through the disk
    /// of radius `r` divided by `2 pi`.
    pub fn flux(&self, r: f64) -> f64 {
        let r = r.min(self.radius);
        if r <= 0.0 {
            return 0.0;
        }
        quad::gl24().integrate(0.0, r, |s| self.profile(s) * s.sinh())
    }

    /// Value and chart gradient of `beta(d(z, i))`.
    pub fn eval(&self, z: Complex64) -> (f64, [f64; 2]) {
        let ch = cosh_dist_to_i(z);
        let r = ch.max(1.0).acosh();
        if r >= self.radius {
            return (0.0, [0.0; 2]);
        }
        let (x, y) = (z.re, z.im);
        // d cosh(r) = (x / y) dx + (y^2 - x^2 - 1) / (2 y^2) dy
        let k = self.slope_over_sinh(r);
        (
            self.profile(r),
            [k * x / y, k * (y * y - x * x - 1.0) / (2.0 * y * y)],
        )
    }
}

/// Grid-sampled field with precomputed derivative grids.
#[derive(Clone, Debug)]
pub struct GridField {
    value: Grid,
    dx: Grid,
    dy: Grid,
}

impl GridField {
    pub fn new(value: Grid) -> Self {
        let (dx, dy) = value.fd4_gradient();
        Self { value, dx, dy }
    }

    pub fn grid(&self) -> &Grid {
        &self.value
    }
}

#[derive(Clone, Debug)]
pub enum MagneticField {
    Constant(f64),
    /// `mean + series`, periodic on a flat torus.
    Trig { mean: f64, series: TrigSeries },
    /// `base + amplitude * beta`, for the upper half-plane chart.
    Bump {
        base: f64,
        amplitude: f64,
        bump: RadialBump,
    },
    Grid(Arc<GridField>),
}

impl MagneticField {
    pub fn constant(lambda: f64) -> Self {
        MagneticField::Constant(lambda)
    }

    /// `base + amplitude * beta` with the bump filling the inscribed disk of
    /// the genus-2 octagon.
    pub fn octagon_bump(base: f64, amplitude: f64) -> Self {
        let radius = (1.0 + std::f64::consts::SQRT_2).acosh();
        MagneticField::Bump {
            base,
            amplitude,
            bump: RadialBump::new(radius),
        }
    }

    pub fn value(&self, z: Complex64) -> f64 {
        match self {
            MagneticField::Constant(l) => *l,
            MagneticField::Trig { mean, series } => mean + series.value(z.re, z.im),
            MagneticField::Bump {
                base,
                amplitude,
                bump,
            } => base + amplitude * bump.eval(z).0,
            MagneticField::Grid(g) => g.value.sample(z.re, z.im),
        }
    }

    /// Chart partial derivatives `(f_x, f_y)`.
    pub fn gradient(&self, z: Complex64) -> [f64; 2] {
        match self {
            MagneticField::Constant(_) => [0.0; 2],
            MagneticField::Trig { series, .. } => series.gradient(z.re, z.im),
            MagneticField::Bump {
                amplitude, bump, ..
            } => {
                let g = bump.eval(z).1;
                [amplitude * g[0], amplitude * g[1]]
            }
            MagneticField::Grid(g) => [g.dx.sample(z.re, z.im), g.dy.sample(z.re, z.im)],
        }
    }

    pub fn value_and_gradient(&self, z: Complex64) -> (f64, [f64; 2]) {
        match self {
            MagneticField::Bump {
                base,
                amplitude,
                bump,
            } => {
                let (b, g) = bump.eval(z);
                (base + amplitude * b, [amplitude * g[0], amplitude * g[1]])
            }
            _ => (self.value(z), self.gradient(z)),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            MagneticField::Constant(l) => Some(*l),
            _ => None,
        }
    }

    /// `s * f`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            MagneticField::Constant(l) => MagneticField::Constant(s * l),
            MagneticField::Trig { mean, series } => MagneticField::Trig {
                mean: s * mean,
                series: series.scaled(s),
            },
            MagneticField::Bump {
                base,
                amplitude,
                bump,
            } => MagneticField::Bump {
                base: s * base,
                amplitude: s * amplitude,
                bump: *bump,
            },
            MagneticField::Grid(g) => {
                let scale = |grid: &Grid| {
                    Grid::new(
                        grid.dims().0,
                        grid.dims().1,
                        grid.bounds(),
                        grid.data().iter().map(|v| s * v).collect(),
                    )
                    .expect("scaling keeps a valid grid")
                };
                MagneticField::Grid(Arc::new(GridField {
                    value: scale(&g.value),
                    dx: scale(&g.dx),
                    dy: scale(&g.dy),
                }))
            }
        }
    }
}
