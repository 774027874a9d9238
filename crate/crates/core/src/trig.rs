//! Finite sine series on the plane, used for closed-form periodic fields.

/// `amplitude * sin(kx * x + ky * y + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigSeries {
    pub terms: Vec<TrigTerm>,
}

impl TrigSeries {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    pub fn single(amplitude: f64, kx: f64, ky: f64, phase: f64) -> Self {
        Self::new(vec![TrigTerm {
            amplitude,
            kx,
            ky,
            phase,
        }])
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * (t.kx * x + t.ky * y + t.phase).sin())
            .sum()
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for t in &self.terms {
            let c = t.amplitude * (t.kx * x + t.ky * y + t.phase).cos();
            g[0] += c * t.kx;
            g[1] += c * t.ky;
        }
        g
    }

    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| -(t.kx * t.kx + t.ky * t.ky) * t.amplitude * (t.kx * x + t.ky * y + t.phase).sin())
            .sum()
    }

    /// Solution `w` of `Laplacian w = self`; every wavevector must be nonzero.
    pub fn poisson_inverse(&self) -> Option<TrigSeries> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let k2 = t.kx * t.kx + t.ky * t.ky;
            if k2 == 0.0 {
                return None;
            }
            out.push(TrigTerm {
                amplitude: -t.amplitude / k2,
                ..*t
            });
        }
        Some(TrigSeries::new(out))
    }

    pub fn scaled(&self, s: f64) -> TrigSeries {
        TrigSeries::new(
            self.terms
                .iter()
                .map(|t| TrigTerm {
                    amplitude: s * t.amplitude,
                    ..*t
                })
                .collect(),
        )
    }

    /// True when every wavevector is compatible with the square lattice of side `l`.
    pub fn periodic_on(&self, l: f64) -> bool {
        let base = std::f64::consts::TAU / l;
        self.terms.iter().all(|t| {
            let mx = t.kx / base;
            let my = t.ky / base;
            (mx - mx.round()).abs() < 1e-9 && (my - my.round()).abs() < 1e-9
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_inverse_inverts_laplacian() {
        let s = TrigSeries::new(vec![
            TrigTerm { amplitude: 1.0, kx: 1.0, ky: 2.0, phase: 0.3 },
            TrigTerm { amplitude: -0.5, kx: 3.0, ky: 0.0, phase: 1.0 },
        ]);
        let w = s.poisson_inverse().unwrap();
        for (x, y) in [(0.1, 0.2), (1.3, -0.7), (2.0, 5.0)] {
            assert!((w.laplacian(x, y) - s.value(x, y)).abs() < 1e-14);
        }
        assert!(TrigSeries::single(1.0, 0.0, 0.0, 0.0).poisson_inverse().is_none());
    }
}
