//! Sample means with standard errors.

/// Mean of a sample with its standard error `s / sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    /// Welford accumulation in sample order, so the result depends only on
    /// the order of `values`.
    pub fn from_samples(values: &[f64]) -> Self {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (k, v) in values.iter().enumerate() {
            let d = v - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (v - mean);
        }
        let n = values.len();
        let stderr = if n > 1 {
            (m2.max(0.0) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n: 0,
        }
    }

    /// `|mean - target| <= sigmas * stderr + floor`.
    pub fn consistent_with(&self, target: f64, sigmas: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.stderr + floor
    }
}

/// Samples with their estimate, for reporting per-sample contributions.
#[derive(Clone, Debug)]
pub struct MonteCarlo {
    pub estimate: Estimate,
    pub contributions: Vec<f64>,
}

impl MonteCarlo {
    pub fn new(contributions: Vec<f64>) -> Self {
        Self {
            estimate: Estimate::from_samples(&contributions),
            contributions,
        }
    }
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    let e = Estimate::from_samples(values);
    if values.len() < 2 {
        return 0.0;
    }
    e.stderr * e.stderr * (values.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!((variance(&[1.0, 2.0, 3.0, 4.0]) - 1.25).abs() < 1e-15);
        let c = Estimate::from_samples(&[0.3; 10]);
        assert_eq!(c.stderr, 0.0);
        assert!(c.consistent_with(0.3, 3.0, 1e-15));
    }
}
