use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the chart domain of {chart}")]
    Domain { chart: &'static str, x: f64, y: f64 },

    #[error("fundamental-domain reduction did not converge after {steps} steps at ({x}, {y})")]
    Reduction { steps: usize, x: f64, y: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("generator has det {det:e}, expected a parabolic (det 0) generator")]
    Classification { det: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("step too large: turning rate {rate} times dt {dt} exceeds pi/4")]
    StepTooLarge { rate: f64, dt: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("{what} did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no unimodal bracket found for the free-time minimisation")]
    Bracket { profile: Vec<(f64, f64)> },

    #[error("closing condition violated: defect {defect:e}")]
    ClosingDefect { defect: f64 },

    #[error("primitive inconsistent with the field: residual {residual:e}")]
    Inconsistent { residual: f64 },

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
