use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("map image left the cylinder: first component {y} at (y={from_y}, s={from_s})")]
    NonpositiveImage { y: f64, from_y: f64, from_s: f64 },

    #[error("point (tau={tau}, s={s}) is not a fixed point: residual {residual:e}")]
    NotAFixedPoint { tau: f64, s: f64, residual: f64 },

    #[error("fixed point is not a saddle ({0})")]
    NotASaddle(String),

    #[error("grid of {n} points cannot resolve the diagram: {detail}")]
    DegenerateGrid { n: usize, detail: String },

    #[error("window {window} too large: {detail}")]
    WindowTooLarge { window: f64, detail: String },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("root is not bracketed on [{a}, {b}]")]
    NotBracketed { a: f64, b: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("orbit diverged: {0}")]
    Diverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}
