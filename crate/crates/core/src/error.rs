use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge after {terms} terms (partial sum {partial_sum:e})")]
    SeriesNotConverged { partial_sum: f64, terms: usize },

    #[error(
        "2-PHAV series failed at n = {n}, k = {k}: no convergence after {terms} terms (partial sum {partial_sum:e})"
    )]
    TwoPhavSeries {
        n: usize,
        k: usize,
        partial_sum: f64,
        terms: usize,
    },

    #[error("phase quadrature did not converge: change {change:e} at {nodes} nodes")]
    QuadratureNotConverged { nodes: usize, change: f64 },

    #[error("radial integral did not converge: change {change:e} at {intervals} intervals")]
    RadialNotConverged { intervals: usize, change: f64 },

    #[error("measure {measure} is negative ({value:e}) beyond rounding tolerance")]
    NegativeMeasure { measure: char, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal check failed: {0}")]
    CheckFailed(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
