use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "eigensolver did not converge after {iters} iterations (residual {residual:.3e}, best eigenvalue {lambda:.6e})"
    )]
    EigenConvergence {
        iters: usize,
        residual: f64,
        lambda: f64,
        vector: Vec<f64>,
    },

    #[error("sufficient-descent floor violated at iteration {iter} ({step} step): decrease {decrease:.3e} < floor {floor:.3e}; the supplied constants underestimate the true ones, use adaptive mode")]
    ConstantMisestimate {
        iter: usize,
        step: &'static str,
        decrease: f64,
        floor: f64,
    },

    #[error(
        "epsilon calibration failed: no constant on the grid gives per-point failure below 1/(3n) for n={n}, k={k}"
    )]
    Calibration { n: usize, k: usize },

    #[error("training diverged at iteration {iter}")]
    Divergence {
        iter: usize,
        trajectory: Box<crate::mcsim::Trajectory>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Param(msg.into())
}
