use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: needs {needed} digits/entries but only {available} are available")]
    IndexOutOfRange {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation function must have zero mean (mean-zero rule: c_0 = 0), got c_0 = {0}")]
    MeanNonzero(Complex64),

    #[error("covariance factorization failed at leading minor {minor} (pivot {pivot:e})")]
    Factorization { minor: usize, pivot: f64 },

    #[error("fixed point did not converge at z = {z} after {iterations} iterations (best m = {best}, residual {residual:e})")]
    NonConvergence {
        z: Complex64,
        best: Complex64,
        residual: f64,
        iterations: usize,
    },

    #[error("eigensolver failed on matrix {fingerprint}: {message}")]
    Solver { fingerprint: String, message: String },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("no eigenvalues in window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("window leaves the bulk: density {density:.4} at E = {energy:.4} is below {threshold}")]
    OutsideBulk {
        energy: f64,
        density: f64,
        threshold: f64,
    },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Factorization { .. }
                | Error::NonConvergence { .. }
                | Error::Solver { .. }
                | Error::Singular(_)
        )
    }
}
