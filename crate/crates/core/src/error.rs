//! Error type shared by every stage of the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("symmetric eigensolver did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("(A, B) is not stabilizable (mode {mode_re:.6}{mode_im:+.6}i)")]
    NotStabilizable { mode_re: f64, mode_im: f64 },

    #[error("(A, Q) is not detectable (mode {mode_re:.6}{mode_im:+.6}i)")]
    NotDetectable { mode_re: f64, mode_im: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("budget {gamma} does not exceed the minimum achievable cost {min_cost}")]
    InfeasibleBudget { gamma: f64, min_cost: f64 },

    #[error("interior-point solver failed: {0}")]
    SolverFailure(String),

    #[error("SNR matrix has rank zero; no measurement channel is needed")]
    ZeroRank,

    #[error("non-finite input {0}")]
    NonFinite(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate covariance: diagonal entry {index} is {value:e}")]
    DegenerateCovariance { index: usize, value: f64 },

    #[error("bit sequence does not decode: {0}")]
    DecodeFailure(String),

    #[error("cell {0:?} is outside the codebook support and no escape codeword exists")]
    OutOfSupport(Vec<i64>),

    #[error("state norm {norm:e} exceeded the divergence threshold at step {step}")]
    NumericalDivergence { step: usize, norm: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("encoder and decoder estimates diverged at step {0}")]
    Desync(usize),

    #[error("quadrature failed to converge on [{lo}, {hi}]")]
    QuadratureFailure { lo: f64, hi: f64 },
}
