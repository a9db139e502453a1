use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("basis mismatch between operands")]
    BasisMismatch,
    #[error("leakage {leakage:.3e} exceeds threshold {threshold:.3e}; raise the cutoff")]
    Leakage { leakage: f64, threshold: f64 },
    #[error("gaussian data not normalizable: |M| = {0}")]
    NotNormalizable(f64),
    #[error("perturbation radius violated: {0}")]
    Radius(String),
    #[error("series not converging: {0}")]
    NonConvergent(String),
    #[error("ill-conditioned matrix (cond = {0:.3e})")]
    IllConditioned(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("isotropy violated: {0}")]
    NotIsotropic(String),
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
