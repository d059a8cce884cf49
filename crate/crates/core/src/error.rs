use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("field not resolved at degrees {degrees:?}: off-node error {error:.3e} exceeds {tol:.1e} (relative)")]
    NotResolved {
        degrees: Vec<usize>,
        error: f64,
        tol: f64,
    },
    #[error("function is not strictly monotone on [{lo}, {hi}] (min |f'| = {min_slope:.3e})")]
    NotMonotone { lo: f64, hi: f64, min_slope: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("not renormalizable at level {level}: {reason}")]
    NotRenormalizable { level: usize, reason: String },
    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("tower too shallow: {needed} levels needed, {have} available")]
    TowerTooShallow { needed: usize, have: usize },
    #[error("singular Jacobian at {point:?}")]
    SingularJacobian { point: Vec<f64> },
    #[error("b^(2^n) underflows at level {level}")]
    UnderflowFrozen { level: usize },
    #[error("degenerate derivative at level {level}")]
    DegenerateDerivative { level: usize },
    #[error("not a toy model map: sup |d eps/dz| = {dz_norm:.3e}")]
    NotToyModel { dz_norm: f64 },
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("cone field not invariant at sample {sample}: ratio {ratio:.6e} >= 1")]
    NotInvariant { sample: usize, ratio: f64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
