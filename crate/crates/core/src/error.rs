use thiserror::Error;

use crate::special::SpecialFunctionError;

/// Failure modes of the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("unsupported origin behaviour: {0}")]
    UnsupportedOrigin(String),
    #[error("potential is not integrable at the origin: {0}")]
    NotIntegrable(String),
    #[error("integration failure near r = {r}: {reason}")]
    IntegrationFailure { r: f64, reason: String },
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("infinite spectrum: {0}")]
    InfiniteSpectrum(String),
    #[error("excluded case: {0}")]
    ExcludedCase(String),
    #[error("branch ambiguity at lambda = {lambda}, E = {energy}")]
    BranchAmbiguity { lambda: f64, energy: f64 },
    #[error("threshold extrapolation did not converge (spread {spread_over_pi} pi)")]
    NotConverged { spread_over_pi: f64 },
    #[error("ill-conditioned threshold fit: {0}")]
    IllConditioned(String),
    #[error("energy grid insufficient after {points} points")]
    GridInsufficient { points: usize },
    #[error("crossing ambiguity at lambda = {lambda}")]
    CrossingAmbiguity { lambda: f64 },
    #[error("out of validated range: {0}")]
    OutOfValidatedRange(String),
    #[error(transparent)]
    Special(#[from] SpecialFunctionError),
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;
