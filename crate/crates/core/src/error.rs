use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrsError {
    #[error("invalid link geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected} IRS elements, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid phase vector: {0}")]
    InvalidPhases(String),

    #[error("degenerate SNR variance (E[g] = {m1:e}, E[g^2] = {m2:e})")]
    DegenerateVariance { m1: f64, m2: f64 },

    #[error("{function}: argument outside the domain ({detail})")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("{function}: no convergence after {iterations} iterations")]
    NoConvergence {
        function: &'static str,
        iterations: usize,
    },

    #[error("invalid optimizer settings: {0}")]
    InvalidSettings(String),

    #[error("exhaustive search over 2^{log2_candidates} candidates exceeds the 2^20 guard")]
    SearchTooLarge { log2_candidates: u64 },
}

pub type Result<T> = std::result::Result<T, IrsError>;
