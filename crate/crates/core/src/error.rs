use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("bodies {i} and {j} collide (separation {separation:e})")]
    Singularity { i: usize, j: usize, separation: f64 },

    #[error("collision at grid node {node} between bodies {i} and {j}")]
    NodeCollision { node: usize, i: usize, j: usize },

    #[error("derivative order {order} exceeds supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("resonant exponent: k·α = 1 for k = {k}")]
    Resonance { k: usize },

    #[error("α = 1 has a logarithmic correction; use the log-term expansion instead of Γ coefficients")]
    LogTerm,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("collision approach near t = {time} (estimated blow-up at t ≈ {blowup})")]
    CollisionApproach { time: f64, blowup: f64 },

    #[error("line search kept hitting the collision guard at iteration {iteration}")]
    CollisionGuard { iteration: usize },

    #[error("trajectory is not expansive: {0}")]
    NotExpansive(String),

    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
