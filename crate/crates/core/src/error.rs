use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown coefficient family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("tail integral diverges: power-law exponent {exponent} does not exceed 1")]
    DivergentTail { exponent: f64 },

    #[error("sampling too coarse: {0}")]
    Undersampled(String),

    #[error(
        "hypothesis |W(x)|(x+1) <= gamma violated: worst node x = {x} has |W|(x+1) = {value} > gamma = {gamma}"
    )]
    HypothesisViolated { x: f64, value: f64, gamma: f64 },

    #[error("no convergence after {iterations} iterations, last residual {residual:e}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("step size underflow at x = {position} (last accepted position)")]
    StepUnderflow { position: f64 },

    #[error("step budget exhausted at x = {position}")]
    TooManySteps { position: f64 },

    #[error("transfer matrix determinant drifted by {drift:e} at x = {position}; use a smaller tolerance")]
    DeterminantDrift { position: f64, drift: f64 },

    #[error("resolvent system is singular or ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("density is not strictly positive at parameters {nodes:?}")]
    DensityZeros { nodes: Vec<f64> },

    #[error("requested parameter {requested} exceeds density coverage {available}")]
    Coverage { requested: f64, available: f64 },

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("nonpositive value {value} at x = {x} inside the fit range")]
    NonPositive { x: f64, value: f64 },

    #[error("solutions are linearly dependent (Wronskian {0:e})")]
    DependentSolutions(f64),

    #[error("inward integration overflowed at energy {energy} even after rescaling")]
    Overflow { energy: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
