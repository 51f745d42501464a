use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid attention structure: {0}")]
    InvalidAttention(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("agent {agent} uses a local mean-field conjecture but has an empty attention set")]
    EmptyAttention { agent: usize },

    #[error("regressor of agent {agent} vanishes (|z| = {value:.3e}); consistent conjecture is undefined")]
    DegenerateRegressor { agent: usize, value: f64 },

    #[error("baseline Nash cost {0:.3e} is too close to zero; value of misspecification is undefined")]
    ZeroBaselineCost(f64),

    #[error("learning dynamics diverged at step {step} (|x|_inf = {norm:.3e})")]
    Diverged { step: usize, norm: f64 },

    #[error("distortion budget must be positive, got {0}")]
    InfeasibleBudget(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidGame(_)
                | Error::InvalidAttention(_)
                | Error::InvalidParams(_)
                | Error::EmptyAttention { .. }
                | Error::InfeasibleBudget(_)
        )
    }
}
