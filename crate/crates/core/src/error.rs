use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("remainder R_{k} = {value} is not positive")]
    NonPositiveRemainder { k: usize, value: f64 },

    #[error("ladder with {requested} levels is not admissible; at most {max_levels} levels keep every remainder positive")]
    LadderTooLong { requested: usize, max_levels: usize },

    #[error("level count {0} is too small, need at least 2")]
    TooFewLevels(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("function undefined at diagonal index {index} (argument {argument})")]
    Domain { index: usize, argument: f64 },

    #[error("operator is not diagonal (max off-diagonal magnitude {0:e})")]
    NotDiagonal(f64),

    #[error("operator is not Hermitian (residual {residual:e}, allowed {allowed:e})")]
    NotHermitian { residual: f64, allowed: f64 },

    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),

    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("series order must be at least 1")]
    InvalidOrder,

    #[error("quadrature did not reach tolerance {requested:e} (estimate {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },
}
