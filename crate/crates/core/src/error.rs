use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("chart dimension {0} is not supported (must be 1..=4)")]
    UnsupportedDimension(usize),

    #[error("jet order {0} is not supported (must be at most 200)")]
    UnsupportedOrder(u32),

    #[error("order exhausted: {what} needs valid order {needed}, only {available} available")]
    OrderExhausted {
        what: String,
        needed: i64,
        available: i64,
    },

    #[error("index {index} exceeds dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("constant term is zero, jet is not invertible")]
    ZeroConstantTerm,

    #[error("division by zero")]
    DivisionByZero,

    #[error("degenerate metric at base point")]
    DegenerateMetric,

    #[error("symbol not in the image of E")]
    NotInImageOfEuler,

    #[error("unknown potential {0:?}")]
    UnknownPotential(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("syntax error at position {position}: {message}")]
    Parse { position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn exhausted(what: impl Into<String>, needed: i64, available: i64) -> Error {
    Error::OrderExhausted {
        what: what.into(),
        needed,
        available,
    }
}
