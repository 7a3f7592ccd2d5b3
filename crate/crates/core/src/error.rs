use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("indefinite signature ({p}, {q}) is outside the scope of {op}")]
    Indefinite {
        p: usize,
        q: usize,
        op: &'static str,
    },

    #[error("point is outside the cone: {0}")]
    OutsideCone(String),

    #[error("non-positive diagonal entry {value} at index {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("singular evaluation: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
