use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis is rank deficient: generator {index} depends on the preceding generators")]
    RankDeficient { index: usize },

    #[error("basis generators have inconsistent dimensions: generator {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("basis needs at least one generator, and each generator needs at least as many coordinates as there are generators")]
    BadShape,

    #[error("non-finite coordinate in generator {index}")]
    NonFinite { index: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("rank {rank} exceeds the enumeration cap of {cap}")]
    RankGuard { rank: usize, cap: usize },

    #[error("exhaustive ML search over {candidates} candidates exceeds the cap of {cap}")]
    SearchGuard { candidates: u128, cap: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol {0} is not a constellation point")]
    OffConstellation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for refusals caused by the desk-scale guards rather than bad input.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::RankGuard { .. } | Error::SearchGuard { .. })
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
