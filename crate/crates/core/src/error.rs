use thiserror::Error;

use crate::measurements::{SettingTag, Station};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, {len} entries")]
    NotSquare { rows: usize, len: usize },

    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid effect: {0}")]
    InvalidEffect(String),

    #[error("Born rule produced a complex value (imaginary part {imag:e})")]
    ComplexProbability { imag: f64 },

    #[error("probability {value:e} is outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("invalid measurement setting: {0}")]
    InvalidSetting(String),

    #[error("setting {tag} belongs to station {found}, expected station {expected}")]
    StationMismatch {
        tag: SettingTag,
        expected: Station,
        found: Station,
    },

    #[error("mixing weight {0} is outside the open interval (0, 1)")]
    InvalidWeight(f64),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("distribution is not normalized (sum {sum})")]
    NotNormalized { sum: f64 },

    #[error("conditional correlator ({tag1}, {tag2}) is undefined: block has zero probability")]
    UndefinedConditional { tag1: SettingTag, tag2: SettingTag },

    #[error("no trial records supplied")]
    EmptyRecords,

    #[error("model violation: {count} trial(s) observed in cell ({out1}, {out2}) with zero expected probability")]
    ModelViolation {
        out1: String,
        out2: String,
        count: u64,
    },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
