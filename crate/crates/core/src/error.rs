use coact_nn::NnError;
use std::fmt;

/// Pipeline-level error: engine failures plus everything the data and
/// configuration layers can reject.
#[derive(Debug, Clone, PartialEq)]
pub enum CoactError {
    Nn(NnError),
    /// Invalid configuration; `detail` names the offending field or layer.
    Config { detail: String },
    /// Input file violated its declared format.
    Format { detail: String, offset: Option<u64> },
    /// Underlying I/O failure.
    Io(String),
    /// Data inconsistent with the run (missing modality, bad label length).
    Data { detail: String },
}

impl fmt::Display for CoactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoactError::Nn(e) => write!(f, "{e}"),
            CoactError::Config { detail } => write!(f, "config error: {detail}"),
            CoactError::Format { detail, offset } => match offset {
                Some(off) => write!(f, "format error at byte {off}: {detail}"),
                None => write!(f, "format error: {detail}"),
            },
            CoactError::Io(detail) => write!(f, "io error: {detail}"),
            CoactError::Data { detail } => write!(f, "data error: {detail}"),
        }
    }
}

impl std::error::Error for CoactError {}

impl From<NnError> for CoactError {
    fn from(e: NnError) -> Self {
        CoactError::Nn(e)
    }
}

impl From<std::io::Error> for CoactError {
    fn from(e: std::io::Error) -> Self {
        CoactError::Io(e.to_string())
    }
}

pub fn config_err(detail: impl Into<String>) -> CoactError {
    CoactError::Config {
        detail: detail.into(),
    }
}

pub fn data_err(detail: impl Into<String>) -> CoactError {
    CoactError::Data {
        detail: detail.into(),
    }
}
