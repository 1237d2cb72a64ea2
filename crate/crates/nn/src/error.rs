use std::fmt;

/// Error type shared by the tensor ops, the tape, and the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum NnError {
    /// An op was handed tensors whose shapes do not line up.
    Shape { op: &'static str, detail: String },
    /// A structural precondition (layer wiring, divisibility, naming) failed.
    Config { detail: String },
    /// The engine was used out of order, e.g. backward called twice.
    State { detail: String },
    /// A NaN or infinity appeared where a finite value is required. `what`
    /// names the offending quantity (parameter name, "loss", ...).
    NonFinite { what: String },
    /// Underlying I/O failure while reading or writing a tensor file.
    Io(String),
    /// A tensor file or checkpoint did not match the expected layout.
    Format { detail: String, offset: Option<u64> },
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::Shape { op, detail } => write!(f, "shape error in {op}: {detail}"),
            NnError::Config { detail } => write!(f, "config error: {detail}"),
            NnError::State { detail } => write!(f, "state error: {detail}"),
            NnError::NonFinite { what } => write!(f, "non-finite value in {what}"),
            NnError::Io(detail) => write!(f, "io error: {detail}"),
            NnError::Format { detail, offset } => match offset {
                Some(off) => write!(f, "format error at byte {off}: {detail}"),
                None => write!(f, "format error: {detail}"),
            },
        }
    }
}

impl std::error::Error for NnError {}

impl From<std::io::Error> for NnError {
    fn from(e: std::io::Error) -> Self {
        NnError::Io(e.to_string())
    }
}
