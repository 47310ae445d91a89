use std::fmt;

/// Errors produced by sketch construction, stream parsing and estimation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A numeric parameter was outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A line of a stream file could not be turned into an update.
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },

    /// Two sketches with different seeds, shapes or exponents were combined.
    #[error("incompatible sketches: {0}")]
    Incompatible(String),

    /// A sketch was asked for more precision than it was sized for.
    #[error("sketch sized for epsilon {sized} cannot deliver epsilon {requested}")]
    Undersized { sized: f64, requested: f64 },

    /// The query is undefined for the current stream contents.
    #[error("undefined input: {0}")]
    Undefined(&'static str),

    /// A residual query found no element holding most of the mass.
    #[error("no heavy element: the residual moment needs one item with most of the L1 mass")]
    NoHeavyHitter,

    /// Serialized sketch bytes were malformed.
    #[error("corrupt sketch encoding: {0}")]
    Decode(String),
}

/// What went wrong on a particular stream line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Malformed(String),
    IndexOutOfRange { index: i64, universe: u64 },
    ZeroDelta,
    BadHeader(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Malformed(text) => write!(f, "malformed update `{text}`"),
            Self::IndexOutOfRange { index, universe } => {
                write!(f, "index {index} outside [1, {universe}]")
            }
            Self::ZeroDelta => f.write_str("zero delta"),
            Self::BadHeader(text) => write!(f, "bad header `{text}`"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
