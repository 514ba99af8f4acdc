use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("parse error at line {line}: {message}")]
    ParseLine { line: usize, message: String },

    #[error("shape mismatch in layer {layer}: {message}")]
    Shape { layer: usize, message: String },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {label} out of range (network has {classes} outputs)")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("constraint {index} has support that fits no subset")]
    UncoveredConstraint { index: usize },

    #[error("subsets violate the running intersection property at position {position}")]
    RipViolation { position: usize },

    #[error("relaxation order too low: polynomial of degree {degree} at order {order}")]
    DegreeDeficit { degree: u32, order: u32 },

    #[error("objective moment {0} is not carried by any PSD block")]
    UnsupportedObjective(String),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("solver failure{context}: {status}")]
    Solver { status: String, context: String },

    #[error("region containment: {0}")]
    Containment(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
