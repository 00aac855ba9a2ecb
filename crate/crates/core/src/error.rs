use thiserror::Error;

pub type Result<T, E = MeraError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MeraError {
    /// Two axes that are supposed to be summed together have different
    /// dimensions, or a buffer does not match its declared shape.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The network or a cone slice is not wired the way the layer geometry
    /// requires.
    #[error("structure error: {0}")]
    Structure(String),

    /// A value violates a numerical invariant (hermiticity, positivity, unit
    /// trace, tensor constraints).
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested computation would exceed a configured size guard.
    #[error("cost guard exceeded: {0}")]
    CostGuard(String),

    #[error("missing capability: {0}")]
    Capability(String),

    /// A serialized document could not be turned back into a value. `path`
    /// locates the offending element inside the document.
    #[error("load error at {path}: {message}")]
    Load { path: String, message: String },

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MeraError {
    pub(crate) fn load(path: impl Into<String>, message: impl Into<String>) -> Self {
        MeraError::Load {
            path: path.into(),
            message: message.into(),
        }
    }
}
