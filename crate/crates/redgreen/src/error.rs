use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid diagram: {0}")]
    Invalid(String),

    #[error("diagram is not planar: {0}")]
    NonPlanar(String),

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("operation requires the Lee theory (double dot = 1)")]
    WrongTheory,

    #[error("oracle requires a closed diagram")]
    OpenBoundary,
}

pub type Result<T> = std::result::Result<T, Error>;
