use std::path::PathBuf;

use homogeom::exprcore::ParseError;
use thiserror::Error;

/// Anything wrong with the input. Always maps to exit code 2 and never to a
/// FALSIFICATION verdict.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("schema error at `{pointer}`: {message}")]
    Schema { pointer: String, message: String },
    #[error("parse error at `{pointer}` in \"{text}\": {source}")]
    Dsl { pointer: String, text: String, source: ParseError },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl InputError {
    pub fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        InputError::Schema { pointer: pointer.into(), message: message.into() }
    }
    pub fn invalid(e: impl std::fmt::Display) -> Self {
        InputError::Invalid(e.to_string())
    }
}
