//! Instance files and synthetic instance generators.

mod generate;
mod native;
mod uai;

use thiserror::Error;

pub use generate::{generate, grid_edges, GenerateError, GeneratorKind, GeneratorSpec};
pub use native::{parse_native, write_native, MAGIC};
pub use uai::{parse_uai, write_uai, DEFAULT_ZERO_FLOOR};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}
