//! The constraint language: AST, parser, canonical serializer and validation.

pub mod ast;
pub mod ops;
mod parser;
mod serialize;
mod validate;

pub use ast::*;
pub use parser::parse_program;
pub use serialize::{serialize, write_constraint, write_num, write_seg};
pub use validate::{validate, ValidationReport};

use crate::scene::Scene;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("line {line}, col {col}: {message}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl DslError {
    pub fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        DslError {
            line,
            col,
            message: message.into(),
        }
    }
}

/// Parses `source` and binds `segK` references against `scene`.
pub fn parse(source: &str, scene: &Scene) -> Result<ConstraintProgram, DslError> {
    parse_program(source, Some(scene.len()))
}
