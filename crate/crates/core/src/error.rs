use thiserror::Error;

use crate::words::FactorSet;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("letter {letter} is outside the alphabet of size {size}")]
    LetterOutOfRange { letter: u8, size: usize },

    #[error("operation requires a non-empty word")]
    EmptyWord,

    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),

    #[error("morphism is not prolongable on letter {0}")]
    NotProlongable(u8),

    #[error("morphism is not uniform")]
    NotUniform,

    #[error("length-{length} factors did not stabilize after {iterations} iterations")]
    NotStabilized {
        length: usize,
        iterations: usize,
        partial: Box<FactorSet>,
    },

    #[error("factor set of length {0} is not known to be complete")]
    IncompleteFactorSet(usize),

    #[error("formula syntax error: {0}")]
    FormulaSyntax(String),

    #[error("unbounded search: {0}")]
    Unbounded(String),

    #[error("invalid freeness spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
