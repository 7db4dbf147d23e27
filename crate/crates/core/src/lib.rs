//! Pattern and formula avoidance on finite alphabets: morphic words,
//! factor sets, conjugacy classes, formula occurrences, power-freeness and
//! the exhaustive checks built on top of them.

pub mod builtin;
pub mod error;
pub mod formulas;
pub mod freeness;
pub mod index;
pub mod verify;
pub mod words;

pub use error::{Error, Result};
pub use formulas::{
    circular_formula, divides, find_occurrence, find_occurrence_at_end, find_occurrence_in_word, parse_formula,
    reverse_formula, Assignment, Formula, VarBounds, Variable,
};
pub use freeness::{
    count_free_words, enumerate_free_words, find_forbidden_repetition, last_position_check, lemma_length_bound,
    FreenessSpec, Rational, Repetition,
};
pub use index::{FactorIndex, FactorText, PlainWord};
pub use words::{
    apply_morphism, check_prolongable, conjugates, contained_conjugacy_classes, factor_set, fixed_point_prefix,
    image_factor_set, morphic_factor_set, ConjugacyClass, FactorSet, FactorSource, FixedPoint, MorphicImage, Morphism,
    Word,
};
