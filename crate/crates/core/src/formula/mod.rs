//! PATL state formulas: AST, text syntax and derived-operator normalization.

mod ast;
mod normalize;
mod parser;

pub use ast::{format_threshold, PathFormula, ProbabilityBound, Relation, StateFormula};
pub use normalize::{is_normalized, normalize};
pub use parser::{parse, ParseError, ParseErrorKind};
