//! Symbolic algebra of atomic transition operators and a single bosonic mode.

mod coefficient;
mod expr;

pub use coefficient::{Coefficient, GaussianRational, Symbols};
pub use expr::{AtomOp, BosonString, Level, Monomial, OperatorExpr};
