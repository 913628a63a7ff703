//! Symbolic derivation and numerical validation of second-order effective
//! Hamiltonians for driven multi-channel cavity QED.
//!
//! The pieces, bottom up:
//!
//! * [`algebra`]: exact canonical-form algebra of `σ_ij` and `a`, `a†`.
//! * [`parser`]: text syntax for operator expressions, and [`scenario`] for
//!   run configuration files.
//! * [`effective`]: the effective-Hamiltonian generator, its decomposition and
//!   the first-order remainder bound.
//! * [`fock`]: dense matrices and states on the truncated space.
//! * [`dynamics`]: full and effective propagation and their comparison.

pub mod algebra;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod params;
pub mod parser;
pub mod scenario;

pub use algebra::{AtomOp, BosonString, Coefficient, Level, Monomial, OperatorExpr};
pub use effective::{
    decompose, effective_hamiltonian, first_order_remainder_bound, Channel, ChannelSpec, Decomposition,
};
pub use error::{Error, Result};
pub use params::Params;
pub use parser::{parse_operator_expr, tokenize};
pub use scenario::{parse_scenario, Scenario};
