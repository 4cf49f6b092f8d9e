//! Verification front-ends: μ-calculus model checking, (bi)similarity,
//! NFA language equivalence and Łukasiewicz fixpoint terms.

pub mod bisim;
pub mod lukas;
pub mod mucalc;
pub mod nfa;
pub mod pndt;
pub mod system;
pub(crate) mod lexer;
pub mod ts;

pub use lexer::parse_rational;
