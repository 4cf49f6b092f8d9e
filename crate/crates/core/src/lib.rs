//! Mixed least/greatest fixpoint equation systems over complete lattices.

pub mod abstraction;
pub mod adjoint;
pub mod apps;
pub mod eqsys;
pub mod error;
pub mod game;
pub mod lattice;
pub mod localsolver;
pub mod random;
pub mod upto;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};
