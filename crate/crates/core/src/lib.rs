//! Z-linear eigenvalue matrices generated from partial orders, an exact
//! symbolic eigensolver for them, and Kronecker composition of stochastic
//! automata built from such matrices.

pub mod bench;
pub mod error;
pub mod mx;
pub mod poset;
pub mod san;
pub mod solver;
pub mod stochastic;
pub mod symbolic;

pub use error::{Error, Result};
