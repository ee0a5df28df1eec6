//! Constrained quantum dynamics: Hermitian linear algebra, quantum states,
//! constraint geometry and the Lagrange-multiplier flows built on top.

pub mod constraints;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod parallel;
pub mod pauli;
pub mod random;
pub mod scenarios;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
