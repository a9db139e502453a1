//! Finite-truncation numerics for semiclassical mechanics: complex-WKB wave
//! packets, quadratic evolution in Fock space, constrained Fock inner
//! products and integration of Lie-algebra symmetries.

pub mod error;
pub mod bogoliubov;
pub mod cli;
pub mod fock;
pub mod constrained;
pub mod linalg;
pub mod packets;
pub mod quadrature;
pub mod symmetry;

pub use error::{Error, Result};
