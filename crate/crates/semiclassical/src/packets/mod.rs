//! Semiclassical wave packets K_X f, composed packets over isotropic manifolds and
//! their evolution.

mod composed;
mod evolve;
mod forms;
mod grid;

pub use composed::*;
pub use evolve::*;
pub use forms::*;
pub use grid::*;

#[cfg(test)]
mod tests;
