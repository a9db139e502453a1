mod algebra;
mod classical;
mod family;
mod group;

pub use algebra::*;
pub use classical::*;
pub use family::*;
pub use group::*;
