//! Displacement-integral inner products on isotropic planes, their evolution
//! under quadratic flows, and composed Fock states.

mod composed;
mod inner;
mod kernel;
mod plane;

pub use composed::{composed_inner, subspace_distance, transform_composed, ComposedFockState, ComposedNode, TransformedState};
pub use inner::{
    certified_box, decay_profile, inner_constrained, invariance_check, regularized_inner, regularized_inner_hermite,
    DecayProfile, InnerRecord, InvarianceReport, QuadratureOptions,
};
pub use kernel::{single_mode_displacement, DisplacementKernel};
pub use plane::{evolve_plane, make_plane, make_plane_with_tol, make_point_plane, IsotropicPlane, ISOTROPY_TOL};

#[cfg(test)]
mod tests;
