//! Truncated bosonic Fock space over d modes with a total-quanta cutoff.

mod basis;
mod gaussian;
mod norms;
mod ops;
mod vector;

pub use basis::{binomial, BasisDescriptor, ModeBasis, Occ, MAX_MODES};
pub use gaussian::{
    decay_prefactor, gaussian_perturb_series, gaussian_state, pair_creation_terms, perturb_term_norms,
    perturbation_radius, GaussianData, GaussianState, PerturbSeries,
};
pub use norms::{
    l2_norm, monomial_bound_constant, monomial_bound_constant_exact, number_operator,
    number_operator_bound_constant, weighted_norm, WeightOperator,
};
pub use ops::{
    adag, ann, apply_ladder, apply_matrix, apply_monomial, apply_quadratic, apply_terms, displacement,
    displacement_generator_terms, displacement_matrix, ladder_terms, monomial_terms, second_quantized,
    terms_matrix, top_shell_mass, Ladder, Op, QuadraticGenerator, Term,
};
pub use vector::{FockVector, FockVectorJson};
