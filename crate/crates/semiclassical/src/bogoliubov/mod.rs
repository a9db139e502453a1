//! Quadratic-Hamiltonian evolution: the (F, G) system, the Riccati reduction
//! M = FG⁻¹, Gaussian-ansatz propagation and a direct truncated integrator.

mod flow;
mod path;
mod picard;
mod propagate;

pub use flow::{
    flow_invariants, integrate_flow, riccati_residual, sample_residuals, write_flow_csv, BogoliubovFlow,
    FlowResiduals, FlowSample, MAX_COND,
};
pub use path::{mixed_two_mode, rotation, squeeze, ConstantPath, FnPath, GeneratorPath, SampledPath};
pub use picard::{picard_flow, PicardResult};
pub use propagate::{propagate_direct, propagate_gaussian, transported_creation, CreatedState, DirectResult};
