//! Scenario runner: TOML configs, builtin verification suites, parameter
//! sweeps and JSON reports.

mod config;
mod report;
mod scenarios;
mod sweep;

pub use config::{complex_matrix, load_config, validate_config, Diagnostic, HamiltonianConfig, ModelConfig, OutputConfig, RunConfig, ScenarioConfig};
pub use report::{CheckRecord, Environment, Report, SCHEMA_VERSION};
pub use scenarios::{
    harmonic_expansion_errors, harmonic_packet, propagator_mismatch, run_scenario, sample_point, squeeze_flow_error,
    vector_field_residual, ScenarioInfo, SCENARIOS,
};
pub use sweep::{sweep, SweepParam, SweepTable};
