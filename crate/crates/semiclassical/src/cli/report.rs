use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    /// The mathematical statement this check verifies.
    pub paper_anchor: String,
    /// Absent when the check could not be executed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn measured(name: &str, anchor: &str, residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.into(),
            paper_anchor: anchor.into(),
            residual: Some(residual),
            tolerance,
            pass: residual <= tolerance,
            error: None,
        }
    }

    pub fn failed(name: &str, anchor: &str, tolerance: f64, error: String) -> Self {
        CheckRecord { name: name.into(), paper_anchor: anchor.into(), residual: None, tolerance, pass: false, error: Some(error) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub seed: u64,
}

impl Environment {
    pub fn current(seed: u64) -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub scenario: String,
    pub checks: Vec<CheckRecord>,
    pub environment: Environment,
    /// Wall-clock seconds per check; excluded from the deterministic body.
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Everything except timings.
    pub fn body(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timings");
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Process exit status: 0 when every check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}
