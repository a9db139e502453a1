use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{QuadraticGenerator, WeightOperator, MAX_MODES};
use crate::linalg::{hermitian_eigenvalues, hermiticity_residual, symmetry_residual, CMat};
use crate::symmetry::{LieAlgebra, QuadHamiltonian};

use super::scenarios::SCENARIOS;

/// Complex matrix entries as row-major [re, im] pairs.
pub type ComplexPairs = Vec<[f64; 2]>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// One quadratic classical Hamiltonian ½ζᵀKζ + l·ζ + c over ζ = (Q, P).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    /// Row-major 2d×2d real symmetric matrix.
    pub k: Vec<f64>,
    #[serde(default)]
    pub l: Vec<f64>,
    #[serde(default)]
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d: usize,
    pub n_max: usize,
    /// heisenberg, u2, su11 or custom; scenario default when absent.
    pub algebra: Option<String>,
    /// Algebra elements for `algebra = "custom"`.
    pub generators: Vec<HamiltonianConfig>,
    pub omega: f64,
    pub kappa: f64,
    pub hbar: f64,
    /// Optional quadratic generator blocks; all three must be given together.
    pub hpp: Option<ComplexPairs>,
    pub l: Option<ComplexPairs>,
    pub hsmall: Option<ComplexPairs>,
    /// Weight operator T for the weighted Fock norms.
    pub weight: Option<ComplexPairs>,
    /// Constant injected into the scalar part of the quantum family, one per algebra element.
    pub anomaly_offset: Option<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 1,
            n_max: 24,
            algebra: None,
            generators: Vec::new(),
            omega: 1.0,
            kappa: 0.2,
            hbar: 0.0,
            hpp: None,
            l: None,
            hsmall: None,
            weight: None,
            anomaly_offset: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub t: f64,
    pub dt: f64,
    /// Finite-difference step for derivatives along classical flows.
    pub h: f64,
    pub lambdas: Vec<f64>,
    /// Gauss–Legendre points per axis for the first quadrature pass.
    pub quadrature_order: usize,
    pub leak_threshold: f64,
    /// Number of random instances in property checks.
    pub samples: usize,
    /// Per-check tolerance overrides, keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t: 1.0,
            dt: 1e-3,
            h: 1e-4,
            lambdas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            quadrature_order: 32,
            leak_threshold: 1e-2,
            samples: 20,
            tolerances: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn diag(out: &mut Vec<Diagnostic>, field: &str, message: impl Into<String>) {
    out.push(Diagnostic { field: field.into(), message: message.into() });
}

/// Square complex matrix from row-major pairs.
pub fn complex_matrix(pairs: &[[f64; 2]], d: usize) -> Result<CMat> {
    if pairs.len() != d * d {
        return Err(Error::Config(format!("expected {} entries for a {d}×{d} matrix, got {}", d * d, pairs.len())));
    }
    Ok(CMat::from_row_iterator(d, d, pairs.iter().map(|p| num_complex::Complex64::new(p[0], p[1]))))
}

impl ScenarioConfig {
    pub fn builtin(name: &str) -> Result<ScenarioConfig> {
        let info = SCENARIOS
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("unknown scenario {name:?}")))?;
        let mut model = ModelConfig::default();
        model.d = info.default_d;
        model.n_max = info.default_n;
        Ok(ScenarioConfig { scenario: name.into(), model, run: RunConfig::default(), output: OutputConfig::default() })
    }

    pub fn from_toml(text: &str) -> std::result::Result<ScenarioConfig, Diagnostic> {
        toml::from_str(text).map_err(|e| Diagnostic { field: "<document>".into(), message: e.to_string().trim().to_string() })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.run.tolerances.get(check).copied().unwrap_or(default)
    }

    /// Generator from the configured blocks, if present.
    pub fn generator(&self) -> Result<Option<QuadraticGenerator>> {
        let m = &self.model;
        match (&m.hpp, &m.l, &m.hsmall) {
            (None, None, None) => Ok(None),
            (Some(hpp), Some(l), Some(hs)) => Ok(Some(QuadraticGenerator::new(
                complex_matrix(hpp, m.d)?,
                complex_matrix(l, m.d)?,
                complex_matrix(hs, m.d)?,
                m.hbar,
            ))),
            _ => Err(Error::Config("hpp, l and hsmall must be given together".into())),
        }
    }

    /// Configured algebra, or `default` when none is named.
    pub fn algebra(&self, default: &str) -> Result<LieAlgebra> {
        match self.model.algebra.as_deref().unwrap_or(default) {
            "heisenberg" => Ok(LieAlgebra::heisenberg()),
            "u2" => Ok(LieAlgebra::u2()),
            "su11" => Ok(LieAlgebra::su11()),
            "custom" => {
                let dim = self.model.d;
                let hs = self
                    .model
                    .generators
                    .iter()
                    .map(|g| {
                        let n = 2 * dim;
                        if g.k.len() != n * n {
                            return Err(Error::Config(format!("generator k needs {} entries", n * n)));
                        }
                        let l = if g.l.is_empty() { vec![0.0; n] } else { g.l.clone() };
                        QuadHamiltonian::new(
                            nalgebra::DMatrix::from_row_slice(n, n, &g.k),
                            nalgebra::DVector::from_vec(l),
                            g.c,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                let labels = (0..hs.len()).map(|i| format!("X{i}")).collect();
                LieAlgebra::from_hamiltonians(labels, hs)
            }
            other => Err(Error::Config(format!("unknown algebra {other:?}"))),
        }
    }

    /// Full list of violations; empty means valid.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let m = &self.model;
        let r = &self.run;
        if !SCENARIOS.iter().any(|s| s.name == self.scenario) {
            diag(&mut out, "scenario", format!("unknown scenario {:?}", self.scenario));
        }
        if m.d == 0 || m.d > MAX_MODES {
            diag(&mut out, "model.d", format!("must be in 1..={MAX_MODES}, got {}", m.d));
        }
        if m.n_max == 0 {
            diag(&mut out, "model.n_max", "must be at least 1");
        }
        if let Some(a) = &m.algebra {
            if !["heisenberg", "u2", "su11", "custom"].contains(&a.as_str()) {
                diag(&mut out, "model.algebra", format!("unknown algebra {a:?}"));
            }
            if a == "custom" && m.generators.is_empty() {
                diag(&mut out, "model.generators", "custom algebra needs at least one generator");
            }
        }
        if m.algebra.as_deref() == Some("custom") && !m.generators.is_empty() && m.d >= 1 && m.d <= MAX_MODES {
            for (i, g) in m.generators.iter().enumerate() {
                let n = 2 * m.d;
                if g.k.len() != n * n {
                    diag(&mut out, &format!("model.generators[{i}].k"), format!("needs {} entries, got {}", n * n, g.k.len()));
                } else {
                    let asym = (0..n)
                        .flat_map(|a| (0..n).map(move |b| (a, b)))
                        .map(|(a, b)| (g.k[a * n + b] - g.k[b * n + a]).abs())
                        .fold(0.0, f64::max);
                    if asym > 1e-12 {
                        diag(&mut out, &format!("model.generators[{i}].k"), format!("not symmetric (residual {asym:.3e})"));
                    }
                }
                if !g.l.is_empty() && g.l.len() != n {
                    diag(&mut out, &format!("model.generators[{i}].l"), format!("needs {n} entries, got {}", g.l.len()));
                }
            }
            if out.is_empty() {
                if let Err(e) = self.algebra("custom") {
                    diag(&mut out, "model.generators", e.to_string());
                }
            }
        }
        for (name, v) in [("model.omega", m.omega), ("model.kappa", m.kappa), ("model.hbar", m.hbar)] {
            if !v.is_finite() {
                diag(&mut out, name, format!("must be finite, got {v}"));
            }
        }
        let d = m.d;
        let blocks = [("model.hpp", &m.hpp), ("model.l", &m.l), ("model.hsmall", &m.hsmall)];
        let given = blocks.iter().filter(|(_, b)| b.is_some()).count();
        if given != 0 && given != 3 {
            diag(&mut out, "model.hpp", "hpp, l and hsmall must be given together");
        }
        for (name, b) in blocks {
            let Some(pairs) = b else { continue };
            let Ok(mat) = complex_matrix(pairs, d) else {
                diag(&mut out, name, format!("expected {} [re, im] pairs for d = {d}, got {}", d * d, pairs.len()));
                continue;
            };
            match name {
                "model.hpp" => {
                    let asym = symmetry_residual(&mat);
                    if asym > 1e-12 {
                        diag(&mut out, name, format!("H⁺⁺ not symmetric (residual {asym:.3e})"));
                    }
                }
                "model.l" | "model.hsmall" => {
                    let h = hermiticity_residual(&mat);
                    if h > 1e-12 {
                        diag(&mut out, name, format!("not Hermitian (residual {h:.3e})"));
                    }
                }
                _ => {}
            }
        }
        if let Some(w) = &m.weight {
            match complex_matrix(w, d) {
                Err(_) => diag(&mut out, "model.weight", format!("expected {} [re, im] pairs, got {}", d * d, w.len())),
                Ok(t) => {
                    let h = hermiticity_residual(&t);
                    if h > 1e-10 {
                        diag(&mut out, "model.weight", format!("T not Hermitian (residual {h:.3e})"));
                    } else {
                        let min = hermitian_eigenvalues(&t)[0];
                        if WeightOperator::new(t).is_err() {
                            diag(&mut out, "model.weight", format!("T has eigenvalue {min} < 1"));
                        }
                    }
                }
            }
        }
        if let Some(th) = &m.anomaly_offset {
            if th.iter().any(|v| !v.is_finite()) {
                diag(&mut out, "model.anomaly_offset", "entries must be finite");
            }
        }
        if !(r.t.is_finite() && r.t >= 0.0) {
            diag(&mut out, "run.t", format!("must be finite and non-negative, got {}", r.t));
        }
        for (name, v) in [("run.dt", r.dt), ("run.h", r.h), ("run.leak_threshold", r.leak_threshold)] {
            if !(v.is_finite() && v > 0.0) {
                diag(&mut out, name, format!("must be positive, got {v}"));
            }
        }
        if r.lambdas.is_empty() {
            diag(&mut out, "run.lambdas", "must not be empty");
        }
        if r.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            diag(&mut out, "run.lambdas", "entries must be positive");
        }
        if r.quadrature_order < 2 {
            diag(&mut out, "run.quadrature_order", format!("must be at least 2, got {}", r.quadrature_order));
        }
        if r.samples == 0 {
            diag(&mut out, "run.samples", "must be at least 1");
        }
        for (k, v) in &r.tolerances {
            if !(v.is_finite() && *v > 0.0) {
                diag(&mut out, &format!("run.tolerances.{k}"), format!("must be positive, got {v}"));
            }
        }
        out
    }
}

/// Parses and validates a config file; the list is empty when the file is valid.
pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(match ScenarioConfig::from_toml(&text) {
        Ok(cfg) => cfg.diagnostics(),
        Err(d) => vec![d],
    })
}

/// Reads a config and rejects it unless it validates.
pub fn load_config(path: &Path) -> std::result::Result<ScenarioConfig, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![Diagnostic { field: "<file>".into(), message: format!("cannot read {}: {e}", path.display()) }])?;
    let cfg = ScenarioConfig::from_toml(&text).map_err(|d| vec![d])?;
    let diags = cfg.diagnostics();
    if diags.is_empty() {
        Ok(cfg)
    } else {
        Err(diags)
    }
}
