use std::sync::Arc;

use crate::fock::QuadraticGenerator;
use crate::linalg::{c, CMat};

/// t ↦ H_t. Implementations must be callable from several threads.
pub trait GeneratorPath: Send + Sync {
    fn d(&self) -> usize;
    fn at(&self, t: f64) -> QuadraticGenerator;
    /// True when H_t does not depend on t.
    fn is_constant(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct ConstantPath(pub QuadraticGenerator);

impl GeneratorPath for ConstantPath {
    fn d(&self) -> usize {
        self.0.d()
    }
    fn at(&self, _t: f64) -> QuadraticGenerator {
        self.0.clone()
    }
    fn is_constant(&self) -> bool {
        true
    }
}

/// Analytic path given by a callback.
#[derive(Clone)]
pub struct FnPath {
    d: usize,
    f: Arc<dyn Fn(f64) -> QuadraticGenerator + Send + Sync>,
}

impl FnPath {
    pub fn new(d: usize, f: impl Fn(f64) -> QuadraticGenerator + Send + Sync + 'static) -> Self {
        FnPath { d, f: Arc::new(f) }
    }
}

impl GeneratorPath for FnPath {
    fn d(&self) -> usize {
        self.d
    }
    fn at(&self, t: f64) -> QuadraticGenerator {
        (self.f)(t)
    }
}

/// Piecewise-linear interpolation between sampled generators.
#[derive(Debug, Clone)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub gens: Vec<QuadraticGenerator>,
}

impl GeneratorPath for SampledPath {
    fn d(&self) -> usize {
        self.gens[0].d()
    }
    fn at(&self, t: f64) -> QuadraticGenerator {
        let n = self.times.len();
        if t <= self.times[0] || n == 1 {
            return self.gens[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.gens[n - 1].clone();
        }
        let j = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
        self.gens[j].scaled(1.0 - w).add(&self.gens[j + 1].scaled(w))
    }
}

/// d = 1, H⁺⁻ = ω.
pub fn rotation(omega: f64, hbar: f64) -> ConstantPath {
    ConstantPath(QuadraticGenerator::from_blocks(
        CMat::zeros(1, 1),
        CMat::from_element(1, 1, c(omega, 0.0)),
        hbar,
    ))
}

/// d = 1, H⁺⁺ = H⁻⁻ = κ.
pub fn squeeze(kappa: f64) -> ConstantPath {
    ConstantPath(QuadraticGenerator::from_blocks(
        CMat::from_element(1, 1, c(kappa, 0.0)),
        CMat::zeros(1, 1),
        0.0,
    ))
}

/// Two coupled modes with time-dependent rotation, beam-splitter and
/// squeezing terms.
pub fn mixed_two_mode() -> FnPath {
    FnPath::new(2, |t| {
        let w = 0.7 * t;
        let hpm = CMat::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.3 * w.cos(), 0.3 * w.sin()), c(0.3 * w.cos(), -0.3 * w.sin()), c(1.4, 0.0)],
        );
        let k = 0.25 + 0.1 * (1.3 * t).sin();
        let hpp = CMat::from_row_slice(2, 2, &[c(k, 0.0), c(0.1, 0.05), c(0.1, 0.05), c(-0.5 * k, 0.1)]);
        QuadraticGenerator::new(hpp, CMat::from_element(2, 2, c(0.0, 0.0)), hpm, 0.2)
    })
}
