use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::basis::{BasisDescriptor, ModeBasis, Occ};
use crate::error::{Error, Result};

/// Coefficients over a truncated basis, plus the squared amplitude mass
/// that operator applications have pushed past the cutoff.
#[derive(Debug, Clone)]
pub struct FockVector {
    pub basis: Arc<ModeBasis>,
    pub coeffs: Vec<C64>,
    pub leakage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockVectorJson {
    pub basis: BasisDescriptor,
    pub occupations: Vec<Vec<u32>>,
    pub coeffs: Vec<[f64; 2]>,
    pub leakage: f64,
}

impl FockVector {
    pub fn zeros(basis: &Arc<ModeBasis>) -> Self {
        FockVector { basis: basis.clone(), coeffs: vec![C64::new(0.0, 0.0); basis.dim()], leakage: 0.0 }
    }

    pub fn vacuum(basis: &Arc<ModeBasis>) -> Self {
        let mut v = Self::zeros(basis);
        v.coeffs[0] = C64::new(1.0, 0.0);
        v
    }

    pub fn number_state(basis: &Arc<ModeBasis>, occ: &[u32]) -> Result<Self> {
        let o = basis.occ_from_slice(occ)?;
        let i = basis
            .index_of(&o)
            .ok_or_else(|| Error::Invalid(format!("occupation {occ:?} above cutoff")))?;
        let mut v = Self::zeros(basis);
        v.coeffs[i] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_coeffs(basis: &Arc<ModeBasis>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::Dimension { expected: basis.dim(), got: coeffs.len() });
        }
        Ok(FockVector { basis: basis.clone(), coeffs, leakage: 0.0 })
    }

    /// Random normalized vector supported on total quanta ≤ `max_degree`.
    pub fn random<R: Rng>(basis: &Arc<ModeBasis>, max_degree: usize, rng: &mut R) -> Self {
        let mut v = Self::zeros(basis);
        let top = max_degree.min(basis.n_max());
        for i in 0..basis.shell(top).end {
            v.coeffs[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let n = v.norm();
        v.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Norm of the component with exactly `n` quanta, for each n ≤ N.
    pub fn shell_norms(&self) -> Vec<f64> {
        (0..=self.basis.n_max())
            .map(|n| self.coeffs[self.basis.shell(n)].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// Highest shell carrying nonzero amplitude.
    pub fn max_degree(&self) -> usize {
        (0..self.coeffs.len())
            .rev()
            .find(|&i| self.coeffs[i] != C64::new(0.0, 0.0))
            .map(|i| self.basis.degree(i))
            .unwrap_or(0)
    }

    pub fn check_basis(&self, other: &FockVector) -> Result<()> {
        if self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// ℓ² pairing, conjugate-linear in `self`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        self.check_basis(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(mut self, s: C64) -> Self {
        for z in self.coeffs.iter_mut() {
            *z *= s;
        }
        self
    }

    /// self + s·other; leakage adds.
    pub fn axpy(&self, s: C64, other: &FockVector) -> Result<Self> {
        self.check_basis(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + s * b).collect();
        Ok(FockVector { basis: self.basis.clone(), coeffs, leakage: self.leakage + other.leakage })
    }

    pub fn sub(&self, other: &FockVector) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn distance(&self, other: &FockVector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Zero every shell above `n`.
    pub fn project_below(&self, n: usize) -> Self {
        let mut v = self.clone();
        if n < self.basis.n_max() {
            for z in v.coeffs[self.basis.shell(n + 1).start..].iter_mut() {
                *z = C64::new(0.0, 0.0);
            }
        }
        v
    }

    pub fn to_json(&self) -> FockVectorJson {
        let d = self.basis.d();
        FockVectorJson {
            basis: self.basis.descriptor(),
            occupations: self.basis.states().iter().map(|s| s[..d].to_vec()).collect(),
            coeffs: self.coeffs.iter().map(|z| [z.re, z.im]).collect(),
            leakage: self.leakage,
        }
    }

    pub fn from_json(j: &FockVectorJson) -> Result<Self> {
        let basis = ModeBasis::new(j.basis.d, j.basis.n_max)?;
        let mut v = Self::zeros(&basis);
        if j.occupations.len() != j.coeffs.len() {
            return Err(Error::Invalid("occupations and coeffs differ in length".into()));
        }
        for (occ, z) in j.occupations.iter().zip(&j.coeffs) {
            let o = basis.occ_from_slice(occ)?;
            let i = basis.index_of(&o).ok_or_else(|| Error::Invalid(format!("{occ:?} above cutoff")))?;
            v.coeffs[i] = C64::new(z[0], z[1]);
        }
        v.leakage = j.leakage;
        Ok(v)
    }
}

/// Collects amplitudes; anything landing above the cutoff goes to an
/// overflow map whose squared mass becomes leakage.
pub(crate) struct Accumulator {
    basis: Arc<ModeBasis>,
    coeffs: Vec<C64>,
    overflow: BTreeMap<Occ, C64>,
}

impl Accumulator {
    pub fn new(basis: &Arc<ModeBasis>) -> Self {
        Accumulator { basis: basis.clone(), coeffs: vec![C64::new(0.0, 0.0); basis.dim()], overflow: BTreeMap::new() }
    }

    pub fn add(&mut self, occ: &Occ, amp: C64) {
        match self.basis.index_of(occ) {
            Some(i) => self.coeffs[i] += amp,
            None => *self.overflow.entry(*occ).or_insert(C64::new(0.0, 0.0)) += amp,
        }
    }

    pub fn add_index(&mut self, i: usize, amp: C64) {
        self.coeffs[i] += amp;
    }

    pub fn finish(self, prior_leakage: f64) -> FockVector {
        let dropped: f64 = self.overflow.values().map(|z| z.norm_sqr()).sum();
        FockVector { basis: self.basis, coeffs: self.coeffs, leakage: prior_leakage + dropped }
    }
}
