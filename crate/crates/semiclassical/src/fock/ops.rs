use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::basis::{ModeBasis, Occ};
use super::vector::{Accumulator, FockVector};
use crate::error::{Error, Result};
use crate::linalg::{conj_mat, expm, hermiticity_residual, symmetry_residual, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// One elementary ladder operator a†ₖ or aₖ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Op {
    pub mode: usize,
    pub create: bool,
}

pub fn adag(mode: usize) -> Op {
    Op { mode, create: true }
}

pub fn ann(mode: usize) -> Op {
    Op { mode, create: false }
}

/// coeff · (product of ladder operators); the rightmost acts first.
#[derive(Debug, Clone)]
pub struct Term {
    pub coeff: C64,
    pub word: Vec<Op>,
}

fn act(occ: &Occ, word: &[Op]) -> Option<(Occ, f64)> {
    let mut o = *occ;
    let mut f = 1.0;
    for op in word.iter().rev() {
        let n = o[op.mode];
        if op.create {
            f *= ((n + 1) as f64).sqrt();
            o[op.mode] = n + 1;
        } else {
            if n == 0 {
                return None;
            }
            f *= (n as f64).sqrt();
            o[op.mode] = n - 1;
        }
    }
    Some((o, f))
}

/// Applies Σ terms exactly, then projects onto the cutoff; the squared mass
/// of the discarded part is added to the leakage.
pub fn apply_terms(terms: &[Term], psi: &FockVector) -> FockVector {
    let basis = &psi.basis;
    let mut acc = Accumulator::new(basis);
    for (j, &amp) in psi.coeffs.iter().enumerate() {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = basis.state(j);
        for t in terms {
            if t.word.is_empty() {
                acc.add_index(j, t.coeff * amp);
            } else if let Some((o, f)) = act(occ, &t.word) {
                acc.add(&o, t.coeff * amp * f);
            }
        }
    }
    acc.finish(psi.leakage)
}

/// Matrix of P Σ terms P on the truncated space.
pub fn terms_matrix(terms: &[Term], basis: &Arc<ModeBasis>) -> CMat {
    let n = basis.dim();
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        let occ = basis.state(j);
        for t in terms {
            if t.word.is_empty() {
                m[(j, j)] += t.coeff;
            } else if let Some((o, f)) = act(occ, &t.word) {
                if let Some(i) = basis.index_of(&o) {
                    m[(i, j)] += t.coeff * f;
                }
            }
        }
    }
    m
}

pub fn apply_matrix(m: &CMat, psi: &FockVector) -> FockVector {
    let v = CVec::from_column_slice(&psi.coeffs);
    let out = m * v;
    FockVector { basis: psi.basis.clone(), coeffs: out.iter().cloned().collect(), leakage: psi.leakage }
}

fn check_len(f: &CVec, d: usize) -> Result<()> {
    if f.len() != d {
        return Err(Error::Dimension { expected: d, got: f.len() });
    }
    Ok(())
}

/// Terms of A⁺[f] = Σ fₖ a†ₖ or A⁻[f*] = Σ conj(fₖ) aₖ.
pub fn ladder_terms(f: &CVec, mode: Ladder) -> Vec<Term> {
    f.iter()
        .enumerate()
        .filter(|(_, z)| **z != C64::new(0.0, 0.0))
        .map(|(k, z)| match mode {
            Ladder::Create => Term { coeff: *z, word: vec![adag(k)] },
            Ladder::Annihilate => Term { coeff: z.conj(), word: vec![ann(k)] },
        })
        .collect()
}

pub fn apply_ladder(f: &CVec, psi: &FockVector, mode: Ladder) -> Result<FockVector> {
    check_len(f, psi.basis.d())?;
    Ok(apply_terms(&ladder_terms(f, mode), psi))
}

/// ½A⁺H⁺⁺A⁺ + A⁺(L + 𝓗)A⁻ + ½A⁻H⁻⁻A⁻ + H̄ with H⁻⁻ = conj(H⁺⁺).
#[derive(Debug, Clone)]
pub struct QuadraticGenerator {
    pub hpp: CMat,
    pub l: CMat,
    pub hsmall: CMat,
    pub hbar: f64,
}

impl QuadraticGenerator {
    pub fn new(hpp: CMat, l: CMat, hsmall: CMat, hbar: f64) -> Self {
        QuadraticGenerator { hpp, l, hsmall, hbar }
    }

    pub fn zero(d: usize) -> Self {
        Self::new(CMat::zeros(d, d), CMat::zeros(d, d), CMat::zeros(d, d), 0.0)
    }

    /// Generator with H⁺⁻ = hpm placed entirely in the regular part.
    pub fn from_blocks(hpp: CMat, hpm: CMat, hbar: f64) -> Self {
        let d = hpp.nrows();
        Self::new(hpp, CMat::zeros(d, d), hpm, hbar)
    }

    pub fn d(&self) -> usize {
        self.hpp.nrows()
    }

    pub fn hpm(&self) -> CMat {
        &self.l + &self.hsmall
    }

    pub fn hmm(&self) -> CMat {
        conj_mat(&self.hpp)
    }

    /// Rejects non-symmetric H⁺⁺ or non-Hermitian H⁺⁻ parts.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.d();
        for (name, m) in [("H++", &self.hpp), ("L", &self.l), ("Hsmall", &self.hsmall)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension { expected: d, got: m.nrows() });
            }
            let _ = name;
        }
        let s = symmetry_residual(&self.hpp);
        if s > tol {
            return Err(Error::Invalid(format!("H++ not symmetric (residual {s:.3e})")));
        }
        for (name, m) in [("L", &self.l), ("Hsmall", &self.hsmall)] {
            let h = hermiticity_residual(m);
            if h > tol {
                return Err(Error::Invalid(format!("{name} not Hermitian (residual {h:.3e})")));
            }
        }
        if !self.hbar.is_finite() {
            return Err(Error::Invalid("Hbar not finite".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let cs = C64::new(s, 0.0);
        Self::new(&self.hpp * cs, &self.l * cs, &self.hsmall * cs, self.hbar * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(&self.hpp + &o.hpp, &self.l + &o.l, &self.hsmall + &o.hsmall, self.hbar + o.hbar)
    }

    pub fn terms(&self) -> Vec<Term> {
        let d = self.d();
        let hpm = self.hpm();
        let hmm = self.hmm();
        let half = C64::new(0.5, 0.0);
        let mut t = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if self.hpp[(i, j)] != C64::new(0.0, 0.0) {
                    t.push(Term { coeff: half * self.hpp[(i, j)], word: vec![adag(i), adag(j)] });
                }
                if hpm[(i, j)] != C64::new(0.0, 0.0) {
                    t.push(Term { coeff: hpm[(i, j)], word: vec![adag(i), ann(j)] });
                }
                if hmm[(i, j)] != C64::new(0.0, 0.0) {
                    t.push(Term { coeff: half * hmm[(i, j)], word: vec![ann(i), ann(j)] });
                }
            }
        }
        if self.hbar != 0.0 {
            t.push(Term { coeff: C64::new(self.hbar, 0.0), word: vec![] });
        }
        t
    }

    pub fn matrix(&self, basis: &Arc<ModeBasis>) -> CMat {
        terms_matrix(&self.terms(), basis)
    }
}

pub fn apply_quadratic(gen: &QuadraticGenerator, psi: &FockVector) -> Result<FockVector> {
    if gen.d() != psi.basis.d() {
        return Err(Error::Dimension { expected: psi.basis.d(), got: gen.d() });
    }
    Ok(apply_terms(&gen.terms(), psi))
}

/// Terms of A⁺B − A⁻B*.
pub fn displacement_generator_terms(b: &CVec) -> Vec<Term> {
    let mut t = ladder_terms(b, Ladder::Create);
    for mut term in ladder_terms(b, Ladder::Annihilate) {
        term.coeff = -term.coeff;
        t.push(term);
    }
    t
}

/// U[B] = exp(A⁺B − A⁻B*) on the truncated space.
pub fn displacement_matrix(b: &CVec, basis: &Arc<ModeBasis>) -> Result<CMat> {
    check_len(b, basis.d())?;
    Ok(expm(&terms_matrix(&displacement_generator_terms(b), basis)))
}

/// Top-shell mass: the amplitude an exact operator would next push past the cutoff.
pub fn top_shell_mass(psi: &FockVector) -> f64 {
    psi.coeffs[psi.basis.shell(psi.basis.n_max())].iter().map(|z| z.norm_sqr()).sum()
}

/// U[B]Ψ. Leakage grows by the top-shell mass of the result; exceeding
/// `threshold` is reported as an error.
pub fn displacement(b: &CVec, psi: &FockVector, threshold: f64) -> Result<FockVector> {
    let u = displacement_matrix(b, &psi.basis)?;
    let mut out = apply_matrix(&u, psi);
    out.leakage += top_shell_mass(&out);
    if out.leakage > threshold {
        return Err(Error::Leakage { leakage: out.leakage, threshold });
    }
    Ok(out)
}

/// Σ φ[x₁..x_m, y₁..y_k] a†x₁…a†x_m a_y₁…a_y_k with φ flattened row-major.
pub fn monomial_terms(phi: &[C64], d: usize, m: usize, k: usize) -> Result<Vec<Term>> {
    let len = d.pow((m + k) as u32);
    if phi.len() != len {
        return Err(Error::Dimension { expected: len, got: phi.len() });
    }
    let mut out = Vec::with_capacity(len);
    for (flat, &z) in phi.iter().enumerate() {
        let mut rem = flat;
        let mut digits = vec![0usize; m + k];
        for p in (0..m + k).rev() {
            digits[p] = rem % d;
            rem /= d;
        }
        let word = digits
            .iter()
            .enumerate()
            .map(|(p, &mode)| if p < m { adag(mode) } else { ann(mode) })
            .collect();
        out.push(Term { coeff: z, word });
    }
    Ok(out)
}

pub fn apply_monomial(phi: &[C64], m: usize, k: usize, psi: &FockVector) -> Result<FockVector> {
    Ok(apply_terms(&monomial_terms(phi, psi.basis.d(), m, k)?, psi))
}

/// Number-operator matrix Σ Tᵢⱼ a†ᵢ aⱼ on the truncated space.
pub fn second_quantized(t: &CMat, basis: &Arc<ModeBasis>) -> CMat {
    let d = basis.d();
    let mut terms = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if t[(i, j)] != C64::new(0.0, 0.0) {
                terms.push(Term { coeff: t[(i, j)], word: vec![adag(i), ann(j)] });
            }
        }
    }
    terms_matrix(&terms, basis)
}
