use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::basis::ModeBasis;
use super::ops::{adag, apply_terms, Term};
use super::vector::FockVector;
use crate::error::{Error, Result};
use crate::linalg::{hs_norm, spectral_norm, symmetry_residual, CMat};

/// c·exp(½A⁺MA⁺)|0⟩ data.
#[derive(Debug, Clone)]
pub struct GaussianData {
    pub m: CMat,
    pub c: C64,
}

#[derive(Debug, Clone)]
pub struct GaussianState {
    pub state: FockVector,
    /// Estimated norm of the amplitude above the cutoff.
    pub tail_estimate: f64,
    /// A in ‖Ψ_n‖ ≤ A e^{−αn}, fitted on the retained shells.
    pub decay_prefactor: f64,
    /// α = −½ log‖M‖.
    pub decay_rate: f64,
}

pub fn pair_creation_terms(m: &CMat) -> Vec<Term> {
    let d = m.nrows();
    let mut t = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if m[(i, j)] != C64::new(0.0, 0.0) {
                t.push(Term { coeff: 0.5 * m[(i, j)], word: vec![adag(i), adag(j)] });
            }
        }
    }
    t
}

/// exp(Q)Ψ for a pure pair-creation Q, summed until the series leaves the cutoff.
fn exp_creation(q: &[Term], psi: &FockVector) -> FockVector {
    let mut sum = psi.clone();
    let mut term = psi.clone();
    let kmax = psi.basis.n_max() / 2 + 1;
    for k in 1..=kmax {
        term = apply_terms(q, &term).scale(C64::new(1.0 / k as f64, 0.0));
        term.leakage = 0.0;
        if term.norm() == 0.0 {
            break;
        }
        sum = sum.axpy(C64::new(1.0, 0.0), &term).unwrap();
    }
    sum.leakage = 0.0;
    sum
}

/// max_n ‖Ψ_n‖e^{αn} over the retained shells.
pub fn decay_prefactor(psi: &FockVector, alpha: f64) -> f64 {
    psi.shell_norms()
        .iter()
        .enumerate()
        .map(|(n, &x)| x * (alpha * n as f64).exp())
        .fold(0.0, f64::max)
}

pub fn gaussian_state(gd: &GaussianData, basis: &Arc<ModeBasis>) -> Result<GaussianState> {
    if gd.m.nrows() != basis.d() || gd.m.ncols() != basis.d() {
        return Err(Error::Dimension { expected: basis.d(), got: gd.m.nrows() });
    }
    if symmetry_residual(&gd.m) > 1e-10 * (1.0 + hs_norm(&gd.m)) {
        return Err(Error::Invalid("M not symmetric".into()));
    }
    let r = spectral_norm(&gd.m);
    if r >= 1.0 {
        return Err(Error::NotNormalizable(r));
    }
    let q = pair_creation_terms(&gd.m);
    let state = exp_creation(&q, &FockVector::vacuum(basis)).scale(gd.c);
    let (alpha, a, tail) = if r == 0.0 {
        (f64::INFINITY, gd.c.norm(), 0.0)
    } else {
        let alpha = -0.5 * r.ln();
        let a = decay_prefactor(&state, alpha);
        let top = basis.n_max() - basis.n_max() % 2;
        let tail = a * r.powi((top / 2 + 1) as i32) / (1.0 - r * r).sqrt();
        (alpha, a, tail)
    };
    Ok(GaussianState { state, tail_estimate: tail, decay_prefactor: a, decay_rate: alpha })
}

#[derive(Debug, Clone)]
pub struct PerturbSeries {
    pub state: FockVector,
    pub term_norms: Vec<f64>,
    /// α = −¼ log‖M‖.
    pub alpha: f64,
    /// b = ‖δM‖₂ e^α / α.
    pub b: f64,
    /// Largest ‖δM‖₂ allowed by ‖δM‖₂ e^{3α/2} ≤ α.
    pub radius: f64,
}

pub fn perturbation_radius(m: &CMat) -> (f64, f64) {
    let nm = spectral_norm(m);
    if nm == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let alpha = -0.25 * nm.ln();
    (alpha, alpha * (-1.5 * alpha).exp())
}

/// Σ_{k<n_terms} (1/k!)(½A⁺δMA⁺)^k exp(½A⁺MA⁺)|0⟩.
pub fn gaussian_perturb_series(
    m: &CMat,
    dm: &CMat,
    n_terms: usize,
    basis: &Arc<ModeBasis>,
) -> Result<PerturbSeries> {
    let nm = spectral_norm(m);
    if nm >= 1.0 {
        return Err(Error::NotNormalizable(nm));
    }
    if symmetry_residual(dm) > 1e-12 * (1.0 + hs_norm(dm)) {
        return Err(Error::Invalid("δM not symmetric".into()));
    }
    let (alpha, radius) = perturbation_radius(m);
    let dnorm = hs_norm(dm);
    if dnorm > radius {
        return Err(Error::Radius(format!("‖δM‖₂ = {dnorm:.3e} exceeds {radius:.3e}")));
    }
    let base = gaussian_state(&GaussianData { m: m.clone(), c: C64::new(1.0, 0.0) }, basis)?.state;
    let q = pair_creation_terms(dm);
    let mut sum = base.clone();
    let mut term = base;
    let mut norms = vec![term.norm()];
    for k in 1..n_terms {
        term = apply_terms(&q, &term).scale(C64::new(1.0 / k as f64, 0.0));
        term.leakage = 0.0;
        norms.push(term.norm());
        sum = sum.axpy(C64::new(1.0, 0.0), &term)?;
    }
    let tail: Vec<f64> = norms.iter().cloned().filter(|&x| x > 0.0).collect();
    if tail.len() >= 3 && tail[tail.len() - 1] > tail[tail.len() - 2] && tail[tail.len() - 2] > tail[tail.len() - 3] {
        return Err(Error::NonConvergent("term norms increasing at the end of the series".into()));
    }
    let b = if alpha.is_finite() { dnorm * alpha.exp() / alpha } else { 0.0 };
    sum.leakage = 0.0;
    Ok(PerturbSeries { state: sum, term_norms: norms, alpha, b, radius })
}

/// Ψ_{k,l} = (2^k k!)^{-1}(A⁺δMA⁺)^k (2^l l!)^{-1}(A⁺MA⁺)^l|0⟩ for all
/// k ≤ kmax, l ≤ lmax fitting under the cutoff; entry [k][l] is its norm.
pub fn perturb_term_norms(m: &CMat, dm: &CMat, kmax: usize, lmax: usize, basis: &Arc<ModeBasis>) -> Vec<Vec<f64>> {
    let qm = pair_creation_terms(m);
    let qd = pair_creation_terms(dm);
    let mut out = vec![vec![0.0; lmax + 1]; kmax + 1];
    let mut psi_l = FockVector::vacuum(basis);
    for l in 0..=lmax {
        if l > 0 {
            psi_l = apply_terms(&qm, &psi_l).scale(C64::new(1.0 / l as f64, 0.0));
        }
        let mut psi_kl = psi_l.clone();
        for k in 0..=kmax {
            if k > 0 {
                psi_kl = apply_terms(&qd, &psi_kl).scale(C64::new(1.0 / k as f64, 0.0));
            }
            if 2 * (k + l) <= basis.n_max() {
                out[k][l] = psi_kl.norm();
            }
        }
    }
    out
}
