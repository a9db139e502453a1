use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::flow::BogoliubovFlow;
use super::path::GeneratorPath;
use crate::error::{Error, Result};
use crate::fock::{
    adag, ann, apply_ladder, apply_terms, gaussian_state, FockVector, GaussianData, Ladder, ModeBasis, Term,
};
use crate::linalg::{conj_mat, spectral_norm, CMat, CVec};

/// scale · A⁺[f¹]…A⁺[fⁿ]|0⟩
#[derive(Debug, Clone)]
pub struct CreatedState {
    pub fs: Vec<CVec>,
    pub scale: C64,
}

impl CreatedState {
    pub fn vacuum() -> Self {
        CreatedState { fs: vec![], scale: C64::new(1.0, 0.0) }
    }

    pub fn to_fock(&self, basis: &Arc<ModeBasis>) -> Result<FockVector> {
        let mut psi = FockVector::vacuum(basis);
        for f in self.fs.iter().rev() {
            psi = apply_ladder(f, &psi, Ladder::Create)?;
        }
        Ok(psi.scale(self.scale))
    }
}

/// Transported creation operator Σ_y [(Ḡf)_y a†_y − (F̄f)_y a_y].
pub fn transported_creation(f: &CVec, flow_f: &CMat, flow_g: &CMat) -> Vec<Term> {
    let u = conj_mat(flow_g) * f;
    let v = conj_mat(flow_f) * f;
    let mut t = Vec::new();
    for k in 0..f.len() {
        t.push(Term { coeff: u[k], word: vec![adag(k)] });
        t.push(Term { coeff: -v[k], word: vec![ann(k)] });
    }
    t
}

/// Ψ_t = scale · Π A_t⁺[fʲ] c_t exp(½A⁺M_tA⁺)|0⟩.
pub fn propagate_gaussian(
    init: &CreatedState,
    flow: &BogoliubovFlow,
    basis: &Arc<ModeBasis>,
    leakage_threshold: f64,
) -> Result<FockVector> {
    if init.fs.len() > basis.n_max() {
        return Err(Error::Invalid("more created quanta than the cutoff".into()));
    }
    let s = flow.last();
    let nm = spectral_norm(&s.m);
    if nm >= 1.0 {
        return Err(Error::NotNormalizable(nm));
    }
    let mut psi = gaussian_state(&GaussianData { m: s.m.clone(), c: s.c }, basis)?.state;
    for f in init.fs.iter().rev() {
        if f.len() != basis.d() {
            return Err(Error::Dimension { expected: basis.d(), got: f.len() });
        }
        psi = apply_terms(&transported_creation(f, &s.f, &s.g), &psi);
    }
    if psi.leakage > leakage_threshold {
        return Err(Error::Leakage { leakage: psi.leakage, threshold: leakage_threshold });
    }
    Ok(psi.scale(init.scale))
}

#[derive(Debug, Clone)]
pub struct DirectResult {
    pub state: FockVector,
    /// |‖Ψ_t‖ − ‖Ψ₀‖|
    pub norm_drift: f64,
}

/// Fourth-order Runge-Kutta for i dΨ/dt = H_tΨ on the truncated space.
pub fn propagate_direct(
    psi0: &FockVector,
    path: &dyn GeneratorPath,
    t: f64,
    dt: f64,
    drift_threshold: f64,
) -> Result<DirectResult> {
    if !(dt > 0.0) {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    let basis = &psi0.basis;
    let steps = (t / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let mut v = CVec::from_column_slice(&psi0.coeffs);
    let constant = path.is_constant();
    let fixed = if constant { Some(path.at(0.0).matrix(basis)) } else { None };
    let mat = |tt: f64| -> CMat {
        match &fixed {
            Some(m) => m.clone(),
            None => path.at(tt).matrix(basis),
        }
    };
    let mi = C64::new(0.0, -1.0);
    for s in 0..steps {
        let t0 = s as f64 * h;
        let (h0, hm, h1) = if constant {
            let m = fixed.as_ref().unwrap();
            (m.clone(), m.clone(), m.clone())
        } else {
            (mat(t0), mat(t0 + 0.5 * h), mat(t0 + h))
        };
        let k1 = &h0 * &v * mi;
        let k2 = &hm * (&v + &k1 * C64::new(0.5 * h, 0.0)) * mi;
        let k3 = &hm * (&v + &k2 * C64::new(0.5 * h, 0.0)) * mi;
        let k4 = &h1 * (&v + &k3 * C64::new(h, 0.0)) * mi;
        v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
    }
    let mut state = FockVector::from_coeffs(basis, v.iter().cloned().collect())?;
    state.leakage = psi0.leakage;
    let norm_drift = (state.norm() - psi0.norm()).abs();
    if norm_drift > drift_threshold {
        return Err(Error::Invalid(format!("norm drift {norm_drift:.3e} above {drift_threshold:.3e}")));
    }
    Ok(DirectResult { state, norm_drift })
}
