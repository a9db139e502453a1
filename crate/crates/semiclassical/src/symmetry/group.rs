use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::algebra::{second_kind_coords, LieAlgebra};
use super::classical::ClassicalSystem;
use super::family::{restricted_norm, GeneratorFamily, MARGIN};
use crate::bogoliubov::{integrate_flow, transported_creation, BogoliubovFlow, SampledPath};
use crate::error::{Error, Result};
use crate::fock::{apply_terms, gaussian_state, FockVector, GaussianData, ModeBasis};
use crate::linalg::{conj_mat, conj_vec, CMat, CVec};
use crate::packets::{PacketPoint, PacketTangent};

/// Letters (k_j, t_j) applied first to last, realizing g_{B_n}(t_n)···g_{B_1}(t_1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupWord {
    pub letters: Vec<(usize, f64)>,
}

impl GroupWord {
    pub fn new(letters: Vec<(usize, f64)>) -> Result<Self> {
        if letters.iter().any(|(_, t)| !t.is_finite()) {
            return Err(Error::Invalid("word durations must be finite".into()));
        }
        Ok(GroupWord { letters })
    }

    /// Word for g_{B₁}(α₁)···g_{B_m}(α_m): B_m acts first.
    pub fn from_second_kind(alpha: &[f64]) -> Self {
        GroupWord { letters: alpha.iter().enumerate().rev().map(|(k, a)| (k, *a)).collect() }
    }

    /// Group element in the matrix representation.
    pub fn element(&self, alg: &LieAlgebra) -> Result<DMatrix<f64>> {
        let n = alg.rep[0].nrows();
        let mut g = DMatrix::identity(n, n);
        for &(k, t) in &self.letters {
            if k >= alg.m() {
                return Err(Error::Invalid(format!("letter index {k} outside the algebra")));
            }
            g = super::algebra::real_expm(&(&alg.rep[k] * t)) * g;
        }
        Ok(g)
    }
}

/// Truncated matrix of a Bogoliubov evolution: U|m⟩ = Π_k (m_k!)^{−½} (A_t⁺[e_k])^{m_k} U|0⟩.
/// Returns the matrix and the largest leakage among columns within the margin.
pub fn realize_unitary(flow: &BogoliubovFlow, basis: &Arc<ModeBasis>, margin: usize) -> Result<(CMat, f64)> {
    let s = flow.last();
    let d = basis.d();
    let gs = gaussian_state(&GaussianData { m: s.m.clone(), c: s.c }, basis)?;
    let creators: Vec<_> = (0..d)
        .map(|k| {
            let mut e = CVec::zeros(d);
            e[k] = C64::new(1.0, 0.0);
            transported_creation(&e, &s.f, &s.g)
        })
        .collect();
    let n = basis.dim();
    let mut cols: Vec<Option<FockVector>> = vec![None; n];
    let mut u = CMat::zeros(n, n);
    let mut leak: f64 = 0.0;
    for i in 0..n {
        let occ = *basis.state(i);
        let col = if basis.degree(i) == 0 {
            gs.state.clone()
        } else {
            let k = (0..d).find(|&k| occ[k] > 0).expect("positive degree");
            let mut parent = occ;
            parent[k] -= 1;
            let j = basis.index_of(&parent).expect("parent in basis");
            let prev = cols[j].as_ref().expect("parents precede children");
            apply_terms(&creators[k], prev).scale(C64::new(1.0 / (occ[k] as f64).sqrt(), 0.0))
        };
        if basis.degree(i) + margin <= basis.n_max() {
            leak = leak.max(col.leakage + gs.tail_estimate);
        }
        for (r, v) in col.coeffs.iter().enumerate() {
            u[(r, i)] = *v;
        }
        cols[i] = Some(col);
    }
    Ok((u, leak))
}

/// ‖U†U − 1‖ over the columns within the margin.
pub fn unitarity_residual(u: &CMat, basis: &Arc<ModeBasis>, margin: usize) -> f64 {
    let keep: Vec<usize> = (0..basis.dim()).filter(|&i| basis.degree(i) + margin <= basis.n_max()).collect();
    let sub = CMat::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
    let gram = sub.adjoint() * &sub - CMat::identity(keep.len(), keep.len());
    crate::linalg::spectral_norm(&gram)
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub u: CMat,
    /// Final (F, G) of the Bogoliubov flow.
    pub f: CMat,
    pub g: CMat,
    /// Classical end point u_{g}X.
    pub end: PacketPoint,
    pub leakage: f64,
}

/// U_B^t(X) from the Bogoliubov flow along τ ↦ H(B : u_{g_B(τ)}X). Negative t evolves
/// with −B for |t|.
#[allow(clippy::too_many_arguments)]
pub fn one_param_u(
    sys: &ClassicalSystem,
    fam: &GeneratorFamily,
    b: &[f64],
    t: f64,
    x: &PacketPoint,
    basis: &Arc<ModeBasis>,
    dt: f64,
    leak_threshold: f64,
) -> Result<Evolution> {
    if basis.d() != fam.d {
        return Err(Error::Dimension { expected: fam.d, got: basis.d() });
    }
    if !(dt > 0.0) || !t.is_finite() {
        return Err(Error::Invalid("need dt > 0 and a finite duration".into()));
    }
    let (dir, t): (Vec<f64>, f64) = if t < 0.0 { (b.iter().map(|v| -v).collect(), -t) } else { (b.to_vec(), t) };
    if t == 0.0 {
        let n = basis.dim();
        let d = basis.d();
        return Ok(Evolution { u: CMat::identity(n, n), f: CMat::zeros(d, d), g: CMat::identity(d, d), end: x.clone(), leakage: 0.0 });
    }
    let steps = (t / dt).round().max(1.0) as usize;
    let half = 0.5 * t / steps as f64;
    let mut times = vec![0.0];
    let mut gens = vec![fam.generator(&dir, x)];
    let mut y = x.clone();
    for j in 1..=2 * steps {
        y = sys.flow(&dir, half, &y)?;
        times.push(j as f64 * half);
        gens.push(fam.generator(&dir, &y));
    }
    let flow = integrate_flow(&SampledPath { times, gens }, t, dt)?;
    let (u, leakage) = realize_unitary(&flow, basis, MARGIN)?;
    if leakage > leak_threshold {
        return Err(Error::Leakage { leakage, threshold: leak_threshold });
    }
    let last = flow.last();
    Ok(Evolution { u, f: last.f.clone(), g: last.g.clone(), end: y, leakage })
}

#[derive(Debug, Clone)]
pub struct WordProduct {
    pub u: CMat,
    /// (F, G) of each letter in application order.
    pub bogoliubov: Vec<(CMat, CMat)>,
    pub end: PacketPoint,
    pub leakage: f64,
    /// max |g − 1| of the classical product in the matrix representation.
    pub classical_distance: f64,
    /// Set when the classical product is the identity.
    pub loop_report: Option<LoopReport>,
}

impl WordProduct {
    /// B ↦ ḠB + FB̄ composed over the letters: U(A⁺[B] − A⁻[B])U† = A⁺[TB] − A⁻[TB].
    pub fn transform_vector(&self, b: &CVec) -> CVec {
        self.bogoliubov.iter().fold(b.clone(), |v, (f, g)| conj_mat(g) * &v + f * conj_vec(&v))
    }
}

/// u_{g}* δX along the letters of a word.
pub fn word_tangent_map(
    sys: &ClassicalSystem,
    word: &GroupWord,
    x: &PacketPoint,
    dx: &PacketTangent,
) -> Result<(PacketPoint, PacketTangent)> {
    let mut y = x.clone();
    let mut v = dx.clone();
    for &(k, t) in &word.letters {
        let mut e = vec![0.0; sys.m];
        e[k] = 1.0;
        v = sys.tangent_map(&e, t, &y, &v)?;
        y = sys.flow(&e, t, &y)?;
    }
    Ok((y, v))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LoopReport {
    pub distance_to_identity: f64,
    pub global_phase: f64,
    /// ‖U − e^{iφ}·1‖ with φ the extracted phase.
    pub distance_to_phase: f64,
}

/// Π_k U_{B_k}^{t_k}(u_{s_{k−1}}X) with s_k the accumulated classical element.
#[allow(clippy::too_many_arguments)]
pub fn word_product(
    sys: &ClassicalSystem,
    fam: &GeneratorFamily,
    alg: &LieAlgebra,
    word: &GroupWord,
    x: &PacketPoint,
    basis: &Arc<ModeBasis>,
    dt: f64,
    leak_threshold: f64,
) -> Result<WordProduct> {
    let n = basis.dim();
    let mut u = CMat::identity(n, n);
    let mut y = x.clone();
    let mut leakage: f64 = 0.0;
    let mut bogoliubov = Vec::new();
    for &(k, t) in &word.letters {
        if k >= alg.m() {
            return Err(Error::Invalid(format!("letter index {k} outside the algebra")));
        }
        let mut e = vec![0.0; alg.m()];
        e[k] = 1.0;
        let ev = one_param_u(sys, fam, &e, t, &y, basis, dt, leak_threshold)?;
        u = &ev.u * u;
        bogoliubov.push((ev.f, ev.g));
        y = ev.end;
        leakage = leakage.max(ev.leakage);
    }
    let g = word.element(alg)?;
    let classical_distance = (&g - DMatrix::identity(g.nrows(), g.ncols())).amax();
    let loop_report = (classical_distance <= 1e-9).then(|| {
        let keep: Vec<usize> = (0..n).filter(|&i| basis.degree(i) + MARGIN <= basis.n_max()).collect();
        let tr: C64 = keep.iter().map(|&i| u[(i, i)]).sum();
        let phase = tr.arg();
        let id = CMat::identity(n, n);
        LoopReport {
            distance_to_identity: restricted_norm(&(&u - &id), basis, MARGIN),
            global_phase: phase,
            distance_to_phase: restricted_norm(&(&u - id * C64::from_polar(1.0, phase)), basis, MARGIN),
        }
    });
    Ok(WordProduct { u, bogoliubov, end: y, leakage, classical_distance, loop_report })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupLawReport {
    /// ‖U_{g₁}[u_{g₂}X]U_{g₂}[X] − U_{g₁g₂}[X]‖ on the restricted columns.
    pub residual: f64,
    /// Distance between the two classical end points.
    pub classical_mismatch: f64,
    pub coords: [Vec<f64>; 3],
}

/// U_g[X] from second-kind coordinates of g.
#[allow(clippy::too_many_arguments)]
pub fn group_operator(
    sys: &ClassicalSystem,
    fam: &GeneratorFamily,
    alg: &LieAlgebra,
    g: &DMatrix<f64>,
    x: &PacketPoint,
    basis: &Arc<ModeBasis>,
    dt: f64,
    leak_threshold: f64,
) -> Result<(Vec<f64>, WordProduct)> {
    let alpha = second_kind_coords(g, alg)?;
    let wp = word_product(sys, fam, alg, &GroupWord::from_second_kind(&alpha), x, basis, dt, leak_threshold)?;
    Ok((alpha, wp))
}

#[allow(clippy::too_many_arguments)]
pub fn check_group_law(
    sys: &ClassicalSystem,
    fam: &GeneratorFamily,
    alg: &LieAlgebra,
    g1: &DMatrix<f64>,
    g2: &DMatrix<f64>,
    x: &PacketPoint,
    basis: &Arc<ModeBasis>,
    dt: f64,
    leak_threshold: f64,
) -> Result<GroupLawReport> {
    let (a2, u2) = group_operator(sys, fam, alg, g2, x, basis, dt, leak_threshold)?;
    let (a1, u1) = group_operator(sys, fam, alg, g1, &u2.end, basis, dt, leak_threshold)?;
    let (a12, u12) = group_operator(sys, fam, alg, &(g1 * g2), x, basis, dt, leak_threshold)?;
    let residual = restricted_norm(&(&u1.u * &u2.u - &u12.u), basis, MARGIN);
    let (p, q) = (&u1.end, &u12.end);
    let classical_mismatch = q
        .q
        .iter()
        .zip(&p.q)
        .chain(q.p.iter().zip(&p.p))
        .map(|(a, b)| (a - b).abs())
        .fold((q.s - p.s).abs(), f64::max);
    Ok(GroupLawReport { residual, classical_mismatch, coords: [a1, a2, a12] })
}
