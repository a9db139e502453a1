use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::algebra::{LieAlgebra, QuadHamiltonian};
use super::classical::{delta, ClassicalSystem};
use crate::error::{Error, Result};
use crate::fock::{ladder_terms, terms_matrix, Ladder, ModeBasis, QuadraticGenerator, Term};
use crate::linalg::{commutator, conj_mat, conj_vec, spectral_norm, trace, CMat, CVec, I};
use crate::packets::{Component, PacketPoint, PacketTangent};

pub type GenFn = Arc<dyn Fn(&[f64], &PacketPoint) -> QuadraticGenerator + Send + Sync>;
pub type PhiFn = Arc<dyn Fn(&PacketPoint, &PacketTangent) -> CVec + Send + Sync>;
/// θ(X) with its gradient (∂_S θ, ∂_Q θ, ∂_P θ).
pub type GaugeFn = Arc<dyn Fn(&PacketPoint) -> (f64, PacketTangent) + Send + Sync>;

/// Fock columns with total quanta ≤ N − 4 carry the margin-restricted norms.
pub const MARGIN: usize = 4;

/// A ↦ H(A:X) in quadratic form, plus the 1-form φ_X[δX] with
/// Ω[δX] = −i(A⁺[φ] − A⁻[φ]).
#[derive(Clone)]
pub struct GeneratorFamily {
    pub d: usize,
    pub m: usize,
    pub gen: GenFn,
    pub phi: PhiFn,
}

impl std::fmt::Debug for GeneratorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorFamily").field("d", &self.d).field("m", &self.m).finish()
    }
}

/// φ[δX] = (δQ + iδP)/√2.
pub fn standard_phi(t: &PacketTangent) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_iterator(t.dq.len(), t.dq.iter().zip(&t.dp).map(|(q, p)| C64::new(s * q, s * p)))
}

/// Symmetric quantization of ½ζᵀKζ with ζ = R₁a† + R₂a, R₁ = [I; iI]/√2, R₂ = R̄₁:
/// H⁺⁺ = R₁ᵀKR₁, H⁺⁻ = R₁ᵀKR₂, H̄ = ½ tr H⁺⁻. Linear and constant parts act on S only.
pub fn weyl_generator(h: &QuadHamiltonian) -> QuadraticGenerator {
    let d = h.dim;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r1 = CMat::from_fn(2 * d, d, |i, j| {
        if i == j {
            C64::new(s, 0.0)
        } else if i == j + d {
            C64::new(0.0, s)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let r2 = conj_mat(&r1);
    let k = h.k.map(|v| C64::new(v, 0.0));
    let hpp = r1.transpose() * &k * &r1;
    let hpm = r1.transpose() * &k * &r2;
    let hbar = 0.5 * trace(&hpm).re;
    QuadraticGenerator::from_blocks(hpp, hpm, hbar)
}

fn combine(parts: &[QuadraticGenerator], a: &[f64], d: usize) -> QuadraticGenerator {
    a.iter().zip(parts).fold(QuadraticGenerator::zero(d), |acc, (c, g)| acc.add(&g.scaled(*c)))
}

impl GeneratorFamily {
    /// X-independent quantization of an algebra of quadratic Hamiltonians.
    pub fn weyl(alg: &LieAlgebra) -> Result<Self> {
        let hams = alg.hamiltonians.as_ref().ok_or_else(|| Error::Invalid("algebra carries no classical Hamiltonians".into()))?;
        let d = hams[0].dim;
        let parts: Vec<QuadraticGenerator> = hams.iter().map(weyl_generator).collect();
        Ok(GeneratorFamily {
            d,
            m: parts.len(),
            gen: Arc::new(move |a: &[f64], _x: &PacketPoint| combine(&parts, a, d)),
            phi: Arc::new(|_x: &PacketPoint, t: &PacketTangent| standard_phi(t)),
        })
    }

    pub fn zero(d: usize, m: usize) -> Self {
        GeneratorFamily {
            d,
            m,
            gen: Arc::new(move |_a: &[f64], _x: &PacketPoint| QuadraticGenerator::zero(d)),
            phi: Arc::new(|_x: &PacketPoint, t: &PacketTangent| standard_phi(t)),
        }
    }

    /// H̄(A) ↦ H̄(A) + θ·A, a constant shift of the scalar part.
    pub fn with_scalar_offset(&self, theta: Vec<f64>) -> Self {
        let inner = self.gen.clone();
        GeneratorFamily {
            gen: Arc::new(move |a: &[f64], x: &PacketPoint| {
                let mut g = inner(a, x);
                g.hbar += a.iter().zip(&theta).map(|(u, v)| u * v).sum::<f64>();
                g
            }),
            ..self.clone()
        }
    }

    /// Drops the scalar part H̄ from every generator.
    pub fn without_scalar(&self) -> Self {
        let inner = self.gen.clone();
        GeneratorFamily {
            gen: Arc::new(move |a: &[f64], x: &PacketPoint| {
                let mut g = inner(a, x);
                g.hbar = 0.0;
                g
            }),
            ..self.clone()
        }
    }

    /// Conjugation by V(X) = exp(−iθ(X)n̂): H⁺⁺ ↦ e^{−2iθ}H⁺⁺, H⁺⁻ ↦ H⁺⁻ + (δ[A]θ)·1,
    /// φ ↦ e^{−iθ}φ. The operators become U'_g[X] = V(u_gX)U_g[X]V(X)†.
    pub fn gauged(&self, sys: &ClassicalSystem, theta: GaugeFn) -> Self {
        let inner = self.gen.clone();
        let inner_phi = self.phi.clone();
        let field = sys.field.clone();
        let th = theta.clone();
        let d = self.d;
        GeneratorFamily {
            gen: Arc::new(move |a: &[f64], x: &PacketPoint| {
                let g = inner(a, x);
                let (t, grad) = th(x);
                let v = field(a, x);
                let rate = grad.ds * v.ds
                    + grad.dq.iter().zip(&v.dq).map(|(u, w)| u * w).sum::<f64>()
                    + grad.dp.iter().zip(&v.dp).map(|(u, w)| u * w).sum::<f64>();
                let hpp = &g.hpp * C64::from_polar(1.0, -2.0 * t);
                let hsmall = &g.hsmall + CMat::identity(d, d) * C64::new(rate, 0.0);
                QuadraticGenerator::new(hpp, g.l, hsmall, g.hbar)
            }),
            phi: Arc::new(move |x: &PacketPoint, t: &PacketTangent| inner_phi(x, t) * C64::from_polar(1.0, -theta(x).0)),
            ..self.clone()
        }
    }

    pub fn generator(&self, a: &[f64], x: &PacketPoint) -> QuadraticGenerator {
        (self.gen)(a, x)
    }

    /// Ω_X[δX] as ladder terms.
    pub fn omega_terms(&self, x: &PacketPoint, t: &PacketTangent) -> Vec<Term> {
        omega_from_phi(&(self.phi)(x, t))
    }
}

/// d/dτ φ_{u_τX}[u_τ*δX] at τ = 0.
pub fn phi_derivative(
    sys: &ClassicalSystem,
    fam: &GeneratorFamily,
    a: &[f64],
    x: &PacketPoint,
    dx: &PacketTangent,
    h: f64,
) -> Result<CVec> {
    let at = |t: f64| -> Result<CVec> {
        let y = sys.flow(a, t, x)?;
        let v = sys.tangent_map(a, t, x, dx)?;
        Ok((fam.phi)(&y, &v))
    };
    Ok((at(h)? - at(-h)?).map(|z| z / (2.0 * h)))
}

/// −i(A⁺[φ] − A⁻[φ]).
pub fn omega_from_phi(phi: &CVec) -> Vec<Term> {
    let mut terms: Vec<Term> = ladder_terms(phi, Ladder::Create)
        .into_iter()
        .map(|t| Term { coeff: t.coeff * (-I), word: t.word })
        .collect();
    terms.extend(ladder_terms(phi, Ladder::Annihilate).into_iter().map(|t| Term { coeff: t.coeff * I, word: t.word }));
    terms
}

/// Spectral norm of the columns with total quanta ≤ N − margin.
pub fn restricted_norm(m: &CMat, basis: &Arc<ModeBasis>, margin: usize) -> f64 {
    let keep: Vec<usize> = (0..basis.dim()).filter(|&i| basis.degree(i) + margin <= basis.n_max()).collect();
    if keep.is_empty() {
        return 0.0;
    }
    let sub = CMat::from_fn(m.nrows(), keep.len(), |r, c| m[(r, keep[c])]);
    spectral_norm(&sub)
}

fn check_margin(basis: &Arc<ModeBasis>) -> Result<()> {
    if basis.n_max() < MARGIN + 1 {
        return Err(Error::Invalid(format!("cutoff {} leaves no margin of {MARGIN} quanta", basis.n_max())));
    }
    Ok(())
}

/// Residuals of the commutation relations for the quadratic blocks.
#[derive(Debug, Clone, Serialize)]
pub struct F3Report {
    pub hpp_residual: f64,
    pub hpm_residual: f64,
    /// H̄([A;B]) minus its predicted value; a nonzero value is the anomaly candidate.
    pub hbar_discrepancy: f64,
    pub phi_residual: f64,
    pub anomaly: bool,
}

impl F3Report {
    pub fn max_matrix_residual(&self) -> f64 {
        self.hpp_residual.max(self.hpm_residual).max(self.phi_residual)
    }
}

/// Block form of H([A;B]) = −i[H(A), H(B)] + δ[B]H(A) − δ[A]H(B):
/// H⁺⁺: −i[H⁺⁻(A)H⁺⁺(B) + H⁺⁺(B)H̄⁺⁻(A) − H⁺⁻(B)H⁺⁺(A) − H⁺⁺(A)H̄⁺⁻(B)],
/// H⁺⁻: −i[H⁺⁺(B)H̄⁺⁺(A) − H⁺⁺(A)H̄⁺⁺(B) + [H⁺⁻(A), H⁺⁻(B)]],
/// H̄:  −(i/2) tr[H⁺⁺(B)H̄⁺⁺(A) − H⁺⁺(A)H̄⁺⁺(B)];
/// and iδ[A]φ = H⁺⁻φ + H⁺⁺φ̄ along every coordinate direction.
pub fn check_f3(
    sys: &ClassicalSystem,
    alg: &LieAlgebra,
    fam: &GeneratorFamily,
    a: &[f64],
    b: &[f64],
    x: &PacketPoint,
    h: f64,
) -> Result<F3Report> {
    if !(h > 0.0) {
        return Err(Error::Invalid("step must be positive".into()));
    }
    let ga = fam.generator(a, x);
    let gb = fam.generator(b, x);
    let gc = fam.generator(&alg.bracket(a, b), x);
    let (pa, pb) = (&ga.hpp, &gb.hpp);
    let (ma, mb) = (ga.hpm(), gb.hpm());
    let mi = C64::new(0.0, -1.0);

    let d_pp = |u: &[f64], v: &[f64]| delta(sys, u, x, h, |y| Ok(fam.generator(v, y).hpp));
    let d_pm = |u: &[f64], v: &[f64]| delta(sys, u, x, h, |y| Ok(fam.generator(v, y).hpm()));
    let d_bar = |u: &[f64], v: &[f64]| delta(sys, u, x, h, |y| Ok(fam.generator(v, y).hbar));

    let pp = (&ma * pb + pb * conj_mat(&ma) - &mb * pa - pa * conj_mat(&mb)) * mi + d_pp(b, a)? - d_pp(a, b)?;
    let pm = (pb * conj_mat(pa) - pa * conj_mat(pb) + commutator(&ma, &mb)) * mi + d_pm(b, a)? - d_pm(a, b)?;
    let tr = trace(&(pb * conj_mat(pa) - pa * conj_mat(pb)));
    let bar = (C64::new(0.0, -0.5) * tr).re + d_bar(b, a)? - d_bar(a, b)?;

    let mut phi_res: f64 = 0.0;
    for c in Component::all(x.dim()) {
        let e = PacketTangent::unit(x.dim(), c);
        let dphi = phi_derivative(sys, fam, a, x, &e, h)?;
        let phi = (fam.phi)(x, &e);
        let r = dphi * I - &ma * &phi - pa * conj_vec(&phi);
        phi_res = phi_res.max(r.camax());
    }
    let hbar_discrepancy = gc.hbar - bar;
    Ok(F3Report {
        hpp_residual: (&gc.hpp - pp).camax(),
        hpm_residual: (gc.hpm() - pm).camax(),
        hbar_discrepancy,
        phi_residual: phi_res,
        anomaly: hbar_discrepancy.abs() > 1e-8,
    })
}

/// Residual of −[H(A),H(B)] − iδ[B]H(A) + iδ[A]H(B) + iH([A;B]) on the truncated space.
#[derive(Debug, Clone, Serialize)]
pub struct X6Report {
    pub residual: f64,
    pub is_scalar_multiple_of_identity: bool,
    /// s in residual ≈ s·1, as [re, im].
    pub scalar_estimate: [f64; 2],
    /// ‖residual − s·1‖ on the restricted columns.
    pub scalar_deviation: f64,
    /// max over coordinate directions of ‖[residual, Ω[δX]]‖.
    pub commutant_residual: f64,
}

/// JSON form of an anomaly finding.
#[derive(Debug, Clone, Serialize)]
pub struct AnomalyReport {
    pub relation: String,
    pub residual: f64,
    pub is_scalar_multiple_of_identity: bool,
    pub scalar_estimate: [f64; 2],
}

impl X6Report {
    pub fn anomaly_report(&self) -> AnomalyReport {
        AnomalyReport {
            relation: "x6".into(),
            residual: self.residual,
            is_scalar_multiple_of_identity: self.is_scalar_multiple_of_identity,
            scalar_estimate: self.scalar_estimate,
        }
    }
}

pub fn x6_matrix(
    sys: &ClassicalSystem,
    alg: &LieAlgebra,
    fam: &GeneratorFamily,
    a: &[f64],
    b: &[f64],
    x: &PacketPoint,
    basis: &Arc<ModeBasis>,
    h: f64,
) -> Result<CMat> {
    let mat = |u: &[f64], y: &PacketPoint| fam.generator(u, y).matrix(basis);
    let ha = mat(a, x);
    let hb = mat(b, x);
    let hc = mat(&alg.bracket(a, b), x);
    let dbha = delta(sys, b, x, h, |y| Ok(mat(a, y)))?;
    let dahb = delta(sys, a, x, h, |y| Ok(mat(b, y)))?;
    Ok(-commutator(&ha, &hb) + (dahb - dbha + hc) * I)
}

#[allow(clippy::too_many_arguments)]
pub fn check_x6(
    sys: &ClassicalSystem,
    alg: &LieAlgebra,
    fam: &GeneratorFamily,
    a: &[f64],
    b: &[f64],
    x: &PacketPoint,
    basis: &Arc<ModeBasis>,
    h: f64,
) -> Result<X6Report> {
    check_margin(basis)?;
    let r = x6_matrix(sys, alg, fam, a, b, x, basis, h)?;
    let residual = restricted_norm(&r, basis, MARGIN);
    let inner: Vec<usize> = (0..basis.dim()).filter(|&i| basis.degree(i) + MARGIN <= basis.n_max()).collect();
    let s = inner.iter().map(|&i| r[(i, i)]).sum::<C64>() / inner.len() as f64;
    let dev = restricted_norm(&(&r - CMat::identity(r.nrows(), r.ncols()) * s), basis, MARGIN);
    let mut comm: f64 = 0.0;
    for c in Component::all(x.dim()) {
        let om = terms_matrix(&fam.omega_terms(x, &PacketTangent::unit(x.dim(), c)), basis);
        comm = comm.max(restricted_norm(&commutator(&r, &om), basis, MARGIN + 1));
    }
    Ok(X6Report {
        residual,
        is_scalar_multiple_of_identity: dev <= 1e-6 * s.norm().max(1.0),
        scalar_estimate: [s.re, s.im],
        scalar_deviation: dev,
        commutant_residual: comm,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FormReport {
    pub omega_residual: f64,
    pub operator_residual: f64,
}

/// |δ[A]ω[δX]| and ‖(δ[A]Ω)[δX] − i[Ω[δX], H(A:X)]‖ with
/// (δ[A]Ω)[δX] = d/dτ Ω_{u_τX}[u_τ*δX].
#[allow(clippy::too_many_arguments)]
pub fn check_form_conditions(
    sys: &ClassicalSystem,
    fam: &GeneratorFamily,
    a: &[f64],
    x: &PacketPoint,
    dx: &PacketTangent,
    basis: &Arc<ModeBasis>,
    h: f64,
) -> Result<FormReport> {
    check_margin(basis)?;
    let omega_residual = super::classical::action_form_residual(sys, a, x, dx, h)?;
    let dphi = phi_derivative(sys, fam, a, x, dx, h)?;
    let d_omega = terms_matrix(&omega_from_phi(&dphi), basis);
    let om = terms_matrix(&fam.omega_terms(x, dx), basis);
    let ha = fam.generator(a, x).matrix(basis);
    let r = d_omega - commutator(&om, &ha) * I;
    Ok(FormReport { omega_residual, operator_residual: restricted_norm(&r, basis, MARGIN) })
}
