use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::basis::ModeBasis;
use super::ops::second_quantized;
use super::vector::FockVector;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_fn, hermiticity_residual, spectral_norm, CMat, CVec};

/// Hermitian T with spectrum ≥ 1.
#[derive(Debug, Clone)]
pub struct WeightOperator {
    pub t: CMat,
}

impl WeightOperator {
    pub fn new(t: CMat) -> Result<Self> {
        if t.nrows() != t.ncols() {
            return Err(Error::Invalid("T must be square".into()));
        }
        let h = hermiticity_residual(&t);
        if h > 1e-10 {
            return Err(Error::Invalid(format!("T not Hermitian (residual {h:.3e})")));
        }
        let min = hermitian_eigenvalues(&t)[0];
        if min < 1.0 - 1e-12 {
            return Err(Error::Invalid(format!("T has eigenvalue {min} < 1")));
        }
        Ok(WeightOperator { t })
    }
}

/// ‖(n̂+1)^m Ψ‖, or ‖(A⁺TA⁻+1)^m Ψ‖ when a weight is given.
pub fn weighted_norm(psi: &FockVector, m: f64, t: Option<&WeightOperator>) -> f64 {
    let basis = &psi.basis;
    match t {
        None => (0..psi.coeffs.len())
            .map(|i| ((basis.degree(i) + 1) as f64).powf(2.0 * m) * psi.coeffs[i].norm_sqr())
            .sum::<f64>()
            .sqrt(),
        Some(w) => {
            let nt = second_quantized(&w.t, basis);
            let mut total = 0.0;
            for n in 0..=basis.n_max() {
                let r = basis.shell(n);
                let block = nt.view((r.start, r.start), (r.len(), r.len())).into_owned();
                let p = hermitian_fn(&block, |x| (x + 1.0).powf(m));
                let v = CVec::from_column_slice(&psi.coeffs[r]);
                total += (p * v).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            total.sqrt()
        }
    }
}

/// max(‖T^{-1/2} H T^{-1/2}‖, ‖H T^{-1}‖) for the A⁺HA⁻ bound.
pub fn number_operator_bound_constant(h: &CMat, w: &WeightOperator) -> f64 {
    let tmh = hermitian_fn(&w.t, |x| x.powf(-0.5));
    let tinv = hermitian_fn(&w.t, |x| 1.0 / x);
    spectral_norm(&(&tmh * h * &tmh)).max(spectral_norm(&(h * tinv)))
}

/// C with C² = max{1, (m−k)!(m−k)^{2l}} as printed for monomial operators.
pub fn monomial_bound_constant(m: usize, k: usize, l: f64) -> f64 {
    if m <= k {
        return 1.0;
    }
    let q = m - k;
    let fact: f64 = (1..=q).map(|i| i as f64).product();
    (fact * (q as f64).powf(2.0 * l)).max(1.0).sqrt()
}

/// Smallest constant valid for every source shell s ≤ `s_max`, from the
/// exact ladder factors: sup_s (s+q+1)^{2l} s!/(s−k)! (s−k+m)!/(s−k)! / (s+1)^{2l+k+m}.
pub fn monomial_bound_constant_exact(m: usize, k: usize, l: f64, s_max: usize) -> f64 {
    let mut best: f64 = 0.0;
    for s in k..=s_max {
        let n = s + m - k;
        let mut r = ((n + 1) as f64).powf(2.0 * l) / ((s + 1) as f64).powf(2.0 * l + (k + m) as f64);
        for i in 0..k {
            r *= (s - i) as f64;
        }
        for i in 0..m {
            r *= (n - i) as f64;
        }
        best = best.max(r);
    }
    best.sqrt()
}

pub fn l2_norm(phi: &[C64]) -> f64 {
    phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Basis-independent helper for callers holding only a basis.
pub fn number_operator(basis: &Arc<ModeBasis>) -> CMat {
    let d = basis.d();
    second_quantized(&CMat::identity(d, d), basis)
}
