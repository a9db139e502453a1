use num_complex::Complex64 as C64;

use super::path::GeneratorPath;
use crate::error::{Error, Result};
use crate::linalg::{conj_mat, expm, eye, hs_norm, spectral_norm, CMat, I};

#[derive(Debug, Clone)]
pub struct PicardResult {
    /// F_t = e^{−iLt} f_t
    pub f: CMat,
    /// G_t = e^{iL*t} g_t
    pub g: CMat,
    /// ‖fⁿ_t‖₂ for n = 0..n_terms.
    pub f_term_norms: Vec<f64>,
    pub g_term_norms: Vec<f64>,
    /// Hilbert-Schmidt norm of the last (fⁿ, gⁿ) pair.
    pub last_term_norm: f64,
    /// a = sup_τ (‖Y_τ‖ + ‖Z_τ‖); terms obey ‖fⁿ‖₂ ≤ √d (a t)ⁿ/n!.
    pub rate: f64,
}

/// Cumulative integral of samples on a uniform grid, fourth order.
fn cumulative(ys: &[CMat], h: f64) -> Vec<CMat> {
    let n = ys.len() - 1;
    let d = ys[0].nrows();
    let mut out = vec![CMat::zeros(d, d); n + 1];
    let w = |a: f64| C64::new(a * h / 24.0, 0.0);
    for j in 0..n {
        let piece = if n < 3 {
            (&ys[j] + &ys[j + 1]) * C64::new(0.5 * h, 0.0)
        } else if j == 0 {
            &ys[0] * w(9.0) + &ys[1] * w(19.0) - &ys[2] * w(5.0) + &ys[3] * w(1.0)
        } else if j == n - 1 {
            &ys[n - 3] * w(1.0) - &ys[n - 2] * w(5.0) + &ys[n - 1] * w(19.0) + &ys[n] * w(9.0)
        } else {
            &ys[j - 1] * w(-1.0) + &ys[j] * w(13.0) + &ys[j + 1] * w(13.0) - &ys[j + 2] * w(1.0)
        };
        out[j + 1] = &out[j] + piece;
    }
    out
}

/// Iterated-integral series for (F, G) in the interaction picture of the
/// constant part L, evaluated on `grid` uniform intervals of [0, t].
pub fn picard_flow(path: &dyn GeneratorPath, t: f64, n_terms: usize, grid: usize, tol: f64) -> Result<PicardResult> {
    if n_terms == 0 || grid < 3 {
        return Err(Error::Invalid("need n_terms ≥ 1 and grid ≥ 3".into()));
    }
    let d = path.d();
    let l = path.at(0.0).l.clone();
    let h = t / grid as f64;
    let mut ys = Vec::with_capacity(grid + 1);
    let mut zs = Vec::with_capacity(grid + 1);
    let mut rate: f64 = 0.0;
    for j in 0..=grid {
        let tau = j as f64 * h;
        let gen = path.at(tau);
        let u = expm(&(&l * (I * tau)));
        let ui = expm(&(&l * (-I * tau)));
        let ul = expm(&(conj_mat(&l) * (I * tau)));
        let y = &u * &gen.hsmall * ui;
        let z = &u * &gen.hpp * ul;
        rate = rate.max(spectral_norm(&y) + spectral_norm(&z));
        ys.push(y);
        zs.push(z);
    }
    let ystar: Vec<CMat> = ys.iter().map(conj_mat).collect();
    let zstar: Vec<CMat> = zs.iter().map(conj_mat).collect();
    let mut fn_ = vec![CMat::zeros(d, d); grid + 1];
    let mut gn = vec![eye(d); grid + 1];
    let mut fsum = CMat::zeros(d, d);
    let mut gsum = eye(d);
    let mut f_norms = vec![0.0];
    let mut g_norms = vec![hs_norm(&eye(d))];
    let mut last = hs_norm(&eye(d));
    for _ in 1..n_terms {
        // fⁿ⁺¹ = −i∫(Y fⁿ + Z gⁿ),  gⁿ⁺¹ = +i∫(Z* fⁿ + Y* gⁿ)
        let fi: Vec<CMat> = (0..=grid).map(|j| (&ys[j] * &fn_[j] + &zs[j] * &gn[j]) * (-I)).collect();
        let gi: Vec<CMat> = (0..=grid).map(|j| (&zstar[j] * &fn_[j] + &ystar[j] * &gn[j]) * I).collect();
        fn_ = cumulative(&fi, h);
        gn = cumulative(&gi, h);
        fsum += &fn_[grid];
        gsum += &gn[grid];
        let (a, b) = (hs_norm(&fn_[grid]), hs_norm(&gn[grid]));
        f_norms.push(a);
        g_norms.push(b);
        last = (a * a + b * b).sqrt();
    }
    if last > tol {
        return Err(Error::NonConvergent(format!("last Picard term norm {last:.3e} above {tol:.3e}")));
    }
    let f = expm(&(&l * (-I * t))) * fsum;
    let g = expm(&(conj_mat(&l) * (I * t))) * gsum;
    Ok(PicardResult { f, g, f_term_norms: f_norms, g_term_norms: g_norms, last_term_norm: last, rate })
}
