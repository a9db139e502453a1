//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn norm1(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn spectral_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Hilbert-Schmidt norm.
pub fn hs_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn cond(a: &CMat) -> f64 {
    let s = a.clone().singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn min_singular_value(a: &CMat) -> f64 {
    a.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Inverse refusing matrices with condition number above `max_cond`.
pub fn checked_inverse(a: &CMat, max_cond: f64) -> Result<CMat> {
    let k = cond(a);
    if !k.is_finite() || k > max_cond {
        return Err(Error::IllConditioned(k));
    }
    a.clone().try_inverse().ok_or(Error::IllConditioned(k))
}

pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::IllConditioned(f64::INFINITY))
}

/// ‖A − Aᵀ‖_F
pub fn symmetry_residual(a: &CMat) -> f64 {
    hs_norm(&(a - a.transpose()))
}

/// ‖A − A†‖_F
pub fn hermiticity_residual(a: &CMat) -> f64 {
    hs_norm(&(a - a.adjoint()))
}

pub fn symmetrize(a: &CMat) -> CMat {
    (a + a.transpose()) * c(0.5, 0.0)
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(a)).eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// f(A) for Hermitian A via eigendecomposition.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let eig = SymmetricEigen::new(hermitize(a));
    let v = &eig.eigenvectors;
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = c(f(eig.eigenvalues[i]), 0.0);
    }
    v * d * v.adjoint()
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

fn pade_low(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let a2 = a * a;
    let mut pow = eye(n);
    let mut u = CMat::zeros(n, n);
    let mut v = CMat::zeros(n, n);
    for j in 0..b.len() / 2 {
        u += &pow * c(b[2 * j + 1], 0.0);
        v += &pow * c(b[2 * j], 0.0);
        pow = &pow * &a2;
    }
    (a * u, v)
}

fn pade13(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let b = |k: usize| c(PADE13[k], 0.0);
    let id = eye(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_in = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = a * u_in;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    (u, v)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let nrm = norm1(a);
    let lows: [&[f64]; 4] = [&PADE3, &PADE5, &PADE7, &PADE9];
    for (k, b) in lows.iter().enumerate() {
        if nrm <= THETA[k] {
            let (u, v) = pade_low(a, b);
            return solve(&(&v - &u), &(&v + &u)).expect("Padé denominator singular");
        }
    }
    let s = if nrm > THETA[4] {
        (nrm / THETA[4]).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * c(0.5f64.powi(s), 0.0);
    let (u, v) = pade13(&scaled);
    let mut r = solve(&(&v - &u), &(&v + &u)).expect("Padé denominator singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Principal square root by the Denman-Beavers iteration.
pub fn sqrtm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = eye(n);
    for it in 0..100 {
        let yi = y.clone().try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
        let zi = z.clone().try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
        let yn = (&y + &zi) * c(0.5, 0.0);
        let zn = (&z + &yi) * c(0.5, 0.0);
        let delta = hs_norm(&(&yn - &y)) / hs_norm(&yn).max(1e-300);
        y = yn;
        z = zn;
        if delta < 1e-15 {
            return Ok(y);
        }
        if it == 99 {
            return Err(Error::NoConvergence { iters: 100, residual: delta });
        }
    }
    Ok(y)
}

/// Principal logarithm by inverse scaling and squaring, then the atanh series.
pub fn logm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let id = eye(n);
    let mut x = a.clone();
    let mut k = 0;
    while norm1(&(&x - &id)) > 0.1 {
        x = sqrtm(&x)?;
        k += 1;
        if k > 60 {
            return Err(Error::NoConvergence { iters: k, residual: norm1(&(&x - &id)) });
        }
    }
    // log X = 2 atanh(Z), Z = (X - 1)(X + 1)^{-1}
    let z = solve(&(&x + &id).transpose(), &(&x - &id).transpose())?.transpose();
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    for j in 1..40 {
        term = &term * &z2;
        let add = &term * c(1.0 / (2 * j + 1) as f64, 0.0);
        sum += &add;
        if hs_norm(&add) < 1e-18 {
            break;
        }
    }
    Ok(sum * c(2.0 * 2f64.powi(k as i32), 0.0))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

pub fn cvec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate-linear in the first slot: (f, g) = Σ conj(fᵢ) gᵢ.
pub fn pairing(f: &CVec, g: &CVec) -> C64 {
    f.iter().zip(g.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn conj_mat(a: &CMat) -> CMat {
    a.map(|z| z.conj())
}

pub fn conj_vec(v: &CVec) -> CVec {
    v.map(|z| z.conj())
}

pub fn mat_from_rows(rows: &[Vec<C64>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Invalid("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_exp(a: &CMat) -> CMat {
        let n = a.nrows();
        let mut sum = eye(n);
        let mut term = eye(n);
        for k in 1..200 {
            term = &term * a * c(1.0 / k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_on_small_matrices() {
        let a = CMat::from_fn(3, 3, |i, j| c((i as f64 - j as f64) * 0.3, 0.1 * (i + j) as f64));
        for s in [0.001, 0.1, 1.0, 3.0] {
            let m = &a * c(s, 0.0);
            let diff = hs_norm(&(expm(&m) - taylor_exp(&m)));
            assert!(diff < 1e-12 * hs_norm(&taylor_exp(&m)), "s={s} diff={diff}");
        }
    }

    #[test]
    fn expm_rotation_closed_form() {
        let t = 7.3;
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-t, 0.0), c(t, 0.0), c(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-12);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-12);
    }

    #[test]
    fn logm_inverts_expm() {
        let a = CMat::from_fn(3, 3, |i, j| c(0.2 * (i as f64) - 0.1 * j as f64, 0.3 * ((i * j) as f64 - 1.0)));
        let l = logm(&expm(&a)).unwrap();
        assert!(hs_norm(&(l - a)) < 1e-11);
    }

    #[test]
    fn hermitian_power_squares_back() {
        let h = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(1.5, 0.0)]);
        let r = hermitian_fn(&h, f64::sqrt);
        assert!(hs_norm(&(&r * &r - &h)) < 1e-13);
    }
}
