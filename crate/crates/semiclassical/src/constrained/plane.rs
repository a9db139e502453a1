use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::bogoliubov::BogoliubovFlow;
use crate::error::{Error, Result};
use crate::linalg::{conj_mat, conj_vec, pairing, CVec};

/// Absolute tolerance on Im(B_i, B_j).
pub const ISOTROPY_TOL: f64 = 1e-12;

/// Span of k complex d-vectors with Im(B_i, B_j) = 0, carrying the measure a dβ.
#[derive(Debug, Clone)]
pub struct IsotropicPlane {
    pub bs: Vec<CVec>,
    pub a: f64,
    d: usize,
}

pub fn make_plane(bs: Vec<CVec>, a: f64) -> Result<IsotropicPlane> {
    make_plane_with_tol(bs, a, ISOTROPY_TOL)
}

/// As `make_plane`, with an explicit isotropy tolerance (used for numerically evolved planes).
pub fn make_plane_with_tol(bs: Vec<CVec>, a: f64, tol: f64) -> Result<IsotropicPlane> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Invalid(format!("measure constant must be positive, got {a}")));
    }
    let d = match bs.first() {
        Some(b) => b.len(),
        None => return Err(Error::Invalid("use make_point_plane for k = 0".into())),
    };
    if let Some(b) = bs.iter().find(|b| b.len() != d) {
        return Err(Error::Dimension { expected: d, got: b.len() });
    }
    let plane = IsotropicPlane { bs, a, d };
    let r = plane.isotropy_residual();
    if r > tol {
        return Err(Error::NotIsotropic(format!("max |Im(B_i,B_j)| = {r:.3e}")));
    }
    let sv = plane.real_singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= 1e-10 * smax {
        return Err(Error::Invalid("constraint vectors are linearly dependent".into()));
    }
    Ok(plane)
}

/// Zero-dimensional plane in d modes: the inner product reduces to a⟨Y₁,Y₂⟩.
pub fn make_point_plane(d: usize, a: f64) -> Result<IsotropicPlane> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Invalid(format!("measure constant must be positive, got {a}")));
    }
    Ok(IsotropicPlane { bs: Vec::new(), a, d })
}

impl IsotropicPlane {
    pub fn k(&self) -> usize {
        self.bs.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn isotropy_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.k() {
            for j in 0..i {
                r = r.max(pairing(&self.bs[i], &self.bs[j]).im.abs());
            }
        }
        r
    }

    fn real_matrix(&self) -> DMatrix<f64> {
        let (d, k) = (self.d, self.k());
        DMatrix::from_fn(2 * d, k, |r, s| if r < d { self.bs[s][r].re } else { self.bs[s][r - d].im })
    }

    fn real_singular_values(&self) -> Vec<f64> {
        self.real_matrix().singular_values().iter().cloned().collect()
    }

    /// Smallest σ with ‖Σβ_sB_s‖ ≥ σ|β|.
    pub fn sigma_min(&self) -> f64 {
        if self.k() == 0 {
            return f64::INFINITY;
        }
        self.real_singular_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Σ β_s B_s.
    pub fn element(&self, beta: &[f64]) -> CVec {
        let mut v = CVec::zeros(self.d);
        for (b, s) in self.bs.iter().zip(beta) {
            v += b * C64::new(*s, 0.0);
        }
        v
    }

    /// Basis B'_l = Σ_s T_{sl} B_s with the measure adjusted so that a dβ is unchanged.
    pub fn change_basis(&self, t: &DMatrix<f64>) -> Result<IsotropicPlane> {
        let k = self.k();
        if t.nrows() != k || t.ncols() != k {
            return Err(Error::Dimension { expected: k, got: t.nrows() });
        }
        let det = t.determinant();
        if det.abs() < 1e-14 {
            return Err(Error::Invalid("basis change is singular".into()));
        }
        let bs = (0..k)
            .map(|l| {
                let mut v = CVec::zeros(self.d);
                for s in 0..k {
                    v += &self.bs[s] * C64::new(t[(s, l)], 0.0);
                }
                v
            })
            .collect();
        Ok(IsotropicPlane { bs, a: self.a * det.abs(), d: self.d })
    }
}

/// Plane carried by the final sample of a flow: B^t = F B̄ + Ḡ B, a unchanged.
pub fn evolve_plane(plane: &IsotropicPlane, flow: &BogoliubovFlow) -> Result<IsotropicPlane> {
    let s = flow.last();
    if s.f.nrows() != plane.d() {
        return Err(Error::Dimension { expected: plane.d(), got: s.f.nrows() });
    }
    let gbar = conj_mat(&s.g);
    let bs: Vec<CVec> = plane.bs.iter().map(|b| &s.f * conj_vec(b) + &gbar * b).collect();
    if bs.is_empty() {
        return make_point_plane(plane.d(), plane.a);
    }
    let scale = bs.iter().map(|b| b.norm_squared()).fold(1.0, f64::max);
    make_plane_with_tol(bs, plane.a, 1e-9 * scale).map_err(|e| match e {
        Error::Invalid(_) => Error::Invalid("evolved constraint vectors are numerically degenerate".into()),
        other => other,
    })
}
