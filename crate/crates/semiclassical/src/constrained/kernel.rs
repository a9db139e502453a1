use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::FockVector;

const MAX_BOX: usize = 4_000_000;

/// ⟨m|D(α)|n⟩ for m, n < nb, row-major, with D(α) = exp(αa† − ᾱa) on the
/// untruncated single-mode space.
pub fn single_mode_displacement(alpha: C64, nb: usize) -> Vec<C64> {
    let mut col = vec![C64::new(0.0, 0.0); nb];
    col[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for m in 1..nb {
        col[m] = col[m - 1] * alpha / (m as f64).sqrt();
    }
    let mut out = vec![C64::new(0.0, 0.0); nb * nb];
    for m in 0..nb {
        out[m * nb] = col[m];
    }
    let ac = alpha.conj();
    for n in 1..nb {
        let sn = (n as f64).sqrt();
        let mut next = vec![C64::new(0.0, 0.0); nb];
        for m in 0..nb {
            let up = if m > 0 { col[m - 1] * (m as f64).sqrt() } else { C64::new(0.0, 0.0) };
            next[m] = (up - ac * col[m]) / sn;
        }
        for m in 0..nb {
            out[m * nb + n] = next[m];
        }
        col = next;
    }
    out
}

/// Evaluates ⟨Y₁, U[B] Y₂⟩ with U[B] = ⊗_k D(B_k) acting exactly.
#[derive(Debug, Clone)]
pub struct DisplacementKernel {
    d: usize,
    nb: usize,
    y1: Vec<C64>,
    y2: Vec<C64>,
}

impl DisplacementKernel {
    pub fn new(y1: &FockVector, y2: &FockVector) -> Result<Self> {
        y1.check_basis(y2)?;
        let d = y1.basis.d();
        let nb = y1.max_degree().max(y2.max_degree()) + 1;
        let size = nb.checked_pow(d as u32).filter(|s| *s <= MAX_BOX).ok_or_else(|| {
            Error::Invalid(format!("dense displacement box {nb}^{d} too large"))
        })?;
        let to_box = |y: &FockVector| {
            let mut v = vec![C64::new(0.0, 0.0); size];
            for (i, c) in y.coeffs.iter().enumerate() {
                if c.norm_sqr() > 0.0 {
                    let occ = y.basis.state(i);
                    let mut idx = 0;
                    for k in (0..d).rev() {
                        idx = idx * nb + occ[k] as usize;
                    }
                    v[idx] = *c;
                }
            }
            v
        };
        Ok(DisplacementKernel { d, nb, y1: to_box(y1), y2: to_box(y2) })
    }

    /// Highest total degree present in either vector.
    pub fn degree(&self) -> usize {
        self.nb - 1
    }

    pub fn eval(&self, b: &[C64]) -> C64 {
        let (nb, d) = (self.nb, self.d);
        let mut data = self.y2.clone();
        let mut buf = vec![C64::new(0.0, 0.0); nb];
        for (k, alpha) in b.iter().enumerate().take(d) {
            let dm = single_mode_displacement(*alpha, nb);
            let stride = nb.pow(k as u32);
            let outer = data.len() / (stride * nb);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * stride * nb + inner;
                    for (m, slot) in buf.iter_mut().enumerate() {
                        let row = &dm[m * nb..(m + 1) * nb];
                        let mut acc = C64::new(0.0, 0.0);
                        for n in 0..nb {
                            acc += row[n] * data[base + n * stride];
                        }
                        *slot = acc;
                    }
                    for m in 0..nb {
                        data[base + m * stride] = buf[m];
                    }
                }
            }
        }
        self.y1.iter().zip(&data).map(|(a, b)| a.conj() * b).sum()
    }
}
