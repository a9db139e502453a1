use num_complex::Complex64 as C64;
use serde::Serialize;

use super::path::GeneratorPath;
use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, conj_mat, eye, hs_norm, spectral_norm, symmetrize, trace, CMat, I};

pub const MAX_COND: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct FlowSample {
    pub t: f64,
    pub f: CMat,
    pub g: CMat,
    pub m: CMat,
    pub c: C64,
}

/// (F_t, G_t, M_t, c_t) with the stored trajectory it came from.
#[derive(Debug, Clone)]
pub struct BogoliubovFlow {
    pub trajectory: Vec<FlowSample>,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct FlowResiduals {
    /// ‖G†G − F†F − 1‖
    pub symplectic: f64,
    /// ‖FᵀG − GᵀF‖
    pub transpose: f64,
    /// ‖MG − F‖
    pub mg: f64,
    /// max(0, ‖G⁻¹‖ − 1)
    pub ginv_excess: f64,
}

impl FlowResiduals {
    pub fn max(&self) -> f64 {
        self.symplectic.max(self.transpose).max(self.mg).max(self.ginv_excess)
    }
}

impl BogoliubovFlow {
    pub fn identity(d: usize) -> Self {
        BogoliubovFlow {
            trajectory: vec![FlowSample {
                t: 0.0,
                f: CMat::zeros(d, d),
                g: eye(d),
                m: CMat::zeros(d, d),
                c: C64::new(1.0, 0.0),
            }],
            dt: 0.0,
        }
    }

    pub fn last(&self) -> &FlowSample {
        self.trajectory.last().unwrap()
    }

    pub fn d(&self) -> usize {
        self.last().f.nrows()
    }
}

pub fn sample_residuals(s: &FlowSample) -> FlowResiduals {
    let d = s.f.nrows();
    let symplectic = hs_norm(&(s.g.adjoint() * &s.g - s.f.adjoint() * &s.f - eye(d)));
    let transpose = hs_norm(&(s.f.transpose() * &s.g - s.g.transpose() * &s.f));
    let mg = hs_norm(&(&s.m * &s.g - &s.f));
    let ginv = s.g.clone().try_inverse().map(|gi| spectral_norm(&gi)).unwrap_or(f64::INFINITY);
    FlowResiduals { symplectic, transpose, mg, ginv_excess: (ginv - 1.0).max(0.0) }
}

pub fn flow_invariants(flow: &BogoliubovFlow) -> FlowResiduals {
    sample_residuals(flow.last())
}

/// Right-hand side of (F, G, c)' for generator h.
fn rhs(h: &crate::fock::QuadraticGenerator, f: &CMat, g: &CMat, c: C64) -> Result<(CMat, CMat, C64)> {
    let hpm = h.hpm();
    let hmp = conj_mat(&hpm);
    let hpp = &h.hpp;
    let hmm = h.hmm();
    // i F' = H⁺⁻F + H⁺⁺G ;  −i G' = H⁻⁺G + H⁻⁻F
    let df = (&hpm * f + hpp * g) * (-I);
    let dg = (&hmp * g + &hmm * f) * I;
    let m = f * checked_inverse(g, MAX_COND)?;
    let dc = -I * (0.5 * trace(&(&hmm * m)) + h.hbar) * c;
    Ok((df, dg, dc))
}

/// Classical fourth-order Runge-Kutta on (F, G, c) from (0, 1, 1).
pub fn integrate_flow(path: &dyn GeneratorPath, t: f64, dt: f64) -> Result<BogoliubovFlow> {
    if !(dt > 0.0) || t < 0.0 {
        return Err(Error::Invalid(format!("need dt > 0 and t ≥ 0, got dt={dt}, t={t}")));
    }
    let d = path.d();
    let mut flow = BogoliubovFlow::identity(d);
    flow.dt = dt;
    let steps = (t / dt).round().max(if t > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if steps > 0 { t / steps as f64 } else { 0.0 };
    let (mut f, mut g, mut cc) = (CMat::zeros(d, d), eye(d), C64::new(1.0, 0.0));
    let half = C64::new(0.5 * h, 0.0);
    let full = C64::new(h, 0.0);
    for s in 0..steps {
        let t0 = s as f64 * h;
        let hm = path.at(t0 + 0.5 * h);
        let (k1f, k1g, k1c) = rhs(&path.at(t0), &f, &g, cc)?;
        let (k2f, k2g, k2c) = rhs(&hm, &(&f + &k1f * half), &(&g + &k1g * half), cc + k1c * half)?;
        let (k3f, k3g, k3c) = rhs(&hm, &(&f + &k2f * half), &(&g + &k2g * half), cc + k2c * half)?;
        let (k4f, k4g, k4c) = rhs(&path.at(t0 + h), &(&f + &k3f * full), &(&g + &k3g * full), cc + k3c * full)?;
        let w = C64::new(h / 6.0, 0.0);
        let two = C64::new(2.0, 0.0);
        f += (k1f + &k2f * two + &k3f * two + k4f) * w;
        g += (k1g + &k2g * two + &k3g * two + k4g) * w;
        cc += (k1c + k2c * two + k3c * two + k4c) * w;
        let m = symmetrize(&(&f * checked_inverse(&g, MAX_COND)?));
        flow.trajectory.push(FlowSample { t: t0 + h, f: f.clone(), g: g.clone(), m, c: cc });
    }
    Ok(flow)
}

/// Max over interior samples of ‖i dM/dt − H⁺⁺ − H⁺⁻M − MH⁻⁺ − MH⁻⁻M‖,
/// with dM/dt from the five-point central difference.
pub fn riccati_residual(flow: &BogoliubovFlow, path: &dyn GeneratorPath) -> Result<f64> {
    let tr = &flow.trajectory;
    if tr.len() < 5 {
        return Err(Error::Invalid("trajectory too short for differencing (need 5 samples)".into()));
    }
    let h = flow.dt;
    let mut worst: f64 = 0.0;
    for j in 2..tr.len() - 2 {
        let dm = (&tr[j - 2].m - &tr[j - 1].m * C64::new(8.0, 0.0) + &tr[j + 1].m * C64::new(8.0, 0.0) - &tr[j + 2].m)
            * C64::new(1.0 / (12.0 * h), 0.0);
        let gen = path.at(tr[j].t);
        let hpm = gen.hpm();
        let m = &tr[j].m;
        let r = dm * I - &gen.hpp - &hpm * m - m * conj_mat(&hpm) - m * gen.hmm() * m;
        worst = worst.max(hs_norm(&r));
    }
    Ok(worst)
}

/// CSV rows: t, vec(F), vec(G), vec(M) as (re, im) pairs column-major, c, residuals.
pub fn write_flow_csv<W: std::io::Write>(flow: &BogoliubovFlow, out: W) -> Result<()> {
    let d = flow.d();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for name in ["F", "G", "M"] {
        for j in 0..d {
            for i in 0..d {
                header.push(format!("{name}{i}{j}_re"));
                header.push(format!("{name}{i}{j}_im"));
            }
        }
    }
    for h in ["c_re", "c_im", "res_symplectic", "res_transpose", "res_mg", "res_ginv"] {
        header.push(h.into());
    }
    w.write_record(&header).map_err(|e| Error::Invalid(e.to_string()))?;
    for s in &flow.trajectory {
        let mut row = vec![format!("{:e}", s.t)];
        for mat in [&s.f, &s.g, &s.m] {
            for z in mat.iter() {
                row.push(format!("{:e}", z.re));
                row.push(format!("{:e}", z.im));
            }
        }
        let r = sample_residuals(s);
        for x in [s.c.re, s.c.im, r.symplectic, r.transpose, r.mg, r.ginv_excess] {
            row.push(format!("{x:e}"));
        }
        w.write_record(&row).map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(())
}
