use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::kernel::DisplacementKernel;
use super::plane::{evolve_plane, IsotropicPlane};
use crate::bogoliubov::{integrate_flow, propagate_direct, GeneratorPath};
use crate::error::{Error, Result};
use crate::fock::{binomial, weighted_norm, FockVector};
use crate::quadrature::{gauss_hermite, gauss_legendre, tensor_sum};

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Gauss–Legendre points per axis for the first pass.
    pub initial_order: usize,
    pub max_order: usize,
    /// Accepted change under order doubling, relative to max(1, |value|).
    pub self_check_tol: f64,
    /// Target for the certified tail outside the box.
    pub tail_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { initial_order: 32, max_order: 1024, self_check_tol: 1e-8, tail_tol: 1e-10 }
    }
}

/// One evaluation of the displacement-integral inner product.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerRecord {
    pub k: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "box")]
    pub r_box: f64,
    pub order: usize,
    pub value: [f64; 2],
    pub tail_bound: f64,
}

impl InnerRecord {
    pub fn value(&self) -> C64 {
        C64::new(self.value[0], self.value[1])
    }
}

fn unit_sphere_area(k: usize) -> f64 {
    // 2π^{k/2}/Γ(k/2)
    let pi = std::f64::consts::PI;
    let mut gamma = if k % 2 == 0 { 1.0 } else { pi.sqrt() };
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while x < k as f64 / 2.0 - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * pi.powf(k as f64 / 2.0) / gamma
}

/// ∫_x^∞ u^p e^{−u²/2} du by composite Gauss–Legendre.
fn radial_tail(p: usize, x: f64) -> f64 {
    let rule = gauss_legendre(24);
    let end = x.max((p as f64).sqrt()) + 40.0;
    let panels = 40;
    let h = (end - x) / panels as f64;
    let mut s = 0.0;
    for j in 0..panels {
        let r = rule.mapped(x + j as f64 * h, x + (j + 1) as f64 * h);
        for (u, w) in r.nodes.iter().zip(&r.weights) {
            s += w * (p as f64 * u.ln() - 0.5 * u * u).exp();
        }
    }
    s
}

/// Certified box half-width R and tail bound for a·∫_{|β|>R}|⟨Y₁,U[βB]Y₂⟩|.
///
/// Uses |⟨m|D(α)|n⟩| ≤ 2^{max(m,n)} e^{−|α|²/2} max(1,|α|)^{m+n} per mode and
/// ‖Σβ_sB_s‖ ≥ σ_min|β|.
pub fn certified_box(y1: &FockVector, y2: &FockVector, plane: &IsotropicPlane, tail_tol: f64) -> Result<(f64, f64)> {
    let k = plane.k();
    let sigma = plane.sigma_min();
    let p = y1.max_degree() + y2.max_degree();
    let l1 = |y: &FockVector| y.coeffs.iter().map(|c| c.norm()).sum::<f64>();
    let pref = plane.a * l1(y1) * l1(y2) * 2f64.powi(p as i32) * unit_sphere_area(k) / sigma.powi(k as i32);
    if pref == 0.0 {
        return Ok((1.0 / sigma, 0.0));
    }
    let mut x = ((p + k) as f64).sqrt().max(1.0);
    loop {
        let tail = pref * radial_tail(p + k - 1, x);
        if tail < tail_tol {
            return Ok((x / sigma, tail));
        }
        x += 0.25;
        if x > 1e3 {
            return Err(Error::NonConvergent("tail bound does not fall below tolerance".into()));
        }
    }
}

fn check_weights(y1: &FockVector, y2: &FockVector, k: usize) -> Result<()> {
    let m = (k + 2) as f64 / 2.0;
    for y in [y1, y2] {
        let w = weighted_norm(y, m, None);
        if !w.is_finite() {
            return Err(Error::Invalid(format!("weighted norm of order {m} is not finite")));
        }
    }
    Ok(())
}

/// a ∫_{[−R,R]^k} dβ w(β) ⟨Y₁, U[Σβ_sB_s] Y₂⟩ with order doubling.
fn box_integral(
    y1: &FockVector,
    y2: &FockVector,
    plane: &IsotropicPlane,
    opts: &QuadratureOptions,
    weight: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<InnerRecord> {
    check_weights(y1, y2, plane.k())?;
    let kernel = DisplacementKernel::new(y1, y2)?;
    let k = plane.k();
    let d = plane.d();
    if k == 0 {
        let v = kernel.eval(&vec![C64::new(0.0, 0.0); d]) * plane.a;
        return Ok(InnerRecord { k, d, n: kernel.degree(), r_box: 0.0, order: 0, value: [v.re, v.im], tail_bound: 0.0 });
    }
    let (r, tail) = certified_box(y1, y2, plane, opts.tail_tol)?;
    let f = |beta: &[f64]| -> C64 {
        let b = plane.element(beta);
        kernel.eval(b.as_slice()) * weight(beta)
    };
    let mut order = opts.initial_order.max(2);
    let mut prev = tensor_sum(&gauss_legendre(order).mapped(-r, r), k, &f) * plane.a;
    loop {
        let next_order = 2 * order;
        if next_order > opts.max_order {
            return Err(Error::NonConvergent(format!(
                "order doubling did not settle below {:.1e} by order {order}",
                opts.self_check_tol
            )));
        }
        let next = tensor_sum(&gauss_legendre(next_order).mapped(-r, r), k, &f) * plane.a;
        let diff = (next - prev).norm();
        if diff <= opts.self_check_tol * next.norm().max(1.0) {
            return Ok(InnerRecord {
                k,
                d,
                n: kernel.degree(),
                r_box: r,
                order: next_order,
                value: [next.re, next.im],
                tail_bound: tail,
            });
        }
        order = next_order;
        prev = next;
    }
}

/// ⟨Y₁,Y₂⟩_L = a ∫dβ ⟨Y₁, U[Σβ_sB_s] Y₂⟩.
pub fn inner_constrained(
    y1: &FockVector,
    y2: &FockVector,
    plane: &IsotropicPlane,
    opts: &QuadratureOptions,
) -> Result<InnerRecord> {
    box_integral(y1, y2, plane, opts, &|_| 1.0)
}

/// a ∫dβ e^{−ε|β|²} ⟨Y, U[Σβ_sB_s] Y⟩ (real up to quadrature error).
pub fn regularized_inner(y: &FockVector, plane: &IsotropicPlane, eps: f64, opts: &QuadratureOptions) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::Invalid(format!("ε must be positive, got {eps}")));
    }
    let rec = box_integral(y, y, plane, opts, &|beta| (-eps * beta.iter().map(|b| b * b).sum::<f64>()).exp())?;
    Ok(rec.value[0])
}

/// Same quantity by an n-point Gauss–Hermite rule in the variable √ε β.
pub fn regularized_inner_hermite(y: &FockVector, plane: &IsotropicPlane, eps: f64, n: usize) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::Invalid(format!("ε must be positive, got {eps}")));
    }
    let kernel = DisplacementKernel::new(y, y)?;
    let k = plane.k();
    let s = eps.sqrt();
    let rule = gauss_hermite(n);
    let f = |x: &[f64]| {
        let beta: Vec<f64> = x.iter().map(|v| v / s).collect();
        kernel.eval(plane.element(&beta).as_slice())
    };
    let v = tensor_sum(&rule, k, &f) * (plane.a / s.powi(k as i32));
    Ok(v.re)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayProfile {
    pub m: usize,
    /// Σ_j C(m,j)‖Y₁‖_{j/2}‖Y₂‖_{(m−j)/2}, bounding ‖B‖^m|⟨Y₁,U[B]Y₂⟩|.
    pub constant: f64,
    /// constant/σ_min^m, bounding |β|^m|⟨Y₁,U[Σβ_sB_s]Y₂⟩|.
    pub beta_constant: f64,
    /// Largest sampled ‖B‖^m|⟨Y₁,U[B]Y₂⟩| over the test rays.
    pub sampled_max: f64,
}

/// Binomial decay constant, verified on rays through the plane.
pub fn decay_profile(y1: &FockVector, y2: &FockVector, plane: &IsotropicPlane, m: usize) -> Result<DecayProfile> {
    let constant: f64 = (0..=m)
        .map(|j| {
            binomial(m, j) as f64 * weighted_norm(y1, j as f64 / 2.0, None) * weighted_norm(y2, (m - j) as f64 / 2.0, None)
        })
        .sum();
    let kernel = DisplacementKernel::new(y1, y2)?;
    let k = plane.k();
    let dirs: Vec<Vec<f64>> = match k {
        0 => vec![],
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..8)
            .map(|j| {
                let t = j as f64 * std::f64::consts::PI / 4.0 + 0.3;
                let mut v = vec![0.0; k];
                v[0] = t.cos();
                v[1] = t.sin();
                for (i, x) in v.iter_mut().enumerate().skip(2) {
                    *x = 0.5 / (i as f64);
                }
                v
            })
            .collect(),
    };
    let mut sampled_max: f64 = 0.0;
    for dir in &dirs {
        for j in 0..24 {
            let r = 0.05 * 1.35f64.powi(j);
            let beta: Vec<f64> = dir.iter().map(|x| x * r).collect();
            let b = plane.element(&beta);
            let nb = b.norm();
            let val = nb.powi(m as i32) * kernel.eval(b.as_slice()).norm();
            sampled_max = sampled_max.max(val);
        }
    }
    if sampled_max > constant * (1.0 + 1e-9) + 1e-300 {
        return Err(Error::Invalid(format!(
            "sampled decay {sampled_max:.6e} exceeds binomial constant {constant:.6e}"
        )));
    }
    let beta_constant = if k == 0 { constant } else { constant / plane.sigma_min().powi(m as i32) };
    Ok(DecayProfile { m, constant, beta_constant, sampled_max })
}

#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub initial: C64,
    pub evolved: C64,
    pub residual: f64,
    pub leakage: f64,
}

/// |⟨Ψ_t,Ψ_t⟩_{L^t} − ⟨Ψ₀,Ψ₀⟩_L| with Ψ_t by direct truncated evolution and L^t from the flow.
pub fn invariance_check(
    y: &FockVector,
    plane: &IsotropicPlane,
    path: &dyn GeneratorPath,
    t: f64,
    dt: f64,
    opts: &QuadratureOptions,
) -> Result<InvarianceReport> {
    let initial = inner_constrained(y, y, plane, opts)?.value();
    if t == 0.0 {
        return Ok(InvarianceReport { initial, evolved: initial, residual: 0.0, leakage: 0.0 });
    }
    let flow = integrate_flow(path, t, dt)?;
    let plane_t = evolve_plane(plane, &flow)?;
    let direct = propagate_direct(y, path, t, dt, 1e-6)?;
    let evolved = inner_constrained(&direct.state, &direct.state, &plane_t, opts)?.value();
    Ok(InvarianceReport { initial, evolved, residual: (evolved - initial).norm(), leakage: direct.state.leakage })
}
