use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forms::{action_form, frame_transfer, k_lambda, operator_form, PacketPoint, PacketTangent};
use super::grid::{Grid, GridWave, ShapeFunction};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, loglog_slope, tensor_sum};

pub type PointMap = Arc<dyn Fn(&[f64]) -> PacketPoint + Send + Sync>;
pub type FiberMap = Arc<dyn Fn(&[f64]) -> ShapeFunction + Send + Sync>;

/// One parameter axis of a manifold: n trapezoid nodes on [lo, hi), periodic or not.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamAxis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub periodic: bool,
}

impl ParamAxis {
    fn nodes(&self, n: usize) -> Vec<(f64, f64)> {
        let l = self.hi - self.lo;
        if self.periodic {
            (0..n).map(|j| (self.lo + j as f64 * l / n as f64, l / n as f64)).collect()
        } else {
            let h = l / (n - 1) as f64;
            (0..n)
                .map(|j| (self.lo + j as f64 * h, if j == 0 || j == n - 1 { 0.5 * h } else { h }))
                .collect()
        }
    }

    fn wrap(&self, a: f64) -> f64 {
        if self.periodic {
            let l = self.hi - self.lo;
            self.lo + (a - self.lo).rem_euclid(l)
        } else {
            a
        }
    }
}

/// k-parameter family X(α) = (S(α), Q(α), P(α)), k ≤ 2.
#[derive(Clone)]
pub struct IsotropicManifold {
    pub axes: Vec<ParamAxis>,
    pub dim: usize,
    pub map: PointMap,
    /// dΣ/dα, used when the manifold carries a composed Fock state.
    pub density: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

const DIFF_STEP: f64 = 1e-3;

impl IsotropicManifold {
    pub fn new(axes: Vec<ParamAxis>, dim: usize, map: PointMap) -> Result<Self> {
        if axes.len() > 2 {
            return Err(Error::Invalid("manifold dimension k must be ≤ 2".into()));
        }
        if axes.iter().any(|a| a.n < 4 || a.n % 2 != 0 || !(a.hi > a.lo)) {
            return Err(Error::Invalid("parameter axes need an even n ≥ 4 and hi > lo".into()));
        }
        Ok(IsotropicManifold { axes, dim, map, density: Arc::new(|_| 1.0) })
    }

    /// Zero-dimensional manifold at a single point.
    pub fn point(x: PacketPoint) -> Self {
        let dim = x.dim();
        IsotropicManifold { axes: vec![], dim, map: Arc::new(move |_| x.clone()), density: Arc::new(|_| 1.0) }
    }

    pub fn k(&self) -> usize {
        self.axes.len()
    }

    pub fn at(&self, alpha: &[f64]) -> PacketPoint {
        (self.map)(alpha)
    }

    /// Quadrature nodes and weights; `halve` uses every other node.
    pub fn nodes(&self, halve: bool) -> Vec<(Vec<f64>, f64)> {
        let mut out = vec![(Vec::new(), 1.0)];
        for ax in &self.axes {
            let n = if halve { ax.n / 2 } else { ax.n };
            let pts = ax.nodes(n);
            out = out
                .into_iter()
                .flat_map(|(a, w)| {
                    pts.iter().map(move |(x, wx)| {
                        let mut b = a.clone();
                        b.push(*x);
                        (b, w * wx)
                    })
                })
                .collect();
        }
        out
    }

    /// ∂X/∂α_s by a five-point stencil.
    pub fn tangent(&self, alpha: &[f64], s: usize) -> PacketTangent {
        let h = DIFF_STEP;
        let at = |t: f64| {
            let mut a = alpha.to_vec();
            a[s] += t;
            self.at(&a)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
        let st = |f: &dyn Fn(&PacketPoint) -> f64| (f(&m2) - 8.0 * f(&m1) + 8.0 * f(&p1) - f(&p2)) / (12.0 * h);
        PacketTangent {
            ds: st(&|x| x.s),
            dq: (0..self.dim).map(|a| st(&|x: &PacketPoint| x.q[a])).collect(),
            dp: (0..self.dim).map(|a| st(&|x: &PacketPoint| x.p[a])).collect(),
        }
    }

    /// ω_{X(α)}[∂X/∂α_s].
    pub fn omega_tangent(&self, alpha: &[f64], s: usize) -> f64 {
        action_form(&self.at(alpha), &self.tangent(alpha, s))
    }

    /// max over nodes and directions of |ω[∂X/∂α_s]|.
    pub fn isotropy_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for (a, _) in self.nodes(false) {
            for s in 0..self.k() {
                r = r.max(self.omega_tangent(&a, s).abs());
            }
        }
        r
    }
}

/// Superposition of packets over a manifold with fiber shapes g(α).
#[derive(Clone)]
pub struct ComposedPacket {
    pub manifold: IsotropicManifold,
    pub fiber: FiberMap,
}

/// C_λ = λ^{−k/2−D/4}.
pub fn c_lambda(k: usize, dim: usize, lambda: f64) -> f64 {
    lambda.powf(-(k as f64) / 2.0 - dim as f64 / 4.0)
}

/// C_λ ∫dα e^{iS/λ} e^{iP(x−Q)/λ} g(α, (x−Q)/√λ) by trapezoid quadrature over the α-grid,
/// checked against the half grid.
pub fn compose_packet(cp: &ComposedPacket, lambda: f64, xgrid: &Grid, tol: f64) -> Result<GridWave> {
    let m = &cp.manifold;
    let pref = c_lambda(m.k(), m.dim, lambda) * lambda.powf(m.dim as f64 / 4.0);
    let sum = |halve: bool| -> Result<Vec<C64>> {
        let nodes = m.nodes(halve);
        let parts: Vec<Result<Vec<C64>>> = nodes
            .par_iter()
            .map(|(a, w)| Ok(k_lambda(&m.at(a), &(cp.fiber)(a), lambda, xgrid)?.values.iter().map(|v| v * (w * pref)).collect()))
            .collect();
        let mut acc = vec![C64::new(0.0, 0.0); xgrid.len()];
        for p in parts {
            for (a, v) in acc.iter_mut().zip(p?) {
                *a += v;
            }
        }
        Ok(acc)
    };
    let full = GridWave { grid: xgrid.clone(), lambda, values: sum(false)? };
    if m.k() > 0 {
        let half = GridWave { grid: xgrid.clone(), lambda, values: sum(true)? };
        let rel = full.distance(&half)? / full.norm().max(1e-300);
        if rel > tol {
            return Err(Error::NonConvergent(format!("α-grid too coarse: half-grid change {rel:.3e}")));
        }
    }
    Ok(full)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComposedInner {
    pub lambda: f64,
    pub direct: [f64; 2],
    pub asymptotic: [f64; 2],
    pub relative_error: f64,
    /// Largest change under the quadrature self-checks, relative to the summed
    /// moduli of the exact double integral.
    pub quadrature_delta: f64,
}

impl ComposedInner {
    pub fn direct(&self) -> C64 {
        C64::new(self.direct[0], self.direct[1])
    }
    pub fn asymptotic(&self) -> C64 {
        C64::new(self.asymptotic[0], self.asymptotic[1])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ComposedQuadrature {
    /// Gauss–Legendre points per unit panel in β for the exact double integral.
    pub panel_points: usize,
    pub panel_width: f64,
    /// Initial Gauss–Legendre order per axis for the β-integral of the limit form.
    pub limit_order: usize,
    pub tol: f64,
}

impl Default for ComposedQuadrature {
    fn default() -> Self {
        ComposedQuadrature { panel_points: 8, panel_width: 1.0, limit_order: 32, tol: 1e-8 }
    }
}

fn radii(cp: &ComposedPacket) -> (f64, f64) {
    let mut r: f64 = 0.0;
    let mut k: f64 = 0.0;
    for (a, _) in cp.manifold.nodes(true) {
        let g = (cp.fiber)(&a);
        r = r.max(g.support_radius(1e-13));
        k = k.max(g.momentum_radius(1e-13));
    }
    (r, k)
}

fn same_manifold(a: &IsotropicManifold, b: &IsotropicManifold) -> bool {
    a.axes == b.axes && a.dim == b.dim && Arc::ptr_eq(&a.map, &b.map)
}

/// β-ranges for the exact double integral at α.
fn beta_ranges(m: &IsotropicManifold, alpha: &[f64], sl: f64) -> Vec<(f64, f64)> {
    m.axes
        .iter()
        .zip(alpha)
        .map(|(ax, a)| {
            if ax.periodic {
                let l = ax.hi - ax.lo;
                (-0.5 * l / sl, 0.5 * l / sl)
            } else {
                ((ax.lo - a) / sl, (ax.hi - a) / sl)
            }
        })
        .collect()
}

fn panel_nodes(lo: f64, hi: f64, width: f64, points: usize) -> Vec<(f64, f64)> {
    let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    let rule = gauss_legendre(points);
    let mut out = Vec::with_capacity(panels * points);
    for j in 0..panels {
        let r = rule.mapped(lo + j as f64 * h, lo + (j + 1) as f64 * h);
        out.extend(r.nodes.into_iter().zip(r.weights));
    }
    out
}

/// ∫dβ over the full manifold of (g₁(α), W_{X(α)←X(α+√λβ)} g₂(α+√λβ)) for one α.
fn direct_alpha(
    cp1: &ComposedPacket,
    cp2: &ComposedPacket,
    alpha: &[f64],
    lambda: f64,
    reach: (f64, f64),
    q: &ComposedQuadrature,
    points: usize,
) -> (C64, f64) {
    let m = &cp1.manifold;
    let sl = lambda.sqrt();
    let x = m.at(alpha);
    let g1 = (cp1.fiber)(alpha);
    let ranges = beta_ranges(m, alpha, sl);
    let axes_nodes: Vec<Vec<(f64, f64)>> = ranges.iter().map(|(lo, hi)| panel_nodes(*lo, *hi, q.panel_width, points)).collect();
    let mut combos: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for nodes in &axes_nodes {
        combos = combos
            .into_iter()
            .flat_map(|(b, w)| {
                nodes.iter().map(move |(x, wx)| {
                    let mut c = b.clone();
                    c.push(*x);
                    (c, w * wx)
                })
            })
            .collect();
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut mass = 0.0;
    for (beta, w) in combos {
        let gamma: Vec<f64> = m.axes.iter().zip(alpha).zip(&beta).map(|((ax, a), b)| ax.wrap(a + sl * b)).collect();
        let xp = m.at(&gamma);
        let far = (0..m.dim).any(|d| {
            (xp.q[d] - x.q[d]).abs() / sl > reach.0 || (xp.p[d] - x.p[d]).abs() / sl > reach.1
        });
        if far {
            continue;
        }
        let g2 = (cp2.fiber)(&gamma);
        let w2 = frame_transfer(&x, &xp, &g2, lambda);
        let v = g1.inner(&w2).expect("fibers share a grid") * w;
        acc += v;
        mass += v.norm();
    }
    (acc, mass)
}

/// (g₁, ∫dβ e^{iβ_sΩ[∂_sX]} g₂) at one α over the decay box.
fn limit_alpha(m: &IsotropicManifold, g1: &ShapeFunction, g2: &ShapeFunction, alpha: &[f64], reach: (f64, f64), order: usize) -> Result<C64> {
    let k = m.k();
    if k == 0 {
        return g1.inner(g2);
    }
    let ts: Vec<PacketTangent> = (0..k).map(|s| m.tangent(alpha, s)).collect();
    let d = m.dim;
    let mat = DMatrix::from_fn(2 * d, k, |r, s| if r < d { ts[s].dq[r] } else { ts[s].dp[r - d] });
    let sigma = mat.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
    if sigma < 1e-12 {
        return Err(Error::Invalid("tangent directions degenerate: β-integrand does not decay".into()));
    }
    let r = (reach.0.max(reach.1) + 1.0) / sigma;
    let f = |beta: &[f64]| -> C64 {
        let a: Vec<f64> = (0..d).map(|i| (0..k).map(|s| beta[s] * ts[s].dp[i]).sum()).collect();
        let b: Vec<f64> = (0..d).map(|i| (0..k).map(|s| beta[s] * ts[s].dq[i]).sum()).collect();
        g1.inner(&g2.weyl(&a, &b)).expect("fibers share a grid")
    };
    Ok(tensor_sum(&gauss_legendre(order).mapped(-r, r), k, &f))
}

/// Exact L² inner product of two composed waves and its small-λ limit, both carrying
/// the prefactor C_λ² λ^{(k+D)/2}.
pub fn inner_composed(cp1: &ComposedPacket, cp2: &ComposedPacket, lambda: f64, q: &ComposedQuadrature) -> Result<ComposedInner> {
    Ok(inner_composed_sweep(cp1, cp2, &[lambda], q)?.remove(0))
}

/// `inner_composed` over several λ; the λ-free limit integral is evaluated once.
pub fn inner_composed_sweep(cp1: &ComposedPacket, cp2: &ComposedPacket, lambdas: &[f64], q: &ComposedQuadrature) -> Result<Vec<ComposedInner>> {
    if !same_manifold(&cp1.manifold, &cp2.manifold) {
        return Err(Error::Invalid("composed packets must share a manifold".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Invalid("λ must be positive".into()));
    }
    let m = &cp1.manifold;
    let k = m.k();
    let (r1, k1) = radii(cp1);
    let (r2, k2) = radii(cp2);
    let reach = (r1 + r2, k1 + k2);
    let limit = limit_integral(cp1, cp2, reach, q)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let pref = c_lambda(k, m.dim, lambda).powi(2) * lambda.powf((k + m.dim) as f64 / 2.0);
            let (direct, delta) = direct_integral(cp1, cp2, lambda, reach, q)?;
            let (direct, asym) = (direct * pref, limit * pref);
            let rel = (direct - asym).norm() / asym.norm().max(1e-300);
            Ok(ComposedInner {
                lambda,
                direct: [direct.re, direct.im],
                asymptotic: [asym.re, asym.im],
                relative_error: rel,
                quadrature_delta: delta,
            })
        })
        .collect()
}

/// ∫dα∫dβ of the exact overlap without prefactor, with its self-check change.
fn direct_integral(cp1: &ComposedPacket, cp2: &ComposedPacket, lambda: f64, reach: (f64, f64), q: &ComposedQuadrature) -> Result<(C64, f64)> {
    let m = &cp1.manifold;
    let k = m.k();
    // Returns the sum and the summed moduli, the scale for the self-check.
    let sum = |halve: bool, points: usize| -> (C64, f64) {
        let nodes = m.nodes(halve);
        let parts: Vec<(C64, f64)> = nodes
            .par_iter()
            .map(|(a, w)| {
                if k == 0 {
                    let v = (cp1.fiber)(a).inner(&(cp2.fiber)(a)).expect("fibers share a grid");
                    (v, v.norm())
                } else {
                    let (v, s) = direct_alpha(cp1, cp2, a, lambda, reach, q, points);
                    (v * w, s * w)
                }
            })
            .collect();
        (parts.iter().map(|p| p.0).sum(), parts.iter().map(|p| p.1).sum())
    };
    let (direct, mass) = sum(false, q.panel_points);
    if k == 0 {
        return Ok((direct, 0.0));
    }
    let (d2, _) = sum(false, 2 * q.panel_points);
    let (dh, _) = sum(true, q.panel_points);
    let scale = mass.max(1e-300);
    let delta = ((d2 - direct).norm() / scale).max((dh - direct).norm() / scale);
    if delta > 10.0 * q.tol {
        return Err(Error::NonConvergent(format!("direct quadrature self-check failed at λ = {lambda} (change {delta:.3e})")));
    }
    Ok((direct, delta))
}

/// ∫dα (g₁, ∫dβ e^{iβΩ[∂X]} g₂) without prefactor, with order doubling.
fn limit_integral(cp1: &ComposedPacket, cp2: &ComposedPacket, reach: (f64, f64), q: &ComposedQuadrature) -> Result<C64> {
    let m = &cp1.manifold;
    let eval = |order: usize| -> Result<C64> {
        let nodes = m.nodes(false);
        let parts: Vec<Result<C64>> = nodes
            .par_iter()
            .map(|(a, w)| Ok(limit_alpha(m, &(cp1.fiber)(a), &(cp2.fiber)(a), a, reach, order)? * w))
            .collect();
        parts.into_iter().sum()
    };
    let mut order = q.limit_order;
    let mut value = eval(order)?;
    if m.k() == 0 {
        return Ok(value);
    }
    loop {
        let next = eval(2 * order)?;
        let ch = (next - value).norm() / next.norm().max(1e-300);
        value = next;
        order *= 2;
        if ch <= q.tol {
            return Ok(value);
        }
        if order > 1024 {
            return Err(Error::NonConvergent(format!("β-quadrature box check failed (change {ch:.3e})")));
        }
    }
}

pub type GaugeMap = Arc<dyn Fn(&[f64]) -> Vec<ShapeFunction> + Send + Sync>;

/// g ← g + Σ_s Ω[∂X/∂α_s] χ_s.
pub fn gauge_transform(cp: &ComposedPacket, chi: GaugeMap) -> ComposedPacket {
    let m = cp.manifold.clone();
    let fiber = cp.fiber.clone();
    let m2 = m.clone();
    let new_fiber: FiberMap = Arc::new(move |a: &[f64]| {
        let mut g = fiber(a);
        for (s, c) in chi(a).iter().enumerate().take(m2.k()) {
            let t = m2.tangent(a, s);
            g = g.axpy(C64::new(1.0, 0.0), &operator_form(&t, c)).expect("gauge shapes share the fiber grid");
        }
        g
    });
    ComposedPacket { manifold: m, fiber: new_fiber }
}

/// f(α, ξ) = ∫dβ e^{iβ_sΩ[∂X/∂α_s]} g(α, ξ), with the β-box sized so every translated
/// copy has left the ξ-window.
pub fn project_fiber(cp: &ComposedPacket, alpha: &[f64], tol: f64) -> Result<ShapeFunction> {
    let m = &cp.manifold;
    let g = (cp.fiber)(alpha);
    let k = m.k();
    if k == 0 {
        return Ok(g);
    }
    let d = m.dim;
    let ts: Vec<PacketTangent> = (0..k).map(|s| m.tangent(alpha, s)).collect();
    let qmat = DMatrix::from_fn(d, k, |r, s| ts[s].dq[r]);
    let sigma = if d < k { 0.0 } else { qmat.singular_values().iter().cloned().fold(f64::INFINITY, f64::min) };
    if sigma < 1e-10 {
        return Err(Error::Invalid("β-integrand non-decaying: ∂Q/∂α degenerate (germ condition violated)".into()));
    }
    let half: f64 = (0..d).map(|a| (g.grid.hi(a) - g.grid.lo[a]) / 2.0).fold(0.0, f64::max);
    let r = (2.0 * half + g.support_radius(1e-13)) / sigma;
    let eval = |order: usize| -> ShapeFunction {
        let rule = gauss_legendre(order).mapped(-r, r);
        let n = rule.len();
        let total = n.pow(k as u32);
        let parts: Vec<ShapeFunction> = (0..total)
            .into_par_iter()
            .map(|mut idx| {
                let mut beta = vec![0.0; k];
                let mut w = 1.0;
                for b in beta.iter_mut() {
                    *b = rule.nodes[idx % n];
                    w *= rule.weights[idx % n];
                    idx /= n;
                }
                let a: Vec<f64> = (0..d).map(|i| (0..k).map(|s| beta[s] * ts[s].dp[i]).sum()).collect();
                let b: Vec<f64> = (0..d).map(|i| (0..k).map(|s| beta[s] * ts[s].dq[i]).sum()).collect();
                g.weyl(&a, &b).scale(C64::new(w, 0.0))
            })
            .collect();
        let mut acc = ShapeFunction::zeros(&g.grid);
        for p in parts {
            acc = acc.axpy(C64::new(1.0, 0.0), &p).expect("same grid");
        }
        acc
    };
    let mut order = 64;
    let mut prev = eval(order);
    loop {
        let next = eval(2 * order);
        let ch = next.distance(&prev)? / next.norm().max(1e-300);
        order *= 2;
        if ch <= tol {
            return Ok(next);
        }
        if order > 2048 {
            return Err(Error::NonConvergent(format!("fiber projection did not settle (change {ch:.3e})")));
        }
        prev = next;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub lambdas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Fitted log-log slope; absent when the expansion is exact to rounding.
    pub slope: Option<f64>,
    pub exact: bool,
}

/// ‖K_{X(α+√λβ)} g − e^{−(i/√λ)ω[∂X]β − (i/2)ββ∂(ω[∂X])} K_{X(α)} e^{iβΩ[∂X]} g‖/‖g‖ over λ.
pub fn expansion_check(m: &IsotropicManifold, alpha: &[f64], g: &ShapeFunction, beta: &[f64], lambdas: &[f64]) -> Result<ExpansionReport> {
    if lambdas.len() < 3 {
        return Err(Error::Invalid("λ-sweep needs at least 3 points to fit a slope".into()));
    }
    let k = m.k();
    if beta.len() != k {
        return Err(Error::Dimension { expected: k, got: beta.len() });
    }
    let d = m.dim;
    let x = m.at(alpha);
    let ts: Vec<PacketTangent> = (0..k).map(|s| m.tangent(alpha, s)).collect();
    let w1: f64 = (0..k).map(|s| action_form(&x, &ts[s]) * beta[s]).sum();
    let h = DIFF_STEP;
    let mut w2 = 0.0;
    for a in 0..k {
        for c in 0..k {
            let at = |t: f64| {
                let mut al = alpha.to_vec();
                al[c] += t;
                m.omega_tangent(&al, a)
            };
            let der = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
            w2 += beta[a] * beta[c] * der;
        }
    }
    let av: Vec<f64> = (0..d).map(|i| (0..k).map(|s| beta[s] * ts[s].dp[i]).sum()).collect();
    let bv: Vec<f64> = (0..d).map(|i| (0..k).map(|s| beta[s] * ts[s].dq[i]).sum()).collect();
    let rhs_shape = g.weyl(&av, &bv);
    let gn = g.norm();
    let mut errors = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let sl = lam.sqrt();
        let shifted: Vec<f64> = alpha.iter().zip(beta).map(|(a, b)| a + sl * b).collect();
        let lhs = frame_transfer(&x, &m.at(&shifted), g, lam);
        let phase = C64::from_polar(1.0, -w1 / sl - 0.5 * w2);
        errors.push(lhs.distance(&rhs_shape.scale(phase))? / gn);
    }
    let exact = errors.iter().all(|e| *e < 1e-12);
    let slope = if exact { None } else { loglog_slope(lambdas, &errors) };
    Ok(ExpansionReport { lambdas: lambdas.to_vec(), errors, slope, exact })
}
