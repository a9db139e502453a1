use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridWave, ShapeFunction};
use crate::error::{Error, Result};

/// Point (S, Q, P) of the extended phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketPoint {
    pub s: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// Tangent vector (δS, δQ, δP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketTangent {
    pub ds: f64,
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

/// Coordinate direction in the extended phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    S,
    Q(usize),
    P(usize),
}

impl Component {
    /// S, Q₁…Q_D, P₁…P_D.
    pub fn all(dim: usize) -> Vec<Component> {
        let mut v = vec![Component::S];
        v.extend((0..dim).map(Component::Q));
        v.extend((0..dim).map(Component::P));
        v
    }
}

impl PacketPoint {
    pub fn new(s: f64, q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() || q.is_empty() || q.len() > 2 {
            return Err(Error::Invalid("Q and P must share a dimension in 1..=2".into()));
        }
        if !s.is_finite() || q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("packet point has non-finite components".into()));
        }
        Ok(PacketPoint { s, q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn shifted(&self, t: &PacketTangent, eps: f64) -> PacketPoint {
        PacketPoint {
            s: self.s + eps * t.ds,
            q: self.q.iter().zip(&t.dq).map(|(a, b)| a + eps * b).collect(),
            p: self.p.iter().zip(&t.dp).map(|(a, b)| a + eps * b).collect(),
        }
    }
}

impl PacketTangent {
    pub fn zero(dim: usize) -> Self {
        PacketTangent { ds: 0.0, dq: vec![0.0; dim], dp: vec![0.0; dim] }
    }

    pub fn unit(dim: usize, c: Component) -> Self {
        let mut t = Self::zero(dim);
        match c {
            Component::S => t.ds = 1.0,
            Component::Q(a) => t.dq[a] = 1.0,
            Component::P(a) => t.dp[a] = 1.0,
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        PacketTangent { ds: s * self.ds, dq: self.dq.iter().map(|x| s * x).collect(), dp: self.dp.iter().map(|x| s * x).collect() }
    }
}

/// ω_X[δX] = −δS + P·δQ.
pub fn action_form(x: &PacketPoint, t: &PacketTangent) -> f64 {
    -t.ds + x.p.iter().zip(&t.dq).map(|(p, q)| p * q).sum::<f64>()
}

/// Ω[δX] f = (δP·ξ − δQ·p̂) f with p̂ = −i∂_ξ; independent of X.
pub fn operator_form(t: &PacketTangent, f: &ShapeFunction) -> ShapeFunction {
    f.omega_apply(&t.dp, &t.dq)
}

/// λ^{−D/4} e^{iS/λ} e^{iP(x−Q)/λ} f((x−Q)/√λ) sampled on `xgrid`.
pub fn k_lambda(x: &PacketPoint, f: &ShapeFunction, lambda: f64, xgrid: &Grid) -> Result<GridWave> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid("λ must be positive".into()));
    }
    let d = x.dim();
    if f.dim() != d || xgrid.dim != d {
        return Err(Error::Dimension { expected: d, got: xgrid.dim });
    }
    let sl = lambda.sqrt();
    let r = f.support_radius(1e-12) * sl;
    for a in 0..d {
        if x.q[a] - r < xgrid.lo[a] || x.q[a] + r > xgrid.hi(a) {
            return Err(Error::Invalid(format!("x-grid does not contain the packet support on axis {a}")));
        }
    }
    let xs: Vec<Vec<f64>> = (0..d).map(|a| xgrid.axis_coords(a).iter().map(|v| (v - x.q[a]) / sl).collect()).collect();
    let fv = f.interpolate(&xs);
    let pref = lambda.powf(-(d as f64) / 4.0);
    let values = (0..xgrid.len())
        .map(|i| {
            let p = xgrid.point(i);
            let ph = x.s + (0..d).map(|a| x.p[a] * (p[a] - x.q[a])).sum::<f64>();
            fv[i] * C64::from_polar(pref, ph / lambda)
        })
        .collect();
    Ok(GridWave { grid: xgrid.clone(), lambda, values })
}

/// w with K_{X'} f = K_X w, expressed on the ξ-grid of f:
/// w(ξ) = e^{i[(S'−S) + P'·(Q−Q')]/λ} e^{i(P'−P)·ξ/√λ} f(ξ + (Q−Q')/√λ).
pub fn frame_transfer(x: &PacketPoint, xp: &PacketPoint, f: &ShapeFunction, lambda: f64) -> ShapeFunction {
    let d = x.dim();
    let delta = PacketTangent {
        ds: xp.s - x.s,
        dq: (0..d).map(|a| xp.q[a] - x.q[a]).collect(),
        dp: (0..d).map(|a| xp.p[a] - x.p[a]).collect(),
    };
    frame_transfer_by(x, &delta, f, lambda)
}

/// `frame_transfer` from X to X + δ, with the increments taken exactly.
pub fn frame_transfer_by(x: &PacketPoint, delta: &PacketTangent, f: &ShapeFunction, lambda: f64) -> ShapeFunction {
    let sl = lambda.sqrt();
    let d = x.dim();
    let b: Vec<f64> = delta.dq.iter().map(|v| v / sl).collect();
    let m: Vec<f64> = delta.dp.iter().map(|v| v / sl).collect();
    let ph = delta.ds - (0..d).map(|a| (x.p[a] + delta.dp[a]) * delta.dq[a]).sum::<f64>();
    f.translate(&b).modulate(&m).scale(C64::from_polar(1.0, ph / lambda))
}

/// Relative residual ‖iλ D_h K f − K(ω[e] − √λ Ω[e]) f‖ / ‖(ω[e] − √λ Ω[e]) f‖ for the unit
/// direction e, with a central difference D_h.
///
/// The step is h in the packet's natural units: λh for S, √λ h for P, and
/// λh/max(|P_a|, √λ) for Q_a, so the residual is O(h²) uniformly in λ.
pub fn derivative_identity_residual(x: &PacketPoint, f: &ShapeFunction, lambda: f64, c: Component, h: f64) -> Result<f64> {
    if h < 1e-7 {
        return Err(Error::Invalid(format!("step {h:.1e} too small: difference quotient dominated by rounding")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Invalid("λ must be positive".into()));
    }
    let d = x.dim();
    let sl = lambda.sqrt();
    let step = match c {
        Component::S => lambda * h,
        Component::P(_) => sl * h,
        Component::Q(a) => lambda * h / x.p[a].abs().max(sl),
    };
    let e = PacketTangent::unit(d, c);
    let wp = frame_transfer_by(x, &e.scaled(step), f, lambda);
    let wm = frame_transfer_by(x, &e.scaled(-step), f, lambda);
    let diff = wp.axpy(C64::new(-1.0, 0.0), &wm)?.scale(C64::new(0.0, lambda / (2.0 * step)));
    let target = f.scale(C64::new(action_form(x, &e), 0.0)).axpy(C64::new(-sl, 0.0), &operator_form(&e, f))?;
    let tn = target.norm();
    let denom = if tn > 0.0 { tn } else { f.norm() };
    Ok(diff.distance(&target)? / denom)
}

/// ∂_iω_j − ∂_jω_i for ω = −dS + P·dQ.
pub fn action_form_curl(i: Component, j: Component) -> f64 {
    match (i, j) {
        (Component::Q(a), Component::P(b)) if a == b => -1.0,
        (Component::P(b), Component::Q(a)) if a == b => 1.0,
        _ => 0.0,
    }
}

/// ‖[Ω_i, Ω_j] f − sign·i(∂_iω_j − ∂_jω_i) f‖ / ‖f‖.
pub fn omega_commutator_residual(f: &ShapeFunction, i: Component, j: Component, sign: f64) -> Result<f64> {
    let d = f.dim();
    let ei = PacketTangent::unit(d, i);
    let ej = PacketTangent::unit(d, j);
    let oij = operator_form(&ei, &operator_form(&ej, f));
    let oji = operator_form(&ej, &operator_form(&ei, f));
    let comm = oij.axpy(C64::new(-1.0, 0.0), &oji)?;
    let expect = f.scale(C64::new(0.0, sign * action_form_curl(i, j)));
    Ok(comm.distance(&expect)? / f.norm())
}

/// The sign σ ∈ {+1, −1} for which [Ω_i, Ω_j] = σ i(∂_iω_j − ∂_jω_i) holds on f, with both residuals.
pub fn omega_commutator_sign(f: &ShapeFunction) -> Result<(f64, f64, f64)> {
    let (q, p) = (Component::Q(0), Component::P(0));
    let rp = omega_commutator_residual(f, q, p, 1.0)?;
    let rm = omega_commutator_residual(f, q, p, -1.0)?;
    Ok(if rp <= rm { (1.0, rp, rm) } else { (-1.0, rm, rp) })
}
