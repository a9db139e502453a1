use std::sync::Arc;

use nalgebra::DVector;

use super::algebra::{LieAlgebra, QuadHamiltonian};
use crate::error::{Error, Result};
use crate::packets::{PacketPoint, PacketTangent};

/// Vector field (Ṡ, Q̇, Ṗ) of the algebra element with coefficients `a` at X.
pub type VectorField = Arc<dyn Fn(&[f64], &PacketPoint) -> PacketTangent + Send + Sync>;

const BLOW_UP: f64 = 1e12;

/// Flows u_g on the extended phase space (S, Q, P), integrated by RK4.
#[derive(Clone)]
pub struct ClassicalSystem {
    pub dim: usize,
    pub m: usize,
    pub field: VectorField,
    /// Largest RK4 step.
    pub dt: f64,
    /// Flows are affine in (Q, P) with quadratic action, so tangent maps are exact
    /// difference quotients at any step.
    pub affine: bool,
}

impl std::fmt::Debug for ClassicalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalSystem").field("dim", &self.dim).field("m", &self.m).field("dt", &self.dt).finish()
    }
}

fn zeta(x: &PacketPoint) -> DVector<f64> {
    DVector::from_iterator(2 * x.dim(), x.q.iter().chain(&x.p).cloned())
}

/// Q̇ = ∂h/∂P, Ṗ = −∂h/∂Q, Ṡ = P·Q̇ − h.
pub fn hamiltonian_field(h: &QuadHamiltonian, x: &PacketPoint) -> PacketTangent {
    let d = h.dim;
    let z = zeta(x);
    let g = h.grad(&z);
    let dq: Vec<f64> = (0..d).map(|a| g[d + a]).collect();
    let dp: Vec<f64> = (0..d).map(|a| -g[a]).collect();
    let ds = x.p.iter().zip(&dq).map(|(p, v)| p * v).sum::<f64>() - h.value(&z);
    PacketTangent { ds, dq, dp }
}

fn add_scaled(x: &PacketPoint, k: &PacketTangent, s: f64) -> PacketPoint {
    x.shifted(k, s)
}

impl ClassicalSystem {
    /// Hamiltonian flows of an algebra given by quadratic Hamiltonians.
    pub fn hamiltonian(alg: &LieAlgebra, dt: f64) -> Result<Self> {
        let hams = alg
            .hamiltonians
            .clone()
            .ok_or_else(|| Error::Invalid("algebra carries no classical Hamiltonians".into()))?;
        let dim = hams[0].dim;
        let m = hams.len();
        let field: VectorField = Arc::new(move |a: &[f64], x: &PacketPoint| {
            let h = a.iter().zip(&hams).fold(QuadHamiltonian::zero(dim), |acc, (c, h)| acc.add(&h.scaled(*c)));
            hamiltonian_field(&h, x)
        });
        let mut sys = Self::from_field(dim, m, field, dt)?;
        sys.affine = true;
        Ok(sys)
    }

    /// Flows of an arbitrary vector field linear in the algebra coefficients.
    pub fn from_field(dim: usize, m: usize, field: VectorField, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Invalid("flow step must be positive".into()));
        }
        Ok(ClassicalSystem { dim, m, field, dt, affine: false })
    }

    fn rk4(&self, a: &[f64], x: &PacketPoint, h: f64) -> PacketPoint {
        let k1 = (self.field)(a, x);
        let k2 = (self.field)(a, &add_scaled(x, &k1, 0.5 * h));
        let k3 = (self.field)(a, &add_scaled(x, &k2, 0.5 * h));
        let k4 = (self.field)(a, &add_scaled(x, &k3, h));
        let mut y = x.clone();
        for (k, w) in [(k1, 1.0), (k2, 2.0), (k3, 2.0), (k4, 1.0)] {
            y = add_scaled(&y, &k, w * h / 6.0);
        }
        y
    }

    /// u_{g_A(t)}X; negative t runs the flow backwards.
    pub fn flow(&self, a: &[f64], t: f64, x: &PacketPoint) -> Result<PacketPoint> {
        if a.len() != self.m {
            return Err(Error::Dimension { expected: self.m, got: a.len() });
        }
        if x.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.dim() });
        }
        if t == 0.0 {
            return Ok(x.clone());
        }
        let steps = (t.abs() / self.dt).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut y = x.clone();
        for _ in 0..steps {
            y = self.rk4(a, &y, h);
            let big = y.q.iter().chain(&y.p).map(|v| v.abs()).fold(y.s.abs(), f64::max);
            if !big.is_finite() || big > BLOW_UP {
                return Err(Error::NonConvergent(format!("classical flow blew up (|X| = {big:.3e})")));
            }
        }
        Ok(y)
    }

    /// u_{g_A(t)}* δX by central differences.
    pub fn tangent_map(&self, a: &[f64], t: f64, x: &PacketPoint, dx: &PacketTangent) -> Result<PacketTangent> {
        let eps = if self.affine { 1.0 } else { 1e-5 };
        let yp = self.flow(a, t, &x.shifted(dx, eps))?;
        let ym = self.flow(a, t, &x.shifted(dx, -eps))?;
        Ok(PacketTangent {
            ds: (yp.s - ym.s) / (2.0 * eps),
            dq: yp.q.iter().zip(&ym.q).map(|(p, m)| (p - m) / (2.0 * eps)).collect(),
            dp: yp.p.iter().zip(&ym.p).map(|(p, m)| (p - m) / (2.0 * eps)).collect(),
        })
    }
}

/// Central difference (F(u_{g_A(h)}X) − F(u_{g_A(−h)}X)) / 2h; the single
/// implementation of δ[A] used by every check.
pub fn delta<T, F>(sys: &ClassicalSystem, a: &[f64], x: &PacketPoint, h: f64, f: F) -> Result<T>
where
    T: Differentiable,
    F: Fn(&PacketPoint) -> Result<T>,
{
    let fp = f(&sys.flow(a, h, x)?)?;
    let fm = f(&sys.flow(a, -h, x)?)?;
    Ok(fp.quotient(fm, 2.0 * h))
}

/// Values that admit a difference quotient (self − other)/width.
pub trait Differentiable {
    fn quotient(self, other: Self, width: f64) -> Self;
}

impl Differentiable for f64 {
    fn quotient(self, other: Self, width: f64) -> Self {
        (self - other) / width
    }
}

impl Differentiable for DVector<f64> {
    fn quotient(self, other: Self, width: f64) -> Self {
        (self - other) / width
    }
}

impl Differentiable for crate::linalg::CVec {
    fn quotient(self, other: Self, width: f64) -> Self {
        (self - other).map(|z| z / width)
    }
}

impl Differentiable for crate::linalg::CMat {
    fn quotient(self, other: Self, width: f64) -> Self {
        (self - other).map(|z| z / width)
    }
}

/// Coordinate functionals (S, Q₁…Q_D, P₁…P_D).
fn coords(x: &PacketPoint) -> Result<DVector<f64>> {
    Ok(DVector::from_iterator(1 + 2 * x.dim(), std::iter::once(x.s).chain(x.q.iter().cloned()).chain(x.p.iter().cloned())))
}

/// max over coordinate functionals F of |([δ[A], δ[B]] + δ[[A;B]])F(X)|.
pub fn check_vector_field_algebra(
    sys: &ClassicalSystem,
    alg: &LieAlgebra,
    a: &[f64],
    b: &[f64],
    x: &PacketPoint,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Invalid("step must be positive".into()));
    }
    let dab = delta(sys, a, x, h, |y| delta(sys, b, y, h, coords))?;
    let dba = delta(sys, b, x, h, |y| delta(sys, a, y, h, coords))?;
    let c = alg.bracket(a, b);
    let dc = delta(sys, &c, x, h, coords)?;
    Ok((dab - dba + dc).amax())
}

/// |d/dτ ω_{u_τX}[u_τ*δX]| at τ = 0 with ω = −dS + P·dQ.
pub fn action_form_residual(sys: &ClassicalSystem, a: &[f64], x: &PacketPoint, dx: &PacketTangent, h: f64) -> Result<f64> {
    let val = |t: f64| -> Result<f64> {
        let y = sys.flow(a, t, x)?;
        let v = sys.tangent_map(a, t, x, dx)?;
        Ok(crate::packets::action_form(&y, &v))
    };
    Ok(((val(h)? - val(-h)?) / (2.0 * h)).abs())
}
