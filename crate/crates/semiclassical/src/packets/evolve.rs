use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::forms::PacketPoint;
use super::grid::{spectral_apply, GridWave, ShapeFunction};
use crate::error::{Error, Result};
use crate::quadrature::loglog_slope;

/// Polynomial potential Σ c x₀^{e₀} x₁^{e₁} of total degree ≤ 4 in D ≤ 2 variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub dim: usize,
    pub terms: Vec<(f64, [u32; 2])>,
}

fn mono(x: &[f64], e: [u32; 2]) -> f64 {
    let x1 = if x.len() > 1 { x[1] } else { 0.0 };
    x[0].powi(e[0] as i32) * if e[1] == 0 { 1.0 } else { x1.powi(e[1] as i32) }
}

impl Potential {
    pub fn new(dim: usize, terms: Vec<(f64, [u32; 2])>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Invalid(format!("potential dimension {dim} not in 1..=2")));
        }
        for (_, e) in &terms {
            if e[0] + e[1] > 4 {
                return Err(Error::Invalid("potential degree exceeds 4".into()));
            }
            if dim == 1 && e[1] > 0 {
                return Err(Error::Invalid("second variable used in a one-dimensional potential".into()));
            }
        }
        Ok(Potential { dim, terms })
    }

    /// ½|x|² + c₄ Σ x_a⁴.
    pub fn anharmonic(dim: usize, c4: f64) -> Self {
        let mut terms = vec![(0.5, [2, 0]), (c4, [4, 0])];
        if dim == 2 {
            terms.push((0.5, [0, 2]));
            terms.push((c4, [0, 4]));
        }
        Potential { dim, terms }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, e)| c * mono(x, *e)).sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| {
                self.terms
                    .iter()
                    .filter(|(_, e)| e[a] > 0)
                    .map(|(c, e)| {
                        let mut d = *e;
                        d[a] -= 1;
                        c * e[a] as f64 * mono(x, d)
                    })
                    .sum()
            })
            .collect()
    }

    pub fn hessian(&self, x: &[f64]) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for a in 0..self.dim {
            for b in 0..self.dim {
                h[a][b] = self
                    .terms
                    .iter()
                    .map(|(c, e)| {
                        let mut d = *e;
                        if d[a] == 0 {
                            return 0.0;
                        }
                        let f1 = d[a] as f64;
                        d[a] -= 1;
                        if d[b] == 0 {
                            return 0.0;
                        }
                        let f2 = d[b] as f64;
                        d[b] -= 1;
                        c * f1 * f2 * mono(x, d)
                    })
                    .sum();
            }
        }
        h
    }
}

fn classical_rhs(pot: &Potential, x: &PacketPoint) -> PacketPoint {
    let g = pot.grad(&x.q);
    let p2: f64 = x.p.iter().map(|p| p * p).sum();
    PacketPoint { s: 0.5 * p2 - pot.value(&x.q), q: x.p.clone(), p: g.iter().map(|v| -v).collect() }
}

fn axpy_point(x: &PacketPoint, s: f64, d: &PacketPoint) -> PacketPoint {
    PacketPoint {
        s: x.s + s * d.s,
        q: x.q.iter().zip(&d.q).map(|(a, b)| a + s * b).collect(),
        p: x.p.iter().zip(&d.p).map(|(a, b)| a + s * b).collect(),
    }
}

/// One RK4 step of Q̇ = P, Ṗ = −∇V, Ṡ = |P|²/2 − V.
pub fn classical_step(pot: &Potential, x: &PacketPoint, dt: f64) -> PacketPoint {
    let k1 = classical_rhs(pot, x);
    let k2 = classical_rhs(pot, &axpy_point(x, dt / 2.0, &k1));
    let k3 = classical_rhs(pot, &axpy_point(x, dt / 2.0, &k2));
    let k4 = classical_rhs(pot, &axpy_point(x, dt, &k3));
    let mut y = axpy_point(x, dt / 6.0, &k1);
    y = axpy_point(&y, dt / 3.0, &k2);
    y = axpy_point(&y, dt / 3.0, &k3);
    axpy_point(&y, dt / 6.0, &k4)
}

fn step_count(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::Invalid("need t ≥ 0 and dt > 0".into()));
    }
    let n = (t / dt).ceil().max(1.0) as usize;
    Ok((n, t / n as f64))
}

pub fn classical_flow(pot: &Potential, x0: &PacketPoint, t: f64, dt: f64) -> Result<PacketPoint> {
    let (n, h) = step_count(t, dt)?;
    let mut x = x0.clone();
    for _ in 0..n {
        x = classical_step(pot, &x, h);
    }
    Ok(x)
}

const RESOLUTION_TOL: f64 = 1e-10;

fn check_resolution(psi: &GridWave, when: &str) -> Result<()> {
    let tail = psi.spectral_tail();
    if tail > RESOLUTION_TOL {
        return Err(Error::Invalid(format!("x-grid under-resolves the wave {when} (spectral tail {tail:.3e})")));
    }
    Ok(())
}

/// Strang split-step for iλψ_t = (−λ²Δ/2 + V)ψ on the periodic x-grid.
pub fn splitstep_evolve(psi0: &GridWave, pot: &Potential, t: f64, dt: f64) -> Result<GridWave> {
    if pot.dim != psi0.grid.dim {
        return Err(Error::Dimension { expected: psi0.grid.dim, got: pot.dim });
    }
    check_resolution(psi0, "initially")?;
    let (n, h) = step_count(t, dt)?;
    let lam = psi0.lambda;
    let grid = &psi0.grid;
    let half: Vec<C64> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            C64::from_polar(1.0, -pot.value(&p[..grid.dim]) * h / (2.0 * lam))
        })
        .collect();
    let mut v = psi0.values.clone();
    for _ in 0..n {
        v.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
        v = spectral_apply(&v, grid, |k| {
            let k2: f64 = k.iter().map(|x| x * x).sum();
            C64::from_polar(1.0, -lam * k2 * h / 2.0)
        });
        v.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
    }
    let out = GridWave { grid: grid.clone(), lambda: lam, values: v };
    check_resolution(&out, "after evolution")?;
    Ok(out)
}

/// Fiber dynamics in the frame moving with the classical trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberDynamics {
    /// i∂_tφ = [½p̂² + (V(Q+√λξ) − V(Q) − √λ∇V(Q)·ξ)/λ]φ, equivalent to the full equation.
    Exact,
    /// i∂_tf = [½p̂² + ½ξᵀV''(Q)ξ]f.
    Quadratic,
}

fn fiber_potential(pot: &Potential, q: &[f64], lambda: f64, xi: &[f64], mode: FiberDynamics) -> f64 {
    let d = q.len();
    match mode {
        FiberDynamics::Exact => {
            let sl = lambda.sqrt();
            let x: Vec<f64> = (0..d).map(|a| q[a] + sl * xi[a]).collect();
            let g = pot.grad(q);
            let lin: f64 = (0..d).map(|a| g[a] * xi[a]).sum();
            (pot.value(&x) - pot.value(q) - sl * lin) / lambda
        }
        FiberDynamics::Quadratic => {
            let h = pot.hessian(q);
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += 0.5 * xi[a] * h[a][b] * xi[b];
                }
            }
            s
        }
    }
}

/// Evolves (X, f) with X along the classical flow and f by Strang splitting with the
/// fiber potential frozen at each step midpoint. Returns (X_t, f_t); ψ_t = K_{X_t} f_t.
pub fn comoving_evolve(
    f0: &ShapeFunction,
    x0: &PacketPoint,
    pot: &Potential,
    lambda: f64,
    t: f64,
    dt: f64,
    mode: FiberDynamics,
) -> Result<(PacketPoint, ShapeFunction)> {
    if pot.dim != f0.dim() || x0.dim() != f0.dim() {
        return Err(Error::Dimension { expected: f0.dim(), got: pot.dim });
    }
    if !(lambda > 0.0) {
        return Err(Error::Invalid("λ must be positive".into()));
    }
    let (n, h) = step_count(t, dt)?;
    let grid = f0.grid.clone();
    let d = grid.dim;
    let mut x = x0.clone();
    let mut v = f0.values.clone();
    for _ in 0..n {
        let mid = classical_step(pot, &x, h / 2.0);
        let half: Vec<C64> = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                C64::from_polar(1.0, -fiber_potential(pot, &mid.q, lambda, &p[..d], mode) * h / 2.0)
            })
            .collect();
        v.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
        v = spectral_apply(&v, &grid, |k| {
            let k2: f64 = k.iter().map(|x| x * x).sum();
            C64::from_polar(1.0, -k2 * h / 2.0)
        });
        v.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
        x = classical_step(pot, &x, h);
    }
    let f = ShapeFunction::new(grid.clone(), v)?;
    f.check_decay(1e-8)?;
    let tail = GridWave { grid, lambda: 1.0, values: f.values.clone() }.spectral_tail();
    if tail > RESOLUTION_TOL {
        return Err(Error::Invalid(format!("ξ-grid under-resolves the fiber (spectral tail {tail:.3e})")));
    }
    Ok((x, f))
}

/// ‖φ_t − f_t‖/‖f₀‖ between the exact co-moving fiber and its quadratic approximation.
pub fn wkb_error(f0: &ShapeFunction, x0: &PacketPoint, pot: &Potential, lambda: f64, t: f64, dt: f64) -> Result<f64> {
    let (_, exact) = comoving_evolve(f0, x0, pot, lambda, t, dt, FiberDynamics::Exact)?;
    let (_, approx) = comoving_evolve(f0, x0, pot, lambda, t, dt, FiberDynamics::Quadratic)?;
    Ok(exact.distance(&approx)? / f0.norm())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WkbReport {
    pub lambdas: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: Option<f64>,
}

pub fn wkb_error_sweep(f0: &ShapeFunction, x0: &PacketPoint, pot: &Potential, lambdas: &[f64], t: f64, dt: f64) -> Result<WkbReport> {
    if lambdas.len() < 3 {
        return Err(Error::Invalid("λ-sweep needs at least 3 points to fit a slope".into()));
    }
    let errors = lambdas.iter().map(|l| wkb_error(f0, x0, pot, *l, t, dt)).collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(lambdas, &errors);
    Ok(WkbReport { lambdas: lambdas.to_vec(), errors, slope })
}
