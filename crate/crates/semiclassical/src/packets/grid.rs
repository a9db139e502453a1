use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid in `dim` ≤ 2 dimensions with `n` points per axis.
/// Point i_a on axis a sits at lo[a] + i_a h; index = i₀ + n i₁.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub lo: Vec<f64>,
    pub h: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, lo: Vec<f64>, h: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Invalid(format!("grid dimension {dim} not in 1..=2")));
        }
        if lo.len() != dim {
            return Err(Error::Dimension { expected: dim, got: lo.len() });
        }
        if n < 4 || n % 2 != 0 || !(h > 0.0) {
            return Err(Error::Invalid("grid needs an even n ≥ 4 and h > 0".into()));
        }
        Ok(Grid { dim, n, lo, h })
    }

    /// Grid on [c − L, c + L) per axis.
    pub fn centered(dim: usize, n: usize, center: &[f64], half_extent: f64) -> Result<Self> {
        let h = 2.0 * half_extent / n as f64;
        Self::new(dim, n, center.iter().map(|c| c - half_extent).collect(), h)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.lo[axis] + j as f64 * self.h).collect()
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + self.n as f64 * self.h
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        let i0 = i % self.n;
        let i1 = i / self.n;
        let x0 = self.lo[0] + i0 as f64 * self.h;
        let x1 = if self.dim > 1 { self.lo[1] + i1 as f64 * self.h } else { 0.0 };
        [x0, x1]
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let l = self.n as f64 * self.h;
        (0..self.n)
            .map(|j| {
                let m = if j < self.n / 2 { j as f64 } else { j as f64 - self.n as f64 };
                2.0 * std::f64::consts::PI * m / l
            })
            .collect()
    }
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<HashMap<usize, Plans>> = RefCell::new(HashMap::new());
}

fn fft_plans(n: usize) -> Plans {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut p = FftPlanner::new();
                (p.plan_fft_forward(n), p.plan_fft_inverse(n))
            })
            .clone()
    })
}

fn fft_axes(values: &mut [C64], grid: &Grid, plan: &Arc<dyn Fft<f64>>) {
    let n = grid.n;
    for row in values.chunks_mut(n) {
        plan.process(row);
    }
    if grid.dim == 2 {
        let mut col = vec![C64::new(0.0, 0.0); n];
        for i0 in 0..n {
            for i1 in 0..n {
                col[i1] = values[i0 + n * i1];
            }
            plan.process(&mut col);
            for i1 in 0..n {
                values[i0 + n * i1] = col[i1];
            }
        }
    }
}

/// Applies the Fourier multiplier m(k) (k a `dim`-vector of angular wavenumbers).
/// At the Nyquist index the multiplier is symmetrised so real data stays real.
pub fn spectral_apply(values: &[C64], grid: &Grid, m: impl Fn(&[f64]) -> C64) -> Vec<C64> {
    let n = grid.n;
    let (fwd, inv) = fft_plans(n);
    let mut v = values.to_vec();
    fft_axes(&mut v, grid, &fwd);
    let ks = grid.wavenumbers();
    let nyq = n / 2;
    let sym = |k: f64, j: usize| if j == nyq { vec![k, -k] } else { vec![k] };
    for i in 0..v.len() {
        let i0 = i % n;
        let i1 = i / n;
        let a0 = sym(ks[i0], i0);
        let mult = if grid.dim == 1 {
            a0.iter().map(|k| m(&[*k])).sum::<C64>() / a0.len() as f64
        } else {
            let a1 = sym(ks[i1], i1);
            let mut acc = C64::new(0.0, 0.0);
            for k0 in &a0 {
                for k1 in &a1 {
                    acc += m(&[*k0, *k1]);
                }
            }
            acc / (a0.len() * a1.len()) as f64
        };
        v[i] *= mult;
    }
    fft_axes(&mut v, grid, &inv);
    let norm = 1.0 / grid.len() as f64;
    v.iter_mut().for_each(|z| *z *= norm);
    v
}

/// Periodic cardinal function of an even-n grid at offset u (in grid steps).
fn periodic_sinc(u: f64, n: usize) -> f64 {
    let t = std::f64::consts::PI * u / n as f64;
    let s = t.sin();
    if s.abs() < 1e-14 {
        return 1.0;
    }
    (n as f64 * t).sin() * t.cos() / (n as f64 * s)
}

/// Trigonometric interpolation weights of the points xs on one axis;
/// points outside the periodic window get zero weight.
fn interp_weights(grid: &Grid, axis: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    let (lo, hi) = (grid.lo[axis], grid.hi(axis));
    xs.iter()
        .map(|&x| {
            if x < lo - 0.5 * grid.h || x > hi - 0.5 * grid.h {
                return vec![0.0; grid.n];
            }
            let u0 = (x - lo) / grid.h;
            (0..grid.n).map(|j| periodic_sinc(u0 - j as f64, grid.n)).collect()
        })
        .collect()
}

/// Complex function sampled on a grid.
#[derive(Debug, Clone)]
pub struct ShapeFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl ShapeFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: values.len() });
        }
        Ok(ShapeFunction { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.dim])).collect();
        ShapeFunction { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        ShapeFunction { grid: grid.clone(), values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    /// Normalised π^{−D/4} e^{−|ξ−c|²/(2w²)}/w^{D/2} e^{iκ·ξ}.
    pub fn gaussian(grid: &Grid, center: &[f64], width: f64, kappa: &[f64]) -> Self {
        let d = grid.dim;
        let norm = std::f64::consts::PI.powf(-(d as f64) / 4.0) * width.powf(-(d as f64) / 2.0);
        Self::from_fn(grid, |x| {
            let mut r2 = 0.0;
            let mut ph = 0.0;
            for a in 0..d {
                r2 += (x[a] - center[a]).powi(2);
                ph += kappa[a] * x[a];
            }
            C64::from_polar(norm * (-0.5 * r2 / (width * width)).exp(), ph)
        })
    }

    /// Standard coherent shape on a grid of ±`half_extent` with n points per axis.
    pub fn coherent(dim: usize, n: usize, half_extent: f64) -> Result<Self> {
        let grid = Grid::centered(dim, n, &vec![0.0; dim], half_extent)?;
        Ok(Self::gaussian(&grid, &vec![0.0; dim], 1.0, &vec![0.0; dim]))
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn check_grid(&self, o: &ShapeFunction) -> Result<()> {
        if self.grid != o.grid {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    /// ∫ f̄ g (conjugate-linear in the first slot).
    pub fn inner(&self, o: &ShapeFunction) -> Result<C64> {
        self.check_grid(o)?;
        Ok(self.values.iter().zip(&o.values).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.cell())
    }

    pub fn axpy(&self, s: C64, o: &ShapeFunction) -> Result<ShapeFunction> {
        self.check_grid(o)?;
        let values = self.values.iter().zip(&o.values).map(|(a, b)| a + s * b).collect();
        Ok(ShapeFunction { grid: self.grid.clone(), values })
    }

    pub fn scale(&self, s: C64) -> ShapeFunction {
        ShapeFunction { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn distance(&self, o: &ShapeFunction) -> Result<f64> {
        Ok(self.axpy(C64::new(-1.0, 0.0), o)?.norm())
    }

    /// Fraction of the squared norm carried by the outermost `width` points of each axis.
    pub fn boundary_mass(&self, width: usize) -> f64 {
        let n = self.grid.n;
        let edge = |j: usize| j < width || j + width >= n;
        let total: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let b: f64 = (0..self.values.len())
            .filter(|&i| edge(i % n) || (self.grid.dim == 2 && edge(i / n)))
            .map(|i| self.values[i].norm_sqr())
            .sum();
        b / total
    }

    /// Errors unless the boundary carries less than `tol` of the norm.
    pub fn check_decay(&self, tol: f64) -> Result<()> {
        let m = self.boundary_mass(self.grid.n / 16 + 1).sqrt();
        if m > tol {
            return Err(Error::Invalid(format!("shape not decayed at grid boundary (relative tail {m:.3e})")));
        }
        Ok(())
    }

    /// Radius (per axis, from the origin) beyond which |f| < tol·max|f|.
    pub fn support_radius(&self, tol: f64) -> f64 {
        let max = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut r: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            if v.norm() >= tol * max {
                let p = self.grid.point(i);
                for x in p.iter().take(self.grid.dim) {
                    r = r.max(x.abs());
                }
            }
        }
        r + self.grid.h
    }

    /// Radius of the Fourier support, same criterion.
    pub fn momentum_radius(&self, tol: f64) -> f64 {
        let n = self.grid.n;
        let (fwd, _) = fft_plans(n);
        let mut v = self.values.clone();
        fft_axes(&mut v, &self.grid, &fwd);
        let ks = self.grid.wavenumbers();
        let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut r: f64 = 0.0;
        for (i, z) in v.iter().enumerate() {
            if z.norm() >= tol * max {
                r = r.max(ks[i % n].abs());
                if self.grid.dim == 2 {
                    r = r.max(ks[i / n].abs());
                }
            }
        }
        r
    }

    /// ξ_a f.
    pub fn mul_coord(&self, axis: usize) -> ShapeFunction {
        let values = (0..self.values.len()).map(|i| self.values[i] * self.grid.point(i)[axis]).collect();
        ShapeFunction { grid: self.grid.clone(), values }
    }

    /// p̂_a f = −i ∂_a f (spectral).
    pub fn p_op(&self, axis: usize) -> ShapeFunction {
        let values = spectral_apply(&self.values, &self.grid, |k| C64::new(k[axis], 0.0));
        ShapeFunction { grid: self.grid.clone(), values }
    }

    /// (a·ξ − b·p̂) f.
    pub fn omega_apply(&self, a: &[f64], b: &[f64]) -> ShapeFunction {
        let mut out = ShapeFunction::zeros(&self.grid);
        for ax in 0..self.grid.dim {
            if a[ax] != 0.0 {
                out = out.axpy(C64::new(a[ax], 0.0), &self.mul_coord(ax)).expect("same grid");
            }
            if b[ax] != 0.0 {
                out = out.axpy(C64::new(-b[ax], 0.0), &self.p_op(ax)).expect("same grid");
            }
        }
        out
    }

    /// f(ξ − b), zero outside the original window.
    pub fn translate(&self, b: &[f64]) -> ShapeFunction {
        if b.iter().all(|x| *x == 0.0) {
            return self.clone();
        }
        let mut values = spectral_apply(&self.values, &self.grid, |k| {
            let ph: f64 = k.iter().zip(b).map(|(k, b)| -k * b).sum();
            C64::from_polar(1.0, ph)
        });
        for (i, v) in values.iter_mut().enumerate() {
            let p = self.grid.point(i);
            for ax in 0..self.grid.dim {
                let src = p[ax] - b[ax];
                if src < self.grid.lo[ax] || src >= self.grid.hi(ax) {
                    *v = C64::new(0.0, 0.0);
                }
            }
        }
        ShapeFunction { grid: self.grid.clone(), values }
    }

    /// e^{i a·ξ} f.
    pub fn modulate(&self, a: &[f64]) -> ShapeFunction {
        let values = (0..self.values.len())
            .map(|i| {
                let p = self.grid.point(i);
                let ph: f64 = (0..self.grid.dim).map(|ax| a[ax] * p[ax]).sum();
                self.values[i] * C64::from_polar(1.0, ph)
            })
            .collect();
        ShapeFunction { grid: self.grid.clone(), values }
    }

    /// e^{i(a·ξ − b·p̂)} f = e^{−ia·b/2} e^{ia·ξ} f(ξ − b).
    pub fn weyl(&self, a: &[f64], b: &[f64]) -> ShapeFunction {
        let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        self.translate(b).modulate(a).scale(C64::from_polar(1.0, -0.5 * ab))
    }

    /// Values at the tensor grid xs[0] × xs[1] (axis 0 fastest), by trigonometric interpolation.
    pub fn interpolate(&self, xs: &[Vec<f64>]) -> Vec<C64> {
        let n = self.grid.n;
        let w0 = interp_weights(&self.grid, 0, &xs[0]);
        if self.grid.dim == 1 {
            return w0.iter().map(|w| w.iter().zip(&self.values).map(|(a, b)| b * a).sum()).collect();
        }
        let w1 = interp_weights(&self.grid, 1, &xs[1]);
        // contract axis 0 first: tmp[m0, j1]
        let m0 = xs[0].len();
        let mut tmp = vec![C64::new(0.0, 0.0); m0 * n];
        for (a, w) in w0.iter().enumerate() {
            for j1 in 0..n {
                let row = &self.values[j1 * n..(j1 + 1) * n];
                tmp[a + m0 * j1] = w.iter().zip(row).map(|(x, y)| y * x).sum();
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); m0 * xs[1].len()];
        for (b, w) in w1.iter().enumerate() {
            for a in 0..m0 {
                let mut acc = C64::new(0.0, 0.0);
                for j1 in 0..n {
                    acc += tmp[a + m0 * j1] * w[j1];
                }
                out[a + m0 * b] = acc;
            }
        }
        out
    }
}

/// Wave function on an x-grid together with its semiclassical parameter.
#[derive(Debug, Clone)]
pub struct GridWave {
    pub grid: Grid,
    pub lambda: f64,
    pub values: Vec<C64>,
}

impl GridWave {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, o: &GridWave) -> Result<C64> {
        if self.grid != o.grid {
            return Err(Error::BasisMismatch);
        }
        Ok(self.values.iter().zip(&o.values).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.cell())
    }

    pub fn distance(&self, o: &GridWave) -> Result<f64> {
        if self.grid != o.grid {
            return Err(Error::BasisMismatch);
        }
        let s: f64 = self.values.iter().zip(&o.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell()).sqrt())
    }

    /// ⟨x_a⟩ / ‖ψ‖².
    pub fn mean_position(&self, axis: usize) -> f64 {
        let s: f64 = (0..self.values.len()).map(|i| self.grid.point(i)[axis] * self.values[i].norm_sqr()).sum();
        s * self.grid.cell() / self.norm_sqr()
    }

    /// ⟨−iλ∂_a⟩ / ‖ψ‖² (spectral).
    pub fn mean_momentum(&self, axis: usize) -> f64 {
        let dv = spectral_apply(&self.values, &self.grid, |k| C64::new(self.lambda * k[axis], 0.0));
        let s: C64 = self.values.iter().zip(&dv).map(|(a, b)| a.conj() * b).sum();
        s.re * self.grid.cell() / self.norm_sqr()
    }

    /// Fraction of spectral norm above 2/3 of the Nyquist wavenumber.
    pub fn spectral_tail(&self) -> f64 {
        let kmax = std::f64::consts::PI / self.grid.h;
        let hi = spectral_apply(&self.values, &self.grid, |k| {
            if k.iter().any(|x| x.abs() > 2.0 / 3.0 * kmax) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let t: f64 = hi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell();
        (t / self.norm_sqr().max(1e-300)).sqrt()
    }

    /// CSV with columns x[, y], re, im.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        if self.grid.dim == 1 {
            w.write_record(["x", "re", "im"]).map_err(io)?;
        } else {
            w.write_record(["x", "y", "re", "im"]).map_err(io)?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            let mut rec: Vec<String> = p.iter().take(self.grid.dim).map(|x| format!("{x:.17e}")).collect();
            rec.push(format!("{:.17e}", v.re));
            rec.push(format!("{:.17e}", v.im));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        Ok(())
    }
}
