use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm, logm, CMat};

const STRUCTURE_TOL: f64 = 1e-12;

/// h(ζ) = ½ζᵀKζ + l·ζ + c on ζ = (Q₁…Q_D, P₁…P_D).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadHamiltonian {
    pub dim: usize,
    pub k: DMatrix<f64>,
    pub l: DVector<f64>,
    pub c: f64,
}

/// J = [[0, I], [−I, 0]], so {f, g} = ∇fᵀJ∇g = f_Q·g_P − f_P·g_Q.
pub fn symplectic_j(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * dim, 2 * dim, |i, j| {
        if j == i + dim {
            1.0
        } else if i == j + dim {
            -1.0
        } else {
            0.0
        }
    })
}

impl QuadHamiltonian {
    pub fn new(k: DMatrix<f64>, l: DVector<f64>, c: f64) -> Result<Self> {
        let n = k.nrows();
        if n == 0 || n % 2 != 0 || k.ncols() != n || l.len() != n {
            return Err(Error::Invalid("Hamiltonian needs a 2D×2D matrix and a 2D vector".into()));
        }
        if (&k - k.transpose()).amax() > 1e-14 * k.amax().max(1.0) {
            return Err(Error::Invalid("Hamiltonian matrix must be symmetric".into()));
        }
        Ok(QuadHamiltonian { dim: n / 2, k, l, c })
    }

    pub fn quadratic(k: DMatrix<f64>) -> Result<Self> {
        let n = k.nrows();
        Self::new(k, DVector::zeros(n), 0.0)
    }

    pub fn zero(dim: usize) -> Self {
        QuadHamiltonian { dim, k: DMatrix::zeros(2 * dim, 2 * dim), l: DVector::zeros(2 * dim), c: 0.0 }
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.k * z)) + self.l.dot(z) + self.c
    }

    pub fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.k * z + &self.l
    }

    pub fn scaled(&self, s: f64) -> Self {
        QuadHamiltonian { dim: self.dim, k: &self.k * s, l: &self.l * s, c: self.c * s }
    }

    pub fn add(&self, o: &Self) -> Self {
        QuadHamiltonian { dim: self.dim, k: &self.k + &o.k, l: &self.l + &o.l, c: self.c + o.c }
    }

    /// Poisson bracket {self, o}.
    pub fn poisson(&self, o: &Self) -> Self {
        let j = symplectic_j(self.dim);
        let k = &self.k * &j * &o.k - &o.k * &j * &self.k;
        let l = &self.k * &j * &o.l - &o.k * &j * &self.l;
        let c = self.l.dot(&(&j * &o.l));
        QuadHamiltonian { dim: self.dim, k, l, c }
    }

    /// Faithful (2D+2)-dimensional matrix with R({f,g}) = [R(f), R(g)]:
    /// [[0, ½lᵀ, c], [0, JK, Jl], [0, 0, 0]].
    pub fn rep(&self) -> DMatrix<f64> {
        let n = 2 * self.dim;
        let j = symplectic_j(self.dim);
        let jk = &j * &self.k;
        let jl = &j * &self.l;
        let mut r = DMatrix::zeros(n + 2, n + 2);
        for a in 0..n {
            r[(0, a + 1)] = 0.5 * self.l[a];
            r[(a + 1, n + 1)] = jl[a];
            for b in 0..n {
                r[(a + 1, b + 1)] = jk[(a, b)];
            }
        }
        r[(0, n + 1)] = self.c;
        r
    }

    fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.k.iter().cloned().collect();
        v.extend(self.l.iter());
        v.push(self.c);
        v
    }
}

/// Finite-dimensional Lie algebra with basis B₁…B_m, [B_i; B_j] = Σ_k c^k_ij B_k,
/// and a faithful real matrix representation.
#[derive(Debug, Clone)]
pub struct LieAlgebra {
    pub labels: Vec<String>,
    /// c^k_ij at index k + m(j + m i).
    pub structure: Vec<f64>,
    pub rep: Vec<DMatrix<f64>>,
    /// Classical Hamiltonians when the algebra acts by Hamiltonian flows.
    pub hamiltonians: Option<Vec<QuadHamiltonian>>,
}

impl LieAlgebra {
    /// Validates antisymmetry, the Jacobi identity and the representation.
    pub fn custom(labels: Vec<String>, structure: Vec<f64>, rep: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = labels.len();
        if structure.len() != m * m * m || rep.len() != m {
            return Err(Error::Invalid("structure constants need m³ entries and m matrices".into()));
        }
        let alg = LieAlgebra { labels, structure, rep, hamiltonians: None };
        let anti = alg.antisymmetry_residual();
        if anti > STRUCTURE_TOL {
            return Err(Error::Invalid(format!("structure constants not antisymmetric ({anti:.2e})")));
        }
        let jac = alg.jacobi_residual();
        if jac > STRUCTURE_TOL {
            return Err(Error::Invalid(format!("Jacobi identity violated ({jac:.2e})")));
        }
        let rr = alg.rep_residual();
        if rr > STRUCTURE_TOL {
            return Err(Error::Invalid(format!("matrix representation does not match structure constants ({rr:.2e})")));
        }
        Ok(alg)
    }

    /// Algebra spanned by quadratic Hamiltonians under the Poisson bracket.
    pub fn from_hamiltonians(labels: Vec<String>, hams: Vec<QuadHamiltonian>) -> Result<Self> {
        let m = hams.len();
        if m == 0 || labels.len() != m || hams.iter().any(|h| h.dim != hams[0].dim) {
            return Err(Error::Invalid("need one label per Hamiltonian of a common dimension".into()));
        }
        let cols: Vec<Vec<f64>> = hams.iter().map(|h| h.flatten()).collect();
        let basis = DMatrix::from_fn(cols[0].len(), m, |r, c| cols[c][r]);
        let svd = basis.clone().svd(true, true);
        let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        if smin <= 1e-12 * smax {
            return Err(Error::Invalid("Hamiltonians are linearly dependent".into()));
        }
        let mut structure = vec![0.0; m * m * m];
        for i in 0..m {
            for j in 0..m {
                let target = DVector::from_vec(hams[i].poisson(&hams[j]).flatten());
                let coef = svd.solve(&target, 1e-14).map_err(|e| Error::Invalid(e.into()))?;
                let miss = (&basis * &coef - &target).amax();
                if miss > 1e-10 * target.amax().max(1.0) {
                    return Err(Error::Invalid(format!("Hamiltonians not closed under the Poisson bracket ({i},{j})")));
                }
                for k in 0..m {
                    structure[k + m * (j + m * i)] = if coef[k].abs() < 1e-15 { 0.0 } else { coef[k] };
                }
            }
        }
        let rep = hams.iter().map(|h| h.rep()).collect();
        let mut alg = Self::custom(labels, structure, rep)?;
        alg.hamiltonians = Some(hams);
        Ok(alg)
    }

    /// Q-translation (h = P), P-translation (h = −Q) and the central constant, D = 1.
    pub fn heisenberg() -> Self {
        let h = |l: [f64; 2], c: f64| QuadHamiltonian::new(DMatrix::zeros(2, 2), DVector::from_row_slice(&l), c).expect("valid");
        Self::from_hamiltonians(
            vec!["shift_q".into(), "shift_p".into(), "central".into()],
            vec![h([0.0, 1.0], 0.0), h([-1.0, 0.0], 0.0), h([0.0, 0.0], 1.0)],
        )
        .expect("Heisenberg algebra closes")
    }

    /// K₀ = (Q² + P²)/4, K₁ = (Q² − P²)/4, K₂ = QP/2, D = 1.
    pub fn su11() -> Self {
        let q = |a: f64, b: f64, c: f64| QuadHamiltonian::quadratic(DMatrix::from_row_slice(2, 2, &[a, c, c, b])).expect("valid");
        Self::from_hamiltonians(
            vec!["k0".into(), "k1".into(), "k2".into()],
            vec![q(0.5, 0.5, 0.0), q(0.5, -0.5, 0.0), q(0.0, 0.0, 0.5)],
        )
        .expect("su(1,1) closes")
    }

    /// Number-conserving quadratics on D = 2: J₀ = |ζ|²/4, J₁ = (Q₁Q₂ + P₁P₂)/2,
    /// J₂ = (Q₁P₂ − Q₂P₁)/2, J₃ = (Q₁² + P₁² − Q₂² − P₂²)/4.
    pub fn u2() -> Self {
        let mut js = Vec::new();
        let mut k0 = DMatrix::zeros(4, 4);
        let mut k1 = DMatrix::zeros(4, 4);
        let mut k2 = DMatrix::zeros(4, 4);
        let mut k3 = DMatrix::zeros(4, 4);
        for a in 0..4 {
            k0[(a, a)] = 0.5;
        }
        // ζ = (Q₁, Q₂, P₁, P₂)
        for (x, y) in [(0, 1), (2, 3)] {
            k1[(x, y)] = 0.5;
            k1[(y, x)] = 0.5;
        }
        k2[(0, 3)] = 0.5;
        k2[(3, 0)] = 0.5;
        k2[(1, 2)] = -0.5;
        k2[(2, 1)] = -0.5;
        for (a, s) in [(0, 0.5), (2, 0.5), (1, -0.5), (3, -0.5)] {
            k3[(a, a)] = s;
        }
        for k in [k0, k1, k2, k3] {
            js.push(QuadHamiltonian::quadratic(k).expect("valid"));
        }
        Self::from_hamiltonians(vec!["j0".into(), "j1".into(), "j2".into(), "j3".into()], js).expect("u(2) closes")
    }

    /// Single oscillator generator ω|ζ|²/2 in D dimensions.
    pub fn oscillator(dim: usize, omega: f64) -> Self {
        let k = DMatrix::identity(2 * dim, 2 * dim) * omega;
        Self::from_hamiltonians(vec!["rotation".into()], vec![QuadHamiltonian::quadratic(k).expect("valid")])
            .expect("abelian")
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let m = self.m();
        self.structure[k + m * (j + m * i)]
    }

    /// Coefficients of [A; B].
    pub fn bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                let w = a[i] * b[j];
                if w != 0.0 {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += w * self.c(i, j, k);
                    }
                }
            }
        }
        out
    }

    pub fn rep_of(&self, a: &[f64]) -> DMatrix<f64> {
        let n = self.rep[0].nrows();
        a.iter().zip(&self.rep).fold(DMatrix::zeros(n, n), |acc, (x, r)| acc + r * *x)
    }

    pub fn hamiltonian_of(&self, a: &[f64]) -> Option<QuadHamiltonian> {
        let hs = self.hamiltonians.as_ref()?;
        Some(a.iter().zip(hs).fold(QuadHamiltonian::zero(hs[0].dim), |acc, (x, h)| acc.add(&h.scaled(*x))))
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let m = self.m();
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    r = r.max((self.c(i, j, k) + self.c(j, i, k)).abs());
                }
            }
        }
        r
    }

    /// max |Σ_l (c^l_ij c^n_lk + c^l_jk c^n_li + c^l_ki c^n_lj)|.
    pub fn jacobi_residual(&self) -> f64 {
        let m = self.m();
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for n in 0..m {
                        let s: f64 = (0..m)
                            .map(|l| self.c(i, j, l) * self.c(l, k, n) + self.c(j, k, l) * self.c(l, i, n) + self.c(k, i, l) * self.c(l, j, n))
                            .sum();
                        r = r.max(s.abs());
                    }
                }
            }
        }
        r
    }

    /// max ‖[R_i, R_j] − Σ c^k_ij R_k‖.
    pub fn rep_residual(&self) -> f64 {
        let m = self.m();
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let comm = &self.rep[i] * &self.rep[j] - &self.rep[j] * &self.rep[i];
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                let mut f = vec![0.0; m];
                f[j] = 1.0;
                r = r.max((comm - self.rep_of(&self.bracket(&e, &f))).amax());
            }
        }
        r
    }

    /// g_{B₁}(α₁)···g_{B_m}(α_m) in the matrix representation.
    pub fn second_kind_element(&self, alpha: &[f64]) -> DMatrix<f64> {
        let n = self.rep[0].nrows();
        alpha.iter().zip(&self.rep).fold(DMatrix::identity(n, n), |acc, (a, r)| acc * real_expm(&(r * *a)))
    }

    /// exp(Σ a_i R_i).
    pub fn exp(&self, a: &[f64]) -> DMatrix<f64> {
        real_expm(&self.rep_of(a))
    }
}

pub fn real_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let c: CMat = a.map(|x| num_complex::Complex64::new(x, 0.0));
    expm(&c).map(|z| z.re)
}

pub fn real_logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c: CMat = a.map(|x| num_complex::Complex64::new(x, 0.0));
    Ok(logm(&c)?.map(|z| z.re))
}

/// (α₁…α_m) with g = g_{B₁}(α₁)···g_{B_m}(α_m), by Gauss–Newton seeded with the
/// first-kind coordinates of log g.
pub fn second_kind_coords(g: &DMatrix<f64>, alg: &LieAlgebra) -> Result<Vec<f64>> {
    let m = alg.m();
    let n = alg.rep[0].nrows();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Dimension { expected: n, got: g.nrows() });
    }
    let flat = |x: &DMatrix<f64>| DVector::from_iterator(n * n, x.iter().cloned());
    let rep_cols = DMatrix::from_fn(n * n, m, |r, c| alg.rep[c][r % n + n * (r / n)]);
    let rep_svd = rep_cols.svd(true, true);
    let log = real_logm(g).map_err(|_| Error::Invalid("group element outside the local chart".into()))?;
    let seed = rep_svd.solve(&flat(&log), 1e-14).map_err(|e| Error::Invalid(e.into()))?;
    let mut alpha: Vec<f64> = seed.iter().cloned().collect();
    let gf = flat(g);
    let mut res = f64::INFINITY;
    for _ in 0..50 {
        let es: Vec<DMatrix<f64>> = alpha.iter().zip(&alg.rep).map(|(a, r)| real_expm(&(r * *a))).collect();
        let mut left = vec![DMatrix::identity(n, n)];
        for e in &es {
            let last = left.last().expect("non-empty") * e;
            left.push(last);
        }
        let mut right = vec![DMatrix::identity(n, n); m + 1];
        for i in (0..m).rev() {
            right[i] = &es[i] * &right[i + 1];
        }
        let r = flat(&left[m]) - &gf;
        res = r.amax();
        if res <= 1e-12 {
            return Ok(alpha);
        }
        let jac = DMatrix::from_fn(n * n, m, |row, col| {
            let d = &left[col] * &alg.rep[col] * &right[col];
            d[row % n + n * (row / n)]
        });
        let step = jac.svd(true, true).solve(&r, 1e-14).map_err(|e| Error::Invalid(e.into()))?;
        for (a, s) in alpha.iter_mut().zip(step.iter()) {
            *a -= s;
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence { iters: 50, residual: res })
}
