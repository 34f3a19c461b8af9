//! Complex LU factorizations (dense and banded) and a Schur-based eigensolver.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, RimflowError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense LU with partial pivoting, `P A = L U`, column-major.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    a: Vec<Complex64>,
    piv: Vec<usize>,
    min_pivot: f64,
}

impl DenseLu {
    pub fn new(matrix: &DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(RimflowError::Solver(format!("matrix is {}x{}, not square", n, matrix.ncols())));
        }
        let mut a = matrix.as_slice().to_vec();
        let mut piv = vec![0; n];
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let col = k * n;
            let p = (k..n).max_by(|&i, &j| a[col + i].norm().total_cmp(&a[col + j].norm())).unwrap_or(k);
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(j * n + k, j * n + p);
                }
            }
            let pivot = a[col + k];
            min_pivot = min_pivot.min(pivot.norm());
            if pivot == ZERO {
                continue;
            }
            let inv = pivot.inv();
            for i in k + 1..n {
                a[col + i] *= inv;
            }
            for j in k + 1..n {
                let akj = a[j * n + k];
                if akj == ZERO {
                    continue;
                }
                let (head, tail) = a.split_at_mut(j * n);
                let lcol = &head[col + k + 1..col + n];
                for (x, l) in tail[k + 1..n].iter_mut().zip(lcol) {
                    *x -= l * akj;
                }
            }
        }
        if !min_pivot.is_finite() && n > 0 {
            return Err(RimflowError::Solver("non-finite matrix entries".into()));
        }
        Ok(Self { n, a, piv, min_pivot })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[j * self.n + i]
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for j in 0..n {
            let bj = b[j];
            if bj != ZERO {
                for i in j + 1..n {
                    b[i] -= self.at(i, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            for i in 0..j {
                b[i] -= self.at(i, j) * bj;
            }
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for p in 0..i {
                s -= self.at(p, i).conj() * b[p];
            }
            b[i] = s / self.at(i, i).conj();
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for p in i + 1..n {
                s -= self.at(p, i).conj() * b[p];
            }
            b[i] = s;
        }
        for k in (0..n).rev() {
            b.swap(k, self.piv[k]);
        }
    }

    /// Estimate of the smallest singular value by inverse iteration on `A^H A`.
    pub fn sigma_min_estimate(&self, iterations: usize) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        if self.min_pivot == 0.0 {
            return 0.0;
        }
        let mut x: Vec<Complex64> =
            (0..self.n).map(|i| Complex64::new(1.0 + 0.1 * (i % 7) as f64, 0.05 * (i % 3) as f64)).collect();
        let mut sigma = f64::INFINITY;
        for _ in 0..iterations.max(1) {
            let norm = norm2(&x);
            x.iter_mut().for_each(|v| *v /= norm);
            self.solve(&mut x);
            self.solve_adjoint(&mut x);
            let grow = norm2(&x);
            if !grow.is_finite() {
                return 0.0;
            }
            sigma = 1.0 / grow.sqrt();
        }
        sigma
    }
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, stored LAPACK
/// style with `kl` extra rows for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let kl = kl.min(n.saturating_sub(1));
        let ku = ku.min(n.saturating_sub(1));
        Self { n, kl, ku, ab: vec![ZERO; n * (2 * kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab() + self.kl + self.ku + i - j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band kl={}, ku={}", self.kl, self.ku);
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            ZERO
        }
    }

    /// Clears row `i` and puts `diag` on its diagonal.
    pub fn set_identity_row(&mut self, i: usize, diag: Complex64) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j);
            self.ab[s] = ZERO;
        }
        let s = self.slot(i, i);
        self.ab[s] = diag;
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.ab[self.slot(i, j)] * x[j];
            }
        }
        y
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl) = (self.n, self.kl);
        let kv = self.ku + kl;
        let ldab = self.ldab();
        let mut piv = vec![0; n];
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let base = j * ldab + kv;
            let p =
                (0..=km).max_by(|&a, &b| self.ab[base + a].norm().total_cmp(&self.ab[base + b].norm())).unwrap_or(0);
            piv[j] = j + p;
            if self.ab[base + p] == ZERO {
                return Err(RimflowError::SingularJacobian { sigma_min: 0.0 });
            }
            ju = ju.max((j + self.ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    self.ab.swap(a, a + p);
                }
            }
            let inv = self.ab[base].inv();
            for r in 1..=km {
                self.ab[base + r] *= inv;
            }
            for c in j + 1..=ju {
                let top = c * ldab + kv + j - c;
                let t = self.ab[top];
                if t == ZERO {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[base + r];
                    self.ab[top + r] -= l * t;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [Complex64]) {
        let m = &self.m;
        let (n, kl) = (m.n, m.kl);
        let kv = m.ku + kl;
        let ldab = m.ldab();
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let bj = b[j];
            if bj == ZERO {
                continue;
            }
            let km = kl.min(n - 1 - j);
            let base = j * ldab + kv;
            for r in 1..=km {
                b[j + r] -= m.ab[base + r] * bj;
            }
        }
        for j in (0..n).rev() {
            let base = j * ldab + kv;
            b[j] /= m.ab[base];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= m.ab[base + i - j] * bj;
            }
        }
    }
}

/// Eigenpairs of a dense complex matrix: eigenvalues from the complex Schur
/// form `A = Q T Q^H`, unit eigenvectors by back-substitution on `T`, then
/// Newton refinement against `A` itself with the Schur factors as the
/// approximate inverse.
pub fn eigen(matrix: &DMatrix<Complex64>) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(matrix.clone(), 1e-15, 10_000 * n)
        .ok_or_else(|| RimflowError::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let qh = q.adjoint();
    let scale = t.iter().fold(0.0_f64, |m, z| m.max(z.norm())).max(1.0);
    let small = 1e-15 * scale;
    let guard = |d: Complex64| if d.norm() < small { Complex64::new(small, 0.0) } else { d };
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut lambda = t[(j, j)];
        let mut y = vec![ZERO; n];
        y[j] = Complex64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut s = ZERO;
            for p in i + 1..=j {
                s += t[(i, p)] * y[p];
            }
            y[i] = -s / guard(t[(i, i)] - lambda);
        }
        for _ in 0..REFINE_STEPS {
            // residual of A (Q y) = lambda (Q y), mapped to the Schur basis
            let v = &q * nalgebra::DVector::from_column_slice(&y);
            let r = matrix * &v - &v * lambda;
            let g = &qh * r;
            // (T - lambda) dy - dlambda y = -g with dy[j] = 0
            let mut dy = vec![ZERO; n];
            for i in (j + 1..n).rev() {
                let mut s = -g[i];
                for p in i + 1..n {
                    s -= t[(i, p)] * dy[p];
                }
                dy[i] = s / guard(t[(i, i)] - lambda);
            }
            let mut s = -g[j];
            for p in j + 1..n {
                s -= t[(j, p)] * dy[p];
            }
            let dlambda = -s / y[j];
            for i in (0..j).rev() {
                let mut s = -g[i] + dlambda * y[i];
                for p in i + 1..n {
                    s -= t[(i, p)] * dy[p];
                }
                dy[i] = s / guard(t[(i, i)] - lambda);
            }
            lambda += dlambda;
            for (a, b) in y.iter_mut().zip(&dy) {
                *a += b;
            }
        }
        let v = &q * nalgebra::DVector::from_column_slice(&y);
        let nv = v.norm();
        out.push((lambda, v.iter().map(|x| x / nv).collect()));
    }
    Ok(out)
}

const REFINE_STEPS: usize = 1;

/// `|A v - lambda v|` for a unit vector `v`.
pub fn eigen_residual(matrix: &DMatrix<Complex64>, lambda: Complex64, v: &[Complex64]) -> f64 {
    let n = matrix.nrows();
    let mut r = 0.0;
    for i in 0..n {
        let mut s = -lambda * v[i];
        for (j, vj) in v.iter().enumerate() {
            s += matrix[(i, j)] * vj;
        }
        r += s.norm_sqr();
    }
    r.sqrt()
}
