//! Linearised operators about constants and about the steady states, their
//! truncated spectra, and closed-form eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, RimflowError};
use crate::evolve::{Frame, Params};
use crate::linalg::{eigen, eigen_residual};
use crate::spectral::{fft_size, Grid, Lattice, SpectralField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalues with `|Re λ|` below this are classified critical.
pub const CRITICAL_BAND: f64 = 1e-8;

/// Largest operator dimension accepted by [`eigensolve`].
pub const MAX_EIGEN_DIM: usize = 4000;

/// Closed-form eigenvalue of the linearisation about the constant `m`
/// (lab frame) for the mode `e^{ik theta} cos(l zeta)`.
pub fn lambda_closed_form(k: i64, l: i64, m: f64, gamma: f64, ell: f64) -> Complex64 {
    let a = std::f64::consts::PI / ell;
    let s = (k * k) as f64 + a * a * (l * l) as f64;
    Complex64::new(-gamma * m.powi(3) * s * (s - 1.0), -(k as f64))
}

/// Second-order coefficient of the critical eigenvalue `i + delta^2 lambda_2`.
pub fn lambda2(m: f64, gamma: f64) -> Complex64 {
    let d = 1.0 + 144.0 * gamma * gamma * m.powi(6);
    Complex64::new(-81.0 * gamma * m.powi(7) / d, -(108.0 * gamma * gamma * m.powi(10) + 7.5 * m.powi(4)) / d)
}

/// Critical eigenvalue of the linearisation about the steady state, `+i` branch.
pub fn critical_eigenvalue_expansion(m: f64, gamma: f64, delta: f64) -> Complex64 {
    I + lambda2(m, gamma) * (delta * delta)
}

/// Coefficient of `e^{-2i theta}` in the first-order eigenmode correction.
pub fn first_mode_correction(m: f64, gamma: f64) -> Complex64 {
    Complex64::new(3.0 * m * m, -36.0 * gamma * m.powi(5)) / (1.0 + 144.0 * gamma * gamma * m.powi(6))
}

/// A truncated operator on the zero-mean modes, with the mode of each
/// row/column.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<Complex64>,
    pub modes: Vec<(i64, usize)>,
    pub lattice: Lattice,
}

/// The stored lattice minus the mean mode, in storage order.
pub fn zero_mean_modes(lattice: &Lattice) -> Vec<(i64, usize)> {
    lattice.modes().filter(|&m| m != (0, 0)).collect()
}

/// Diagonal linearisation about the constant `m`.
pub fn assemble_l0(m: f64, gamma: f64, lattice: Lattice, frame: Frame) -> OperatorMatrix {
    let modes = zero_mean_modes(&lattice);
    let n = modes.len();
    let mut matrix = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (i, &(k, l)) in modes.iter().enumerate() {
        let mut lam = lambda_closed_form(k, l as i64, m, gamma, lattice.ell());
        if frame == Frame::Comoving {
            lam += I * k as f64;
        }
        matrix[(i, i)] = lam;
    }
    OperatorMatrix { matrix, modes, lattice }
}

/// Linearisation of the right-hand side about a fixed real field `H`:
/// `u -> -u_theta - gamma div(H^3 grad(lap u + u)) - 3 gamma div(H^2 u grad(lap H + H))
///  + 3 delta (H^2 u cos theta)_theta`, with the transport term only in the lab frame.
pub struct Linearization {
    lattice: Lattice,
    gamma: f64,
    delta: f64,
    transport: bool,
    n0: usize,
    n1: usize,
    h2: Vec<f64>,
    h3: Vec<f64>,
    grad_t: Vec<f64>,
    grad_z: Vec<f64>,
    cos_row: Vec<f64>,
}

impl Linearization {
    pub fn new(h: &SpectralField, p: &Params, frame: Frame) -> Result<Self> {
        if !h.is_real() {
            return Err(RimflowError::InvalidParameter("linearisation needs a real base state".into()));
        }
        let lat = *h.lattice();
        let n0 = fft_size(5 * lat.k_max() + 2);
        let n1 = fft_size(5 * lat.l_max() + 1);
        let s = lat.axial_scale();
        let hg = Grid::from_even(n0, n1, &lat, h.coeffs());
        let min_h = hg.data.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if !(min_h > 0.0) {
            return Err(RimflowError::Positivity { min_h });
        }
        let w = |k: i64, l: i64| (1.0 - lat.wavenumber_sq(k, l)) * h.get(k, l);
        let gt = Grid::synthesize_with(n0, n1, lat.k_max(), lat.l_max(), |k, l| I * k as f64 * w(k, l));
        let gz = Grid::synthesize_with(n0, n1, lat.k_max(), lat.l_max(), |k, l| I * (s * l as f64) * w(k, l));
        let hv: Vec<f64> = hg.data.iter().map(|z| z.re).collect();
        Ok(Self {
            lattice: lat,
            gamma: p.gamma,
            delta: p.delta,
            transport: frame == Frame::Lab,
            n0,
            n1,
            h2: hv.iter().map(|v| v * v).collect(),
            h3: hv.iter().map(|v| v * v * v).collect(),
            grad_t: gt.data.iter().map(|z| z.re).collect(),
            grad_z: gz.data.iter().map(|z| z.re).collect(),
            cos_row: (0..n0).map(|i| (std::f64::consts::TAU * i as f64 / n0 as f64).cos()).collect(),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Applies the operator to an even field given by stored coefficients.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let lat = self.lattice;
        let (n0, n1) = (self.n0, self.n1);
        let s = lat.axial_scale();
        let get = |k: i64, l: i64| u[lat.index(k, l.unsigned_abs() as usize)];
        let w = |k: i64, l: i64| (1.0 - lat.wavenumber_sq(k, l)) * get(k, l);
        let ug = Grid::from_even(n0, n1, &lat, u);
        let gt = Grid::synthesize_with(n0, n1, lat.k_max(), lat.l_max(), |k, l| I * k as f64 * w(k, l));
        let gz = Grid::synthesize_with(n0, n1, lat.k_max(), lat.l_max(), |k, l| I * (s * l as f64) * w(k, l));
        let mut ft = Grid::zeros(n0, n1);
        let mut fz = Grid::zeros(n0, n1);
        let mut fc = Grid::zeros(n0, n1);
        for i in 0..n0 {
            for j in 0..n1 {
                let idx = i * n1 + j;
                let hu = ug.data[idx] * (3.0 * self.h2[idx]);
                ft.data[idx] = gt.data[idx] * self.h3[idx] + hu * self.grad_t[idx];
                fz.data[idx] = gz.data[idx] * self.h3[idx] + hu * self.grad_z[idx];
                fc.data[idx] = hu * self.cos_row[i];
            }
        }
        let (ft, fz, fc) = (ft.forward(), fz.forward(), fc.forward());
        let tr = if self.transport { 1.0 } else { 0.0 };
        lat.modes()
            .map(|(k, l)| {
                let (kf, li) = (k as f64, l as i64);
                let flux =
                    |sign: i64| I * kf * ft.coeff(k, sign * li) + I * (s * (sign * li) as f64) * fz.coeff(k, sign * li);
                let div = (flux(1) + flux(-1)) * 0.5;
                let forcing = I * kf * (fc.coeff(k, li) + fc.coeff(k, -li)) * 0.5;
                -I * kf * tr * get(k, li) - div * self.gamma + forcing * self.delta
            })
            .collect()
    }

    /// Dense matrix on the given modes (rows and columns), by applying the
    /// operator to each basis mode.
    pub fn matrix_on(&self, modes: &[(i64, usize)]) -> DMatrix<Complex64> {
        let lat = self.lattice;
        let n = modes.len();
        let columns: Vec<Vec<Complex64>> = modes
            .par_iter()
            .map(|&(k, l)| {
                let mut e = vec![Complex64::new(0.0, 0.0); lat.len()];
                e[lat.index(k, l)] = Complex64::new(1.0, 0.0);
                let out = self.apply(&e);
                modes.iter().map(|&(kk, ll)| out[lat.index(kk, ll)]).collect()
            })
            .collect();
        DMatrix::from_fn(n, n, |i, j| columns[j][i])
    }
}

/// Linearisation about a steady state `H` on the zero-mean modes of its lattice.
pub fn assemble_ldelta(h: &SpectralField, p: &Params, frame: Frame) -> Result<OperatorMatrix> {
    let lin = Linearization::new(h, p, frame)?;
    let modes = zero_mean_modes(h.lattice());
    let matrix = lin.matrix_on(&modes);
    Ok(OperatorMatrix { matrix, modes, lattice: *h.lattice() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenpair {
    pub lambda: Complex64,
    /// Mode carrying the largest eigenvector component.
    pub dominant: (i64, usize),
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Critical,
    Unstable,
}

pub fn classify(lambda: Complex64) -> Stability {
    if lambda.re.abs() < CRITICAL_BAND {
        Stability::Critical
    } else if lambda.re < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Sorted by descending real part.
    pub eigenpairs: Vec<Eigenpair>,
    pub stable: usize,
    pub critical: usize,
    pub unstable: usize,
    pub lattice: Lattice,
}

impl SpectrumReport {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.eigenpairs.iter().map(|e| e.lambda).collect()
    }

    pub fn nearest(&self, target: Complex64) -> Option<&Eigenpair> {
        self.eigenpairs.iter().min_by(|a, b| (a.lambda - target).norm().total_cmp(&(b.lambda - target).norm()))
    }

    pub fn max_residual(&self) -> f64 {
        self.eigenpairs.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

pub fn eigensolve(op: &OperatorMatrix) -> Result<SpectrumReport> {
    let n = op.matrix.nrows();
    if n != op.matrix.ncols() || n != op.modes.len() {
        return Err(RimflowError::InvalidParameter("operator matrix and mode list disagree".into()));
    }
    if n > MAX_EIGEN_DIM {
        return Err(RimflowError::InvalidParameter(format!("operator dimension {n} exceeds cap {MAX_EIGEN_DIM}")));
    }
    let pairs = eigen(&op.matrix).map_err(|e| match e {
        RimflowError::Eigen(msg) => {
            let norm = op.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            RimflowError::Eigen(format!("{msg} (dimension {n}, Frobenius norm {norm:.3e})"))
        }
        other => other,
    })?;
    let mut eigenpairs: Vec<Eigenpair> = pairs
        .iter()
        .map(|(lambda, v)| {
            let (imax, _) =
                v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).expect("non-empty eigenvector");
            Eigenpair { lambda: *lambda, dominant: op.modes[imax], residual: eigen_residual(&op.matrix, *lambda, v) }
        })
        .collect();
    eigenpairs.sort_by(|a, b| b.lambda.re.total_cmp(&a.lambda.re).then(b.lambda.im.total_cmp(&a.lambda.im)));
    let count = |s: Stability| eigenpairs.iter().filter(|e| classify(e.lambda) == s).count();
    Ok(SpectrumReport {
        stable: count(Stability::Stable),
        critical: count(Stability::Critical),
        unstable: count(Stability::Unstable),
        eigenpairs,
        lattice: op.lattice,
    })
}
