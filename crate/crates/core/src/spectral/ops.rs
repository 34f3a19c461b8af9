use num_complex::Complex64;

use super::fft::{fft_size, Grid};
use super::field::SpectralField;
use super::lattice::Lattice;
use crate::error::{Result, RimflowError};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Real samples on the uniform grid `theta_i = 2 pi i / n_theta`,
/// `zeta_j = 2 pi j / n_zeta`, stored row-major with theta as the row index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    n_theta: usize,
    n_zeta: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(n_theta: usize, n_zeta: usize, values: Vec<f64>) -> Result<Self> {
        if !n_theta.is_multiple_of(2) || !n_zeta.is_multiple_of(2) || n_theta == 0 || n_zeta == 0 {
            return Err(RimflowError::InvalidParameter(format!(
                "grid sizes must be even and positive, got {n_theta} x {n_zeta}"
            )));
        }
        if values.len() != n_theta * n_zeta {
            return Err(RimflowError::InvalidParameter(format!(
                "grid {n_theta} x {n_zeta} needs {} values, got {}",
                n_theta * n_zeta,
                values.len()
            )));
        }
        Ok(Self { n_theta, n_zeta, values })
    }

    /// Samples `f(theta, zeta)` on the grid.
    pub fn from_fn(n_theta: usize, n_zeta: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (d0, d1) = Self::spacing_for(n_theta, n_zeta);
        let values = (0..n_theta)
            .flat_map(|i| (0..n_zeta).map(move |j| (i, j)))
            .map(|(i, j)| f(i as f64 * d0, j as f64 * d1))
            .collect();
        Self::new(n_theta, n_zeta, values)
    }

    fn spacing_for(n_theta: usize, n_zeta: usize) -> (f64, f64) {
        let tau = std::f64::consts::TAU;
        (tau / n_theta as f64, tau / n_zeta.max(1) as f64)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_zeta(&self) -> usize {
        self.n_zeta
    }

    /// Grid spacings (d_theta, d_zeta).
    pub fn spacing(&self) -> (f64, f64) {
        Self::spacing_for(self.n_theta, self.n_zeta)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_zeta + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Fourier coefficients of grid samples, truncated to `|k| <= k_max`, `l <= l_max`.
pub fn analyze(g: &GridField, k_max: usize, l_max: usize, ell: f64) -> Result<SpectralField> {
    let lattice = Lattice::new(k_max, l_max, ell)?;
    if g.n_theta <= 2 * k_max || g.n_zeta <= 2 * l_max {
        return Err(RimflowError::InvalidParameter(format!(
            "grid {} x {} too coarse for K={k_max}, L={l_max}",
            g.n_theta, g.n_zeta
        )));
    }
    let grid = Grid { n0: g.n_theta, n1: g.n_zeta, data: g.values.iter().map(|&v| Complex64::new(v, 0.0)).collect() };
    let (coeffs, mismatch) = grid.forward().fold_even(&lattice);
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm())).max(f64::MIN_POSITIVE);
    if mismatch / scale > 1e-10 {
        return Err(RimflowError::NonEven { asymmetry: mismatch / scale });
    }
    let mut f = SpectralField::from_coeffs(lattice, coeffs, false)?;
    f.symmetrize_reality();
    Ok(f)
}

/// Evaluates a real field on an `n_theta x n_zeta` grid.
pub fn synthesize(f: &SpectralField, n_theta: usize, n_zeta: usize) -> Result<GridField> {
    let lat = f.lattice();
    if n_theta <= 2 * lat.k_max()
        || n_zeta <= 2 * lat.l_max()
        || !n_theta.is_multiple_of(2)
        || !n_zeta.is_multiple_of(2)
    {
        return Err(RimflowError::InvalidParameter(format!(
            "grid {n_theta} x {n_zeta} must be even and exceed 2K={} x 2L={}",
            2 * lat.k_max(),
            2 * lat.l_max()
        )));
    }
    if !f.is_real() {
        return Err(RimflowError::InvalidParameter("synthesize needs a real field".into()));
    }
    let grid = Grid::from_even(n_theta, n_zeta, lat, f.coeffs());
    GridField::new(n_theta, n_zeta, grid.data.iter().map(|c| c.re).collect())
}

/// Default dealiased grid size (theta, zeta) for a lattice, at least twice the
/// number of stored modes per direction.
pub fn default_grid_size(lattice: &Lattice) -> (usize, usize) {
    (fft_size(2 * (2 * lattice.k_max() + 1)), fft_size(2 * (2 * lattice.l_max() + 1)))
}

/// Minimum value of a real field, sampled on its default grid.
pub fn grid_min(f: &SpectralField) -> f64 {
    let (n0, n1) = default_grid_size(f.lattice());
    let g = Grid::from_even(n0, n1, f.lattice(), f.coeffs());
    g.data.iter().map(|c| c.re).fold(f64::INFINITY, f64::min)
}

pub fn d_theta(f: &SpectralField) -> SpectralField {
    f.map_modes(|k, _| I * k as f64)
}

pub fn laplacian_ell(f: &SpectralField) -> SpectralField {
    let lat = *f.lattice();
    f.map_modes(|k, l| Complex64::new(-lat.wavenumber_sq(k, l as i64), 0.0))
}

/// Coefficients on the full signed lattice `|k| <= K`, `|l| <= L`; used for
/// intermediate quantities that are odd in zeta.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedField {
    lattice: Lattice,
    coeffs: Vec<Complex64>,
}

impl SignedField {
    fn index(&self, k: i64, l: i64) -> usize {
        let width = 2 * self.lattice.l_max() + 1;
        (k + self.lattice.k_max() as i64) as usize * width + (l + self.lattice.l_max() as i64) as usize
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn get(&self, k: i64, l: i64) -> Complex64 {
        if self.lattice.contains(k, l) {
            self.coeffs[self.index(k, l)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn from_fn(lattice: Lattice, f: impl Fn(i64, i64) -> Complex64) -> Self {
        let (km, lm) = (lattice.k_max() as i64, lattice.l_max() as i64);
        let coeffs = (-km..=km).flat_map(|k| (-lm..=lm).map(move |l| (k, l))).map(|(k, l)| f(k, l)).collect();
        Self { lattice, coeffs }
    }
}

/// Scaled gradient `(d_theta f, (pi/ell) d_zeta f)` on the signed lattice.
pub fn gradient_ell(f: &SpectralField) -> (SignedField, SignedField) {
    let lat = *f.lattice();
    let s = lat.axial_scale();
    let gt = SignedField::from_fn(lat, |k, l| I * k as f64 * f.get(k, l));
    let gz = SignedField::from_fn(lat, |k, l| I * (s * l as f64) * f.get(k, l));
    (gt, gz)
}

/// Scaled divergence of a vector field whose result is even in zeta.
pub fn divergence_ell(theta: &SignedField, zeta: &SignedField) -> Result<SpectralField> {
    let lat = *theta.lattice();
    let s = lat.axial_scale();
    let full = |k: i64, l: i64| I * k as f64 * theta.get(k, l) + I * (s * l as f64) * zeta.get(k, l);
    let mut coeffs = Vec::with_capacity(lat.len());
    let mut mismatch: f64 = 0.0;
    let mut scale: f64 = f64::MIN_POSITIVE;
    for (k, l) in lat.modes() {
        let (a, b) = (full(k, l as i64), full(k, -(l as i64)));
        mismatch = mismatch.max((a - b).norm());
        scale = scale.max(a.norm());
        coeffs.push((a + b) * 0.5);
    }
    if mismatch / scale > 1e-10 {
        return Err(RimflowError::NonEven { asymmetry: mismatch / scale });
    }
    SpectralField::from_coeffs(lat, coeffs, false)
}

/// Finishes a nonlinear result: real inputs give a real output, whose
/// conjugate symmetry is asserted relative to `scale` and then enforced exactly.
fn finish(lattice: Lattice, coeffs: Vec<Complex64>, real: bool, scale: f64) -> SpectralField {
    let mut out = SpectralField::from_coeffs(lattice, coeffs, false).expect("lattice length");
    if real {
        debug_assert!(
            out.reality_defect_abs() <= 1e-12 * scale.max(1.0),
            "reality defect {} at scale {scale}",
            out.reality_defect_abs()
        );
        out.symmetrize_reality();
    }
    out
}

/// Exact Galerkin projection of a product of fields onto `out`.
pub fn product(factors: &[&SpectralField], out: Lattice) -> SpectralField {
    assert!(!factors.is_empty());
    let ks: usize = factors.iter().map(|f| f.lattice().k_max()).sum();
    let ls: usize = factors.iter().map(|f| f.lattice().l_max()).sum();
    let kmax = factors.iter().map(|f| f.lattice().k_max()).max().unwrap_or(0);
    let lmax = factors.iter().map(|f| f.lattice().l_max()).max().unwrap_or(0);
    let n0 = fft_size((ks + out.k_max()).max(2 * kmax) + 1);
    let n1 = fft_size((ls + out.l_max()).max(2 * lmax) + 1);
    let mut acc = Grid::from_even(n0, n1, factors[0].lattice(), factors[0].coeffs());
    for f in &factors[1..] {
        assert!(f.lattice().same_geometry(&out));
        let g = Grid::from_even(n0, n1, f.lattice(), f.coeffs());
        acc = acc.zip_map(&g, |a, b| a * b);
    }
    let (coeffs, _) = acc.forward().fold_even(&out);
    let scale = factors.iter().map(|f| f.abs_sum()).product();
    finish(out, coeffs, factors.iter().all(|f| f.is_real()), scale)
}

/// `h^3` without truncation error, on the lattice with three times the orders.
pub fn cube(h: &SpectralField) -> SpectralField {
    let lat = h.lattice();
    product(&[h, h, h], lat.with_truncation(3 * lat.k_max(), 3 * lat.l_max()))
}

/// Mobility operator `div(u grad(lap v + v))` with the scaled operators,
/// returned on the lattice of `v`.
pub fn mobility_apply(u: &SpectralField, v: &SpectralField) -> SpectralField {
    mobility_apply_to(u, v, *v.lattice())
}

/// As [`mobility_apply`], projected onto an arbitrary output lattice.
pub fn mobility_apply_to(u: &SpectralField, v: &SpectralField, out: Lattice) -> SpectralField {
    assert!(u.lattice().same_geometry(v.lattice()) && out.same_geometry(v.lattice()));
    let (lu, lv) = (u.lattice(), v.lattice());
    let n0 = fft_size((lu.k_max() + lv.k_max() + out.k_max()).max(2 * lu.k_max().max(lv.k_max())) + 1);
    let n1 = fft_size((lu.l_max() + lv.l_max() + out.l_max()).max(2 * lu.l_max().max(lv.l_max())) + 1);
    let s = lv.axial_scale();
    let ug = Grid::from_even(n0, n1, lu, u.coeffs());
    let w = |k: i64, l: i64| (1.0 - lv.wavenumber_sq(k, l)) * v.get(k, l);
    let gt = Grid::synthesize_with(n0, n1, lv.k_max(), lv.l_max(), |k, l| I * k as f64 * w(k, l));
    let gz = Grid::synthesize_with(n0, n1, lv.k_max(), lv.l_max(), |k, l| I * (s * l as f64) * w(k, l));
    let ft = ug.zip_map(&gt, |a, b| a * b).forward();
    let fz = ug.zip_map(&gz, |a, b| a * b).forward();
    let coeffs = out
        .modes()
        .map(|(k, l)| {
            let l = l as i64;
            let plus = I * k as f64 * ft.coeff(k, l) + I * (s * l as f64) * fz.coeff(k, l);
            let minus = I * k as f64 * ft.coeff(k, -l) - I * (s * l as f64) * fz.coeff(k, -l);
            (plus + minus) * 0.5
        })
        .collect();
    let smax = lv.wavenumber_sq(lv.k_max() as i64, lv.l_max() as i64) + 1.0;
    finish(out, coeffs, u.is_real() && v.is_real(), u.abs_sum() * v.abs_sum() * smax * smax)
}

/// Projection onto the neutral modes: `e^{+-i theta}`, plus `cos zeta` when ell = pi.
pub fn project_p1(f: &SpectralField) -> SpectralField {
    let lat = *f.lattice();
    let keep_axial = lat.is_ell_pi();
    f.map_modes(|k, l| {
        let keep = (k.abs() == 1 && l == 0) || (keep_axial && k == 0 && l == 1);
        Complex64::new(if keep { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Everything except the mean and the neutral modes.
pub fn project_pgeq2(f: &SpectralField) -> SpectralField {
    let p1 = project_p1(f);
    let mut out = f - &p1;
    let mean = f.get(0, 0);
    let idx = f.lattice().index(0, 0);
    out.coeffs_mut()[idx] -= mean;
    out
}

fn weighted_sum(f: &SpectralField, weight: impl Fn(i64, usize) -> f64) -> f64 {
    f.lattice()
        .modes()
        .zip(f.coeffs())
        .map(|((k, l), c)| {
            let mult = if l == 0 { 1.0 } else { 2.0 };
            mult * weight(k, l) * c.norm_sqr()
        })
        .sum()
}

/// `(sum (1 + k^2 + l^2)^s |c|^2)^{1/2}` over the full lattice.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    weighted_sum(f, |k, l| (1.0 + (k * k) as f64 + (l * l) as f64).powf(s)).sqrt()
}

/// As [`sobolev_norm`] without the `+1`, omitting the mean.
pub fn homogeneous_norm(f: &SpectralField, s: f64) -> f64 {
    weighted_sum(f, |k, l| if k == 0 && l == 0 { 0.0 } else { ((k * k) as f64 + (l * l) as f64).powf(s) }).sqrt()
}

/// `1/2 sum_{(k,l) != 0} (k^2 + (pi/ell)^2 l^2 - 1) |c|^2`; vanishes on the
/// neutral modes and is non-negative for ell <= pi.
pub fn energy(f: &SpectralField) -> f64 {
    let lat = *f.lattice();
    0.5 * weighted_sum(f, |k, l| if k == 0 && l == 0 { 0.0 } else { lat.wavenumber_sq(k, l as i64) - 1.0 })
}

/// H^1 distance to the manifold of neutral states, `|P_{>=2} f|_{H^1}`.
pub fn manifold_distance(f: &SpectralField) -> f64 {
    sobolev_norm(&project_pgeq2(f), 1.0)
}
