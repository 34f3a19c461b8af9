use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::lattice::Lattice;
use crate::error::{Result, RimflowError};

/// Fourier coefficients `c[k, l]` of a field even in zeta,
/// `v = sum_{k, l} c[k, l] e^{i k theta} e^{i l zeta}` with `c[k, -l] = c[k, l]`,
/// so a stored mode with l > 0 stands for `2 e^{i k theta} cos(l zeta)`.
///
/// Real fields additionally satisfy `c[-k, l] = conj(c[k, l])`; the `real`
/// flag records whether that symmetry is maintained.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    lattice: Lattice,
    real: bool,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(lattice: Lattice) -> Self {
        Self { lattice, real: true, coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()] }
    }

    pub fn zeros_complex(lattice: Lattice) -> Self {
        Self { real: false, ..Self::zeros(lattice) }
    }

    pub fn constant(lattice: Lattice, value: f64) -> Self {
        let mut f = Self::zeros(lattice);
        f.set(0, 0, Complex64::new(value, 0.0));
        f
    }

    /// Builds a field from raw coefficients in storage order. Real fields are
    /// checked for conjugate symmetry.
    pub fn from_coeffs(lattice: Lattice, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(RimflowError::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        let f = Self { lattice, real, coeffs };
        if real {
            let defect = f.reality_defect();
            if defect > 1e-12 {
                return Err(RimflowError::RealityViolation { defect });
            }
        }
        Ok(f)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Raw mutable access; the caller is responsible for keeping the reality
    /// symmetry if the field is flagged real.
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode (k, l); any sign of l, zero outside the lattice.
    pub fn get(&self, k: i64, l: i64) -> Complex64 {
        if self.lattice.contains(k, l) {
            self.coeffs[self.lattice.index(k, l.unsigned_abs() as usize)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Sets mode (k, l). For real fields the conjugate partner (-k, l) is set
    /// too, and the imaginary part of k = 0 modes is dropped.
    pub fn set(&mut self, k: i64, l: usize, value: Complex64) {
        let lat = self.lattice;
        if self.real {
            if k == 0 {
                self.coeffs[lat.index(0, l)] = Complex64::new(value.re, 0.0);
            } else {
                self.coeffs[lat.index(k, l)] = value;
                self.coeffs[lat.index(-k, l)] = value.conj();
            }
        } else {
            self.coeffs[lat.index(k, l)] = value;
        }
    }

    pub fn mean(&self) -> f64 {
        self.get(0, 0).re
    }

    /// Largest `|c[k,l] - conj(c[-k,l])|` relative to the largest coefficient.
    pub fn reality_defect(&self) -> f64 {
        self.reality_defect_abs() / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Largest `|c[k,l] - conj(c[-k,l])|`.
    pub fn reality_defect_abs(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, l) in self.lattice.modes() {
            if k < 0 {
                continue;
            }
            let d = (self.get(k, l as i64) - self.get(-k, l as i64).conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    /// Projects onto conjugate-symmetric coefficients and flags the field real.
    pub fn symmetrize_reality(&mut self) {
        let lat = self.lattice;
        for k in 0..=lat.k_max() as i64 {
            for l in 0..=lat.l_max() {
                let a = self.coeffs[lat.index(k, l)];
                let b = self.coeffs[lat.index(-k, l)];
                let avg = (a + b.conj()) * 0.5;
                self.coeffs[lat.index(k, l)] = avg;
                self.coeffs[lat.index(-k, l)] = avg.conj();
            }
        }
        self.real = true;
    }

    pub fn into_real(mut self) -> Self {
        self.symmetrize_reality();
        self
    }

    pub fn into_complex(mut self) -> Self {
        self.real = false;
        self
    }

    /// Sum of coefficient moduli over the full lattice, a bound on the sup norm.
    pub fn abs_sum(&self) -> f64 {
        self.lattice.modes().zip(&self.coeffs).map(|((_, l), c)| if l == 0 { c.norm() } else { 2.0 * c.norm() }).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Square of the L2 norm over the torus, normalised by its area.
    pub fn l2_norm_sq(&self) -> f64 {
        self.lattice
            .modes()
            .zip(&self.coeffs)
            .map(|((_, l), c)| if l == 0 { c.norm_sqr() } else { 2.0 * c.norm_sqr() })
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Function conjugate: the field whose values are the complex conjugates,
    /// `out[k, l] = conj(c[-k, l])`.
    pub fn conj_field(&self) -> Self {
        let lat = self.lattice;
        let mut out = self.clone();
        for (i, (k, l)) in lat.modes().enumerate() {
            out.coeffs[i] = self.coeffs[lat.index(-k, l)].conj();
        }
        out
    }

    /// Real part of the represented function.
    pub fn real_part(&self) -> Self {
        let mut out = (self + &self.conj_field()) * 0.5;
        out.symmetrize_reality();
        out
    }

    /// Multiplies each mode by `symbol(k, l)`.
    pub fn map_modes(&self, symbol: impl Fn(i64, usize) -> Complex64) -> Self {
        let mut out = self.clone();
        for (c, (k, l)) in out.coeffs.iter_mut().zip(self.lattice.modes()) {
            *c *= symbol(k, l);
        }
        out
    }

    pub fn scale_complex(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= z);
        out.real = self.real && z.im == 0.0;
        out
    }

    /// Adds `alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) {
        self.check_compatible(other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += *b * alpha;
        }
        self.real &= other.real;
    }

    /// Copies onto another truncation, dropping or zero-padding modes.
    pub fn resized(&self, k_max: usize, l_max: usize) -> Self {
        let lat = self.lattice.with_truncation(k_max, l_max);
        let mut out = Self { lattice: lat, real: self.real, coeffs: vec![Complex64::new(0.0, 0.0); lat.len()] };
        for (i, (k, l)) in lat.modes().enumerate() {
            out.coeffs[i] = self.get(k, l as i64);
        }
        out
    }

    /// Largest |k| and l carrying a coefficient above `tol * max_abs`.
    pub fn support(&self, tol: f64) -> (usize, usize) {
        let cut = tol * self.max_abs();
        let mut ks = 0;
        let mut ls = 0;
        for ((k, l), c) in self.lattice.modes().zip(&self.coeffs) {
            if c.norm() > cut {
                ks = ks.max(k.unsigned_abs() as usize);
                ls = ls.max(l);
            }
        }
        (ks, ls)
    }

    fn check_compatible(&self, other: &SpectralField) {
        assert!(self.lattice == other.lattice, "incompatible lattices: {:?} vs {:?}", self.lattice, other.lattice);
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(mut self, rhs: f64) -> SpectralField {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.clone() * rhs
    }
}

impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self * -1.0
    }
}
