use std::f64::consts::PI;

use crate::error::{Result, RimflowError};

/// Truncated Fourier lattice on the torus (theta, zeta), stored for l >= 0
/// only since every field is even in zeta.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    k_max: usize,
    l_max: usize,
    ell: f64,
}

impl Lattice {
    pub fn new(k_max: usize, l_max: usize, ell: f64) -> Result<Self> {
        if k_max < 2 || l_max < 2 {
            return Err(RimflowError::InvalidParameter(format!(
                "truncation K={k_max}, L={l_max}: both must be at least 2"
            )));
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(RimflowError::InvalidParameter(format!("cylinder length ell={ell} must be positive")));
        }
        Ok(Self { k_max, l_max, ell })
    }

    /// Lattice without the minimum-size checks, for reduced internal problems.
    pub(crate) fn raw(k_max: usize, l_max: usize, ell: f64) -> Self {
        Self { k_max, l_max, ell }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Axial wavenumber scale pi / ell.
    pub fn axial_scale(&self) -> f64 {
        PI / self.ell
    }

    pub fn len(&self) -> usize {
        (2 * self.k_max + 1) * (self.l_max + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64, l: i64) -> bool {
        k.unsigned_abs() as usize <= self.k_max && l.unsigned_abs() as usize <= self.l_max
    }

    /// Storage index of mode (k, l) with l >= 0, k-major.
    pub fn index(&self, k: i64, l: usize) -> usize {
        debug_assert!(self.contains(k, l as i64));
        (k + self.k_max as i64) as usize * (self.l_max + 1) + l
    }

    pub fn mode(&self, index: usize) -> (i64, usize) {
        let k = (index / (self.l_max + 1)) as i64 - self.k_max as i64;
        (k, index % (self.l_max + 1))
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        (0..self.len()).map(move |i| self.mode(i))
    }

    /// k^2 + (pi/ell)^2 l^2, the symbol of -Laplacian.
    pub fn wavenumber_sq(&self, k: i64, l: i64) -> f64 {
        let s = self.axial_scale();
        (k * k) as f64 + s * s * (l * l) as f64
    }

    pub fn with_truncation(&self, k_max: usize, l_max: usize) -> Self {
        Self { k_max, l_max, ell: self.ell }
    }

    /// True when ell equals pi up to rounding of a typed-in decimal.
    pub fn is_ell_pi(&self) -> bool {
        (self.ell - PI).abs() <= 1e-9 * PI
    }

    /// Returns n when ell = n pi for a positive integer n.
    pub fn ell_over_pi(&self) -> Option<usize> {
        let r = self.ell / PI;
        let n = r.round();
        (n >= 1.0 && (r - n).abs() <= 1e-9 * r.max(1.0)).then_some(n as usize)
    }

    pub(crate) fn same_geometry(&self, other: &Lattice) -> bool {
        self.ell == other.ell
    }
}
