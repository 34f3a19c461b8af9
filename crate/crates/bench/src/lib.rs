//! Fixtures shared by the benchmarks.

use rimflow_core::slowode::ManifoldPoint;
use rimflow_core::{Complex64, Lattice, SpectralField};

/// A smooth positive field with every mode of the lattice populated.
pub fn smooth_field(lattice: Lattice) -> SpectralField {
    let mut h = SpectralField::constant(lattice, 1.0);
    for (k, l) in lattice.modes() {
        if k > 0 || (k == 0 && l > 0) {
            let decay = 0.05 * (-0.6 * (k.abs() as f64 + l as f64)).exp();
            h.set(k, l, Complex64::new(decay, 0.5 * decay));
        }
    }
    h
}

/// A manifold point with axial dependence, away from the b = 0 fast path.
pub fn axial_point() -> ManifoldPoint {
    ManifoldPoint { a1: Complex64::new(0.2, -0.1), b: 0.3, m: 1.0 }
}
