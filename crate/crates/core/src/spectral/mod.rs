//! Even-in-zeta truncated Fourier fields on the torus and the operators acting
//! on them.

mod fft;
mod field;
mod format;
mod lattice;
mod ops;

pub use fft::fft_size;
pub use field::SpectralField;
pub use format::{field_to_string, read_field, write_field};
pub use lattice::Lattice;
pub use ops::{
    analyze, cube, d_theta, default_grid_size, divergence_ell, energy, gradient_ell, grid_min, homogeneous_norm,
    laplacian_ell, manifold_distance, mobility_apply, mobility_apply_to, product, project_p1, project_pgeq2,
    sobolev_norm, synthesize, GridField, SignedField,
};

pub(crate) use fft::Grid;
