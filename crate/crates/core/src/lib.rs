//! Pseudospectral solvers for the three-dimensional capillary rimming-flow
//! thin-film equation on the torus.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod evolve;
pub mod linalg;
pub mod slowode;
pub mod spectral;
pub mod spectrum;
pub mod steady;

pub use error::{Result, RimflowError};
pub use num_complex::Complex64;
pub use spectral::{GridField, Lattice, SpectralField};
