//! Shared numerical kernels: quadrature, bracketed root finding, dense
//! eigensolvers, matrix exponentials and exponential-rate fitting.

pub mod dense;
pub mod expm;
pub mod fit;
pub mod interp;
pub mod matrix;
pub mod quadrature;
pub mod roots;
pub mod symeig;
pub mod tridiag;

pub use dense::{dense_eigenvalues, dense_spectrum, eigenvector_for, normalise_phase, DenseSpectrum};
pub use expm::expm;
pub use fit::{fit_exp_rate, value_window};
pub use interp::{MonotoneCubic, Tabulated};
pub use matrix::DMat;
pub use quadrature::{gauss_legendre, integrate, QuadratureRule};
pub use roots::{find_roots, find_roots_fallible};
pub use symeig::{sym_eig, EigenSystem};
pub use tridiag::solve_tridiagonal;

/// Absolute tolerance used to cluster eigenvalues into one multiplicity group.
pub const EIGEN_CLUSTER_TOL: f64 = 1e-8;
