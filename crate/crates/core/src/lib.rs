//! Patterson-Sullivan, Wigner and invariant Ruelle distributions for Laplace
//! eigenfunctions on finite `(q+1)`-regular graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: regular graphs, directed edges, non-backtracking paths.
//! - [`spectral`]: the normalized Laplacian, its eigenspaces and the
//!   spectral parameters `z = q^{is}`, `mu = sqrt(q) z`.
//! - [`resonant`]: resonant and co-resonant states of the non-backtracking
//!   operator, kernels, and the geodesic pairing.
//! - [`symbols`]: cylinder symbols, refinement, the transfer power and the
//!   branch operator.
//! - [`distributions`]: Wigner, Patterson-Sullivan and Ruelle distributions.
//! - [`cover`]: the truncated universal cover, the classical oracle.
//! - [`verify`]: identity suites and machine-readable reports.

pub mod cover;
pub mod distributions;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod resonant;
pub mod spectral;
pub mod symbols;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
