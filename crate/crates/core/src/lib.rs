//! Numerical toolkit for fixed-energy inverse scattering of the magnetic
//! Schrödinger operator `H = Σ (D_j + A_j)² + V` in three dimensions.

pub mod cauchy;
pub mod cgo;
pub mod coeffs;
pub mod direct;
pub mod error;
pub mod faddeev;
pub mod grid;
pub mod krylov;
pub mod quadrature;
pub mod recon;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
