//! Zeta-regularized determinants of Laplacians on flat complex tori.

pub mod epstein;
pub mod error;
pub mod exterior;
pub mod kuranishi;
pub mod lattice;
pub mod linalg;
pub mod modular;
pub mod moduli;
pub mod report;
pub mod special;
pub mod spectral;
pub mod summation;
pub mod torus;

pub use error::{Error, Result};
pub use report::{Status, VerificationReport};
