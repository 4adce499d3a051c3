//! Steerability of symmetric two-mode Gaussian states under Gaussian
//! (quadrature) and non-Gaussian (Fock-projective) measurements.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod observables;
pub mod oracle;
pub mod scan;
pub mod steering;

pub use error::{Error, Result};
