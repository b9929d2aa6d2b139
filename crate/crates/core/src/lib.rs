//! Estimation of `Tr(F(A) rho)` from integral representations over unitaries:
//! Hadamard-test shots at quadrature nodes combined by Monte Carlo,
//! quasi-Monte Carlo (Halton), trapezoid or Simpson rules.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod integrands;
pub mod models;
pub mod operators;
pub mod quadrature;
pub mod shots;
pub mod special;

pub use error::{Error, Result};
