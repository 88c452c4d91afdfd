//! Numerical laboratory for the loss of regularity of the hyperbolic
//! magnetic Schrödinger equation `u_tt + b(t)^2 (i d/dx + a(x))^2 u = 0`.
//!
//! The crate computes the eigenbasis of the one-dimensional magnetic
//! operator, solves the decoupled single-mode equations by three independent
//! routes (adaptive integration, matrizant series, two-step diagonalization),
//! checks the resulting energy estimates against the `nu`-dependent loss
//! weight, and rebuilds the oscillating-coefficient family showing that the
//! weight cannot be improved.

pub mod coeffs;
pub mod counterexample;
pub mod energy;
mod error;
pub mod exprlang;
pub mod linalg;
pub mod modesolve;
pub mod quad;
pub mod spectral;
pub mod table;
pub mod zones;

pub use error::{Error, Result};
