//! Finite-dimensional PT-symmetric quantum mechanics.
//!
//! The crate builds discretized PT-symmetric Hamiltonians, classifies their
//! spectra, constructs the spectral `C` operator and the positive metric
//! `eta = Par * C` from biorthogonal eigenpairs, and audits candidate
//! observables against two inequivalent notions of "observable":
//!
//! * transpose symmetry under the combined CPT map
//!   (`A^T = (C*Par) * conj(A) * conj(C*Par)` on the kept span), and
//! * Hermiticity of `eta * A`, equivalently self-adjointness under the
//!   CPT inner product.
//!
//! Everything is dense and double precision. Construction never trusts a
//! formula it can verify: every frame is gated on explicit residual checks
//! and refuses to exist if the checks fail.

pub mod error;
pub mod linop;
pub mod metric;
pub mod models;
pub mod observables;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::Error;
pub use linop::{CMatrix, Tolerances, C64};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
