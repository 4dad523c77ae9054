//! Error taxonomy shared across the crate.
//!
//! Variants are grouped by origin: input validation, eigeniteration,
//! model construction, expression parsing, and frame construction or
//! verification. The CLI maps the groups to exit codes, so variants carry
//! enough structure for that mapping and for tests to assert on.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Operands of an operation have incompatible dimensions.
    #[error("dimension mismatch: {left} vs {right} in {context}")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    /// A matrix or vector entry is NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Tolerances failed validation.
    #[error("invalid tolerances: {reason}")]
    BadTolerances { reason: String },

    /// The QR iteration failed to converge on some eigenvalue.
    #[error("eigeniteration failed to converge at index {index} after {sweeps} sweeps")]
    EigFailure { index: usize, sweeps: usize },

    /// Left/right eigenvalue matching found two distinct candidates too close
    /// to call.
    #[error(
        "ambiguous left/right eigenvalue pairing for lambda = {value}: \
         competing candidates separated by {separation:.3e} (threshold {threshold:.3e})"
    )]
    AmbiguousPairing {
        value: String,
        separation: f64,
        threshold: f64,
    },

    /// A left/right pair is numerically orthogonal, so the eigenvector basis
    /// cannot be biorthonormalized (defective or near-defective matrix).
    #[error(
        "defective spectrum: |chi^H phi| = {pairing:.3e} at mode {mode} is below \
         the floor {floor:.3e}"
    )]
    DefectiveSpectrum { mode: usize, pairing: f64, floor: f64 },

    /// Grid parameters cannot produce a symmetric interior lattice.
    #[error("bad grid: N = {n}, half-width = {half_width}; need N >= 3 and half-width > 0")]
    BadGrid { n: usize, half_width: f64 },

    /// Model parameter outside its validity window.
    #[error("{parameter} = {value} outside the allowed domain {domain}")]
    BadModelParameter {
        parameter: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Epsilon outside the open interval (-1, 2) where the lattice branch
    /// rule represents the analytic continuation.
    #[error("epsilon = {epsilon} outside the branch window (-1, 2)")]
    BranchDomain { epsilon: f64 },

    /// Potential expression failed to parse.
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },

    /// Potential expression parsed but is not a polynomial.
    #[error("non-polynomial construct at offset {position}: {what}")]
    NonPolynomial { position: usize, what: String },

    /// Kept-candidate eigenvalues include complex pairs: PT symmetry is
    /// spontaneously broken and no frame exists.
    #[error(
        "PT-broken spectrum: {complex_count} of {candidate_count} kept-candidate \
         eigenvalues fail the reality test (max |Im| = {max_im:.3e} relative)"
    )]
    BrokenPhase {
        complex_count: usize,
        candidate_count: usize,
        max_im: f64,
    },

    /// No global phase makes an eigenvector PT-invariant, or its PT norm
    /// vanishes (exceptional point).
    #[error(
        "cannot phase-fix mode {mode}: PT-invariance residual {residual:.3e}, \
         |PT norm| = {pt_norm:.3e}"
    )]
    PhaseFixFailure { mode: usize, residual: f64, pt_norm: f64 },

    /// The candidate metric is not Hermitian positive under either operator
    /// ordering. Carries the diagnostics for both.
    #[error(
        "metric not positive under either ordering: \
         Par*C has Hermiticity residual {herm_pc:.3e} and min kept-span eigenvalue \
         {min_eig_pc:.3e}; C*Par has {herm_cp:.3e} and {min_eig_cp:.3e}"
    )]
    MetricNotPositive {
        herm_pc: f64,
        min_eig_pc: f64,
        herm_cp: f64,
        min_eig_cp: f64,
    },

    /// A frame invariant failed at construction or verification time.
    #[error("frame inconsistent: {check} residual {residual:.3e} exceeds {tolerance:.3e}")]
    FrameInconsistent {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },
}

impl Error {
    /// True for errors that arise from invalid configuration or input text
    /// rather than from numerics. The CLI exits 2 on these, 1 on the rest.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::BadGrid { .. }
                | Error::BadModelParameter { .. }
                | Error::BranchDomain { .. }
                | Error::Syntax { .. }
                | Error::NonPolynomial { .. }
                | Error::BadTolerances { .. }
        )
    }
}
