//! Report document assembly. One schema serves every command; blocks a
//! command does not produce are null. Field order in the rendered JSON is
//! alphabetical (the writer sorts keys), so adding a block never reorders
//! existing ones.

use serde_json::{json, Value};

use ptqm_core::linop::eig::EigenSystem;
use ptqm_core::metric::{CPTFrame, OrderConvention, Phase, SpectrumClassification};
use ptqm_core::observables::ObservableReport;
use ptqm_core::{CMatrix, Error};

use crate::config::ResolvedJob;
use crate::json::{complex, float};

pub const SCHEMA_VERSION: u64 = 1;

pub fn phase_label(phase: Phase) -> &'static str {
    match phase {
        Phase::Unbroken => "unbroken",
        Phase::Broken => "broken",
        Phase::PartiallyKept => "partially_kept",
    }
}

/// Stable snake-case class for a numerical error, for report consumers that
/// dispatch on failure kind rather than message text.
pub fn error_class(e: &Error) -> &'static str {
    match e {
        Error::BrokenPhase { .. } => "broken_phase",
        Error::MetricNotPositive { .. } => "metric_not_positive",
        Error::FrameInconsistent { .. } => "frame_inconsistent",
        Error::PhaseFixFailure { .. } => "phase_fix_failure",
        Error::DefectiveSpectrum { .. } => "defective_spectrum",
        Error::EigFailure { .. } => "eig_failure",
        Error::AmbiguousPairing { .. } => "ambiguous_pairing",
        Error::NonFinite { .. } => "non_finite",
        _ => "numerical",
    }
}

/// Spectrum block: the classification of the low modes, with the eigensolver
/// residual certificate per candidate (as certified at decomposition, before
/// any defective-mode poisoning).
pub fn spectrum_block(
    es: &EigenSystem,
    certificates: &[f64],
    cls: &SpectrumClassification,
) -> Value {
    let candidates: Vec<Value> = cls
        .candidates
        .iter()
        .enumerate()
        .map(|(pos, &k)| {
            json!({
                "index": k,
                "value": complex(es.values[k]),
                "real": cls.reality[pos],
                "kept": cls.kept.contains(&k),
                "residual": float(certificates[k]),
            })
        })
        .collect();
    json!({
        "phase": phase_label(cls.phase),
        "spectral_radius": float(cls.spectral_radius),
        "max_abs_im": float(cls.max_abs_im(es)),
        "kept_count": cls.kept.len(),
        "candidates": candidates,
    })
}

/// Spectrum block when the decomposition itself failed: no eigenvalues
/// exist, so the error is the content.
pub fn spectrum_error_block(e: &Error) -> Value {
    json!({
        "decomposed": false,
        "error": {
            "class": error_class(e),
            "message": e.to_string(),
        },
    })
}

fn residuals_value(frame: &CPTFrame) -> Value {
    json!({
        "c_squared": float(frame.residuals.c_squared),
        "commutant": float(frame.residuals.commutant),
        "pt_commutant": float(frame.residuals.pt_commutant),
        "theta_involution": float(frame.residuals.theta_involution),
        "eta_hermiticity": float(frame.residuals.eta_hermiticity),
        "eta_min_eigenvalue": float(frame.residuals.eta_min_eigenvalue),
        "pseudo_hermiticity": float(frame.residuals.pseudo_hermiticity),
    })
}

pub fn frame_block(frame: &CPTFrame) -> Value {
    json!({
        "constructed": true,
        "order_convention": match frame.order_convention {
            OrderConvention::PC => "pc",
            OrderConvention::CP => "cp",
        },
        "exact": frame.exact,
        "hamiltonian_symmetric": frame.hamiltonian_symmetric,
        "modes_kept": frame.modes_kept,
        "signs": frame.signs.clone(),
        "kept_values": frame.kept_values.iter().map(|v| float(*v)).collect::<Vec<_>>(),
        "residuals": residuals_value(frame),
        "error": Value::Null,
    })
}

/// Frame block for a failed construction: the diagnostics are the payload.
pub fn frame_error_block(e: &Error) -> Value {
    json!({
        "constructed": false,
        "error": {
            "class": error_class(e),
            "message": e.to_string(),
        },
    })
}

pub fn operator_value(report: &ObservableReport) -> Value {
    json!({
        "label": report.label,
        "dim": report.dim,
        "symmetric": report.symmetric,
        "symmetric_residual": float(report.symmetric_residual),
        "pt_symmetric": report.pt_symmetric,
        "pt_residual": float(report.pt_residual),
        "def1_applicable": report.def1_applicable,
        "def1_residual": float(report.def1_residual),
        "eq2_residual_pc": float(report.eq2_residual_pc),
        "eq2_residual_cp": float(report.eq2_residual_cp),
        "def2_residual": float(report.def2_residual),
        "requirement_i": {
            "pass": report.requirement_i.pass,
            "max_abs_im": float(report.requirement_i.max_abs_im),
        },
        "requirement_ii": {
            "pass": report.requirement_ii.pass,
            "gram_deviation": float(report.requirement_ii.gram_deviation),
            "completeness_deviation": float(report.requirement_ii.completeness_deviation),
        },
        "matrix_element": {
            "pass": report.matrix_element_pass,
            "max_asymmetry": float(report.matrix_element_asymmetry),
        },
        "verdict": report.verdict.as_str(),
    })
}

/// Operator row when no frame exists: symmetry flags where the matrix is
/// available, verdict inapplicable, every frame-dependent audit null.
pub fn frameless_operator_value(
    label: &str,
    matrix: Option<&CMatrix>,
    par: &CMatrix,
    tau: f64,
) -> Value {
    match matrix {
        Some(a) => {
            let flags = ptqm_core::observables::symmetry_flags(a, par)
                .expect("dimension-checked operator");
            json!({
                "label": label,
                "dim": a.dim(),
                "symmetric": flags.symmetric_residual <= tau,
                "symmetric_residual": float(flags.symmetric_residual),
                "pt_symmetric": flags.pt_residual <= tau,
                "pt_residual": float(flags.pt_residual),
                "verdict": "inapplicable",
            })
        }
        None => json!({
            "label": label,
            "note": "requires a constructed frame",
            "verdict": "inapplicable",
        }),
    }
}

pub fn document(
    command: &str,
    job: &ResolvedJob,
    spectrum: Value,
    frame: Value,
    operators: Vec<Value>,
) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": job.echo(),
        "spectrum": spectrum,
        "frame": frame,
        "operators": operators,
    })
}
