//! Frame persistence. Saved frames carry both the spectral data (kept
//! vectors, signs, parity) and the assembled matrices; the loader rebuilds
//! the matrices from the spectral data, demands agreement with the stored
//! copies, and re-verifies every frame invariant. A frame file is never
//! trusted: corruption that survives parsing is caught by the rebuild or
//! the invariant gates.

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use ptqm_core::linop::Tolerances;
use ptqm_core::metric::{CPTFrame, FrameResiduals, OrderConvention};
use ptqm_core::{CMatrix, Error, C64};

use crate::error::{at_path, CliError, Result};
use crate::json::{complex, float, render};

/// Relative agreement demanded between stored matrices and their rebuild
/// from the stored spectral data. Identical arithmetic on identical bytes
/// leaves only instruction-level slack.
pub const REBUILD_TOL: f64 = 1e-12;

fn matrix_value(m: &CMatrix) -> Value {
    let dim = m.dim();
    Value::Array(
        (0..dim)
            .map(|i| Value::Array((0..dim).map(|j| complex(m.at(i, j))).collect()))
            .collect(),
    )
}

fn vector_value(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|z| complex(*z)).collect())
}

/// Serializes the frame to its canonical JSON document.
pub fn frame_document(frame: &CPTFrame) -> Value {
    json!({
        "schema_version": 1,
        "kind": "cpt_frame",
        "dim": frame.dim(),
        "exact": frame.exact,
        "hamiltonian_symmetric": frame.hamiltonian_symmetric,
        "modes_kept": frame.modes_kept,
        "order_convention": match frame.order_convention {
            OrderConvention::PC => "pc",
            OrderConvention::CP => "cp",
        },
        "weight": float(frame.weight),
        "signs": frame.signs.clone(),
        "kept_values": frame.kept_values.iter().map(|v| float(*v)).collect::<Vec<_>>(),
        "par": matrix_value(&frame.par),
        "c": matrix_value(&frame.c),
        "eta": matrix_value(&frame.eta),
        "eta_inv": matrix_value(&frame.eta_inv),
        "projector": matrix_value(&frame.projector),
        "kept_right": frame.kept_right.iter().map(|v| vector_value(v)).collect::<Vec<_>>(),
        "kept_left": frame.kept_left.iter().map(|v| vector_value(v)).collect::<Vec<_>>(),
        "residuals": {
            "c_squared": float(frame.residuals.c_squared),
            "commutant": float(frame.residuals.commutant),
            "pt_commutant": float(frame.residuals.pt_commutant),
            "theta_involution": float(frame.residuals.theta_involution),
            "eta_hermiticity": float(frame.residuals.eta_hermiticity),
            "eta_min_eigenvalue": float(frame.residuals.eta_min_eigenvalue),
            "pseudo_hermiticity": float(frame.residuals.pseudo_hermiticity),
        },
    })
}

pub fn save_frame(frame: &CPTFrame, path: &Path) -> Result<()> {
    at_path(path, std::fs::write(path, render(&frame_document(frame))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameFile {
    schema_version: u32,
    kind: String,
    dim: usize,
    exact: bool,
    hamiltonian_symmetric: bool,
    modes_kept: usize,
    order_convention: String,
    weight: f64,
    signs: Vec<i8>,
    kept_values: Vec<f64>,
    par: Vec<Vec<[f64; 2]>>,
    c: Vec<Vec<[f64; 2]>>,
    eta: Vec<Vec<[f64; 2]>>,
    eta_inv: Vec<Vec<[f64; 2]>>,
    projector: Vec<Vec<[f64; 2]>>,
    kept_right: Vec<Vec<[f64; 2]>>,
    kept_left: Vec<Vec<[f64; 2]>>,
    residuals: ResidualsFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualsFile {
    c_squared: f64,
    commutant: f64,
    pt_commutant: f64,
    theta_involution: f64,
    eta_hermiticity: f64,
    eta_min_eigenvalue: f64,
    pseudo_hermiticity: f64,
}

fn structure_error(detail: String) -> CliError {
    eprintln!("frame file: {detail}");
    CliError::Core(Error::FrameInconsistent {
        check: "frame file structure",
        residual: f64::NAN,
        tolerance: 0.0,
    })
}

fn decode_matrix(rows: &[Vec<[f64; 2]>], dim: usize, name: &str) -> Result<CMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(structure_error(format!("{name} is not a {dim}x{dim} matrix")));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for row in rows {
        for &[re, im] in row {
            data.push(C64::new(re, im));
        }
    }
    CMatrix::new(dim, data).map_err(CliError::from)
}

fn decode_vectors(rows: &[Vec<[f64; 2]>], count: usize, dim: usize, name: &str) -> Result<Vec<Vec<C64>>> {
    if rows.len() != count || rows.iter().any(|r| r.len() != dim) {
        return Err(structure_error(format!(
            "{name} is not a list of {count} vectors of dimension {dim}"
        )));
    }
    Ok(rows
        .iter()
        .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect())
}

/// Reads, rebuilds, and re-verifies a frame. Any disagreement between the
/// stored matrices and their assembly from the stored spectral data, or any
/// failed invariant, rejects the file.
pub fn load_frame(path: &Path, tol: &Tolerances) -> Result<CPTFrame> {
    let text = at_path(path, std::fs::read_to_string(path))?;
    let file: FrameFile =
        serde_json::from_str(&text).map_err(|e| structure_error(e.to_string()))?;

    if file.schema_version != 1 || file.kind != "cpt_frame" {
        return Err(structure_error(format!(
            "expected cpt_frame schema 1, got {} schema {}",
            file.kind, file.schema_version
        )));
    }
    let (dim, m) = (file.dim, file.modes_kept);
    if m == 0 || m > dim {
        return Err(structure_error(format!("modes_kept {m} out of range for dimension {dim}")));
    }
    if file.signs.len() != m || file.kept_values.len() != m {
        return Err(structure_error("signs/kept_values length differs from modes_kept".into()));
    }
    if file.signs.iter().any(|s| *s != 1 && *s != -1) {
        return Err(structure_error("signs must be +1 or -1".into()));
    }
    if !(file.weight > 0.0) || !file.weight.is_finite() {
        return Err(structure_error(format!("weight {} must be positive", file.weight)));
    }
    let order_convention = match file.order_convention.as_str() {
        "pc" => OrderConvention::PC,
        "cp" => OrderConvention::CP,
        other => return Err(structure_error(format!("unknown order convention {other:?}"))),
    };

    let par = decode_matrix(&file.par, dim, "par")?;
    let c = decode_matrix(&file.c, dim, "c")?;
    let eta = decode_matrix(&file.eta, dim, "eta")?;
    let eta_inv = decode_matrix(&file.eta_inv, dim, "eta_inv")?;
    let projector = decode_matrix(&file.projector, dim, "projector")?;
    let kept_right = decode_vectors(&file.kept_right, m, dim, "kept_right")?;
    let kept_left = decode_vectors(&file.kept_left, m, dim, "kept_left")?;

    // Rebuild C and Pi from the spectral data with the same rank-one
    // assembly used at construction; the stored matrices must agree.
    let mut c_rebuilt = CMatrix::zeros(dim);
    let mut pi_rebuilt = CMatrix::zeros(dim);
    for n in 0..m {
        let s = C64::new(file.signs[n] as f64, 0.0);
        for i in 0..dim {
            let phi_i = kept_right[n][i];
            for j in 0..dim {
                let outer = phi_i * kept_left[n][j].conj();
                pi_rebuilt.set(i, j, pi_rebuilt.at(i, j) + outer);
                c_rebuilt.set(i, j, c_rebuilt.at(i, j) + s * outer);
            }
        }
    }
    let (eta_rebuilt, eta_inv_rebuilt) = match order_convention {
        OrderConvention::PC => (par.mul(&c_rebuilt)?, c_rebuilt.mul(&par)?),
        OrderConvention::CP => (c_rebuilt.mul(&par)?, par.mul(&c_rebuilt)?),
    };
    let mut worst = 0.0f64;
    for (stored, rebuilt, _name) in [
        (&c, &c_rebuilt, "c"),
        (&projector, &pi_rebuilt, "projector"),
        (&eta, &eta_rebuilt, "eta"),
        (&eta_inv, &eta_inv_rebuilt, "eta_inv"),
    ] {
        let scale = stored.fro_norm().max(f64::MIN_POSITIVE);
        worst = worst.max(stored.distance(rebuilt)? / scale);
    }
    if !(worst <= REBUILD_TOL) {
        return Err(CliError::Core(Error::FrameInconsistent {
            check: "stored matrices match their spectral assembly",
            residual: worst,
            tolerance: REBUILD_TOL,
        }));
    }

    let mut frame = CPTFrame {
        par,
        c,
        eta,
        eta_inv,
        signs: file.signs,
        projector,
        weight: file.weight,
        order_convention,
        modes_kept: m,
        kept_values: file.kept_values,
        kept_right,
        kept_left,
        hamiltonian_symmetric: file.hamiltonian_symmetric,
        exact: file.exact,
        residuals: FrameResiduals {
            c_squared: file.residuals.c_squared,
            commutant: file.residuals.commutant,
            pt_commutant: file.residuals.pt_commutant,
            theta_involution: file.residuals.theta_involution,
            eta_hermiticity: file.residuals.eta_hermiticity,
            eta_min_eigenvalue: file.residuals.eta_min_eigenvalue,
            pseudo_hermiticity: file.residuals.pseudo_hermiticity,
        },
    };
    frame.residuals = frame.verify(None, tol)?;
    Ok(frame)
}
