//! Command pipelines. Each runner owns the sequencing (build, decompose,
//! classify, construct, audit) and the output routing; numerical work lives
//! in the core crate. Machine output (reports, CSV) goes to configured paths
//! or stdout; human status and wall times go to stderr only, so runs with
//! identical inputs produce byte-identical machine output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

use ptqm_core::linop::eig::{biorthonormalize, eig, EigenSystem};
use ptqm_core::linop::Tolerances;
use ptqm_core::metric::{
    classify_spectrum, construct_frame, CPTFrame, SpectrumClassification,
};
use ptqm_core::models::{build_hamiltonian, build_operators, BuiltModel, ModelSpec};
use ptqm_core::observables::{classify_operator, generate_observable, ObservableKind};
use ptqm_core::{CMatrix, Error};

use crate::config::{inline_matrix, resolve_output, BuiltinOperator, ResolvedJob};
use crate::error::{at_path, CliError, Result};
use crate::frame_io::save_frame;
use crate::json::render;
use crate::report;

/// Everything the spectral decomposition of one Hamiltonian yields.
/// `certificates` are the per-mode eigensolver residuals recorded at
/// decomposition time, before defective-mode poisoning can overwrite them.
pub struct SpectrumArtifacts {
    pub model: BuiltModel,
    pub es: EigenSystem,
    pub certificates: Vec<f64>,
    pub cls: SpectrumClassification,
}

/// Shared front half of every pipeline: build, decompose, biorthonormalize,
/// classify. Fails only on solver breakdowns; a broken phase is a
/// classification outcome, not an error.
pub fn decompose(job: &ResolvedJob) -> Result<SpectrumArtifacts> {
    let started = Instant::now();
    let model = build_hamiltonian(&job.spec, job.grid.as_ref())?;
    let mut es = eig(&model.hamiltonian.matrix, &job.tolerances)?;
    let certificates = es.residual_right.clone();
    biorthonormalize(&mut es, &job.tolerances)?;
    let cls = classify_spectrum(&es, &job.tolerances, job.modes_kept)?;
    eprintln!(
        "# decomposed {dim}x{dim} in {secs:.3}s: phase {phase}, {kept} of {m} modes kept",
        dim = model.dim(),
        secs = started.elapsed().as_secs_f64(),
        phase = report::phase_label(cls.phase),
        kept = cls.kept.len(),
        m = cls.candidates.len(),
    );
    Ok(SpectrumArtifacts { model, es, certificates, cls })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            at_path(parent, std::fs::create_dir_all(parent))?;
        }
    }
    at_path(path, std::fs::write(path, text))
}

/// Routes machine output to a file when a path is configured, else stdout.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            write_text(p, text)?;
            eprintln!("# wrote {}", p.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct OutputPaths {
    report: Option<PathBuf>,
    csv: Option<PathBuf>,
    frame: Option<PathBuf>,
}

fn output_paths(job: &ResolvedJob, out_base: &Option<PathBuf>) -> OutputPaths {
    let outputs = job.config.outputs.clone().unwrap_or_default();
    OutputPaths {
        report: outputs.report_path.as_deref().map(|p| resolve_output(out_base, p)),
        csv: outputs.csv_path.as_deref().map(|p| resolve_output(out_base, p)),
        frame: outputs.frame_path.as_deref().map(|p| resolve_output(out_base, p)),
    }
}

fn csv_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// Full-spectrum CSV: one row per mode in eigenvalue order, with the
/// decomposition-time residual certificate and the kept flag.
pub fn spectrum_csv(
    es: &EigenSystem,
    certificates: &[f64],
    cls: &SpectrumClassification,
) -> String {
    let mut out = String::from("# ptqm spectrum csv v1\nindex,re,im,residual,kept\n");
    for k in 0..es.dim {
        let kept = cls.kept.contains(&k);
        out.push_str(&format!(
            "{k},{re},{im},{res},{kept}\n",
            re = csv_float(es.values[k].re),
            im = csv_float(es.values[k].im),
            res = csv_float(certificates[k]),
            kept = kept as u8,
        ));
    }
    out
}

/// Spectrum command: decompose and classify, report the result. A broken
/// phase is reported, not rejected.
pub fn run_spectrum(job: &ResolvedJob, out_base: &Option<PathBuf>) -> Result<()> {
    let paths = output_paths(job, out_base);
    let art = decompose(job)?;
    if let Some(csv) = &paths.csv {
        write_text(csv, &spectrum_csv(&art.es, &art.certificates, &art.cls))?;
        eprintln!("# wrote {}", csv.display());
    }
    let doc = report::document(
        "spectrum",
        job,
        report::spectrum_block(&art.es, &art.certificates, &art.cls),
        Value::Null,
        Vec::new(),
    );
    emit(paths.report.as_deref(), &render(&doc))
}

/// An audit operator, resolved as far as possible without a frame.
enum ResolvedOperator {
    Matrix { label: String, matrix: CMatrix },
    Generated { label: String, kind: ObservableKind, seed: u64 },
}

impl ResolvedOperator {
    fn label(&self) -> &str {
        match self {
            ResolvedOperator::Matrix { label, .. } => label,
            ResolvedOperator::Generated { label, .. } => label,
        }
    }

    fn matrix(&self) -> Option<&CMatrix> {
        match self {
            ResolvedOperator::Matrix { matrix, .. } => Some(matrix),
            ResolvedOperator::Generated { .. } => None,
        }
    }
}

/// Resolves operator entries against the built model. Lattice builtins
/// require a grid; inline matrices must match the model dimension. Random
/// operators get a per-entry seed so entries are independent and the list
/// order is part of the contract.
fn resolve_operators(job: &ResolvedJob, model: &BuiltModel) -> Result<Vec<ResolvedOperator>> {
    let lattice = job.grid.as_ref().map(build_operators);
    let mut resolved = Vec::new();
    for (index, op) in job.config.operators.iter().enumerate() {
        let entry = match (&op.builtin, &op.matrix) {
            (Some(builtin), None) => {
                let label =
                    op.label.clone().unwrap_or_else(|| builtin.name().to_string());
                match builtin {
                    BuiltinOperator::X | BuiltinOperator::P => {
                        let set = lattice.as_ref().ok_or_else(|| {
                            CliError::config(format!(
                                "operator {index}: builtin {} needs a lattice model",
                                builtin.name()
                            ))
                        })?;
                        let matrix = match builtin {
                            BuiltinOperator::X => set.x.matrix.clone(),
                            _ => set.mom.matrix.clone(),
                        };
                        ResolvedOperator::Matrix { label, matrix }
                    }
                    BuiltinOperator::H => ResolvedOperator::Matrix {
                        label,
                        matrix: model.hamiltonian.matrix.clone(),
                    },
                    BuiltinOperator::RandomDef1 => ResolvedOperator::Generated {
                        label,
                        kind: ObservableKind::Def1,
                        seed: job.seed.wrapping_add(index as u64),
                    },
                    BuiltinOperator::RandomDef2 => ResolvedOperator::Generated {
                        label,
                        kind: ObservableKind::Def2,
                        seed: job.seed.wrapping_add(index as u64),
                    },
                }
            }
            (None, Some(rows)) => {
                let matrix = inline_matrix(rows, index)?;
                if matrix.dim() != model.dim() {
                    return Err(CliError::config(format!(
                        "operator {index}: matrix is {}x{} but the model dimension is {}",
                        matrix.dim(),
                        matrix.dim(),
                        model.dim()
                    )));
                }
                let label =
                    op.label.clone().unwrap_or_else(|| format!("matrix{index}"));
                ResolvedOperator::Matrix { label, matrix }
            }
            _ => unreachable!("resolve() enforces exactly one operator source"),
        };
        resolved.push(entry);
    }
    Ok(resolved)
}

/// Runs decomposition through frame construction, reporting how far it got:
/// the spectrum block (or its error form) plus the frame result. Numerical
/// failures at any stage land in the blocks instead of aborting, so audits
/// of models the solver cannot handle still produce diagnostics.
fn frame_pipeline(
    model: &BuiltModel,
    job: &ResolvedJob,
) -> (Value, ptqm_core::Result<CPTFrame>) {
    let mut es = match eig(&model.hamiltonian.matrix, &job.tolerances) {
        Ok(es) => es,
        Err(e) => return (report::spectrum_error_block(&e), Err(e)),
    };
    let certificates = es.residual_right.clone();
    if let Err(e) = biorthonormalize(&mut es, &job.tolerances) {
        return (report::spectrum_error_block(&e), Err(e));
    }
    let cls = match classify_spectrum(&es, &job.tolerances, job.modes_kept) {
        Ok(cls) => cls,
        Err(e) => return (report::spectrum_error_block(&e), Err(e)),
    };
    let spectrum = report::spectrum_block(&es, &certificates, &cls);
    let frame = construct_frame(&model.hamiltonian, &model.par, &es, &cls, &job.tolerances);
    (spectrum, frame)
}

/// Audit command: construct the frame and classify every operator against
/// it. When decomposition or construction fails the report still gets
/// written, carrying the diagnostics and frameless operator rows, and the
/// command fails.
pub fn run_audit(job: &ResolvedJob, out_base: &Option<PathBuf>) -> Result<()> {
    let paths = output_paths(job, out_base);
    let model = build_hamiltonian(&job.spec, job.grid.as_ref())?;
    let operators = resolve_operators(job, &model)?;

    let started = Instant::now();
    let (spectrum, frame) = frame_pipeline(&model, job);

    match frame {
        Ok(frame) => {
            eprintln!(
                "# frame constructed in {:.3}s: {} modes, ordering {}",
                started.elapsed().as_secs_f64(),
                frame.modes_kept,
                match frame.order_convention {
                    ptqm_core::metric::OrderConvention::PC => "pc",
                    ptqm_core::metric::OrderConvention::CP => "cp",
                },
            );
            let mut rows = Vec::new();
            for op in &operators {
                let owned;
                let matrix = match op {
                    ResolvedOperator::Matrix { matrix, .. } => matrix,
                    ResolvedOperator::Generated { kind, seed, .. } => {
                        owned = generate_observable(*kind, &frame, *seed)?;
                        &owned
                    }
                };
                let rep = classify_operator(matrix, op.label(), &frame, &job.tolerances)?;
                eprintln!("# {}: {}", rep.label, rep.verdict.as_str());
                rows.push(report::operator_value(&rep));
            }
            if let Some(path) = &paths.frame {
                save_frame(&frame, path)?;
                eprintln!("# wrote {}", path.display());
            }
            let doc = report::document(
                "audit",
                job,
                spectrum,
                report::frame_block(&frame),
                rows,
            );
            emit(paths.report.as_deref(), &render(&doc))
        }
        Err(e) => {
            eprintln!("# frame construction failed: {e}");
            let tau = if job.grid.is_some() {
                job.tolerances.tau_disc
            } else {
                job.tolerances.tau_alg
            };
            let rows = operators
                .iter()
                .map(|op| {
                    report::frameless_operator_value(
                        op.label(),
                        op.matrix(),
                        &model.par.matrix,
                        tau,
                    )
                })
                .collect();
            let doc = report::document(
                "audit",
                job,
                spectrum,
                report::frame_error_block(&e),
                rows,
            );
            emit(paths.report.as_deref(), &render(&doc))?;
            Err(e.into())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Epsilon,
    Theta,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "epsilon" => Ok(SweepParameter::Epsilon),
            "theta" => Ok(SweepParameter::Theta),
            other => Err(CliError::config(format!(
                "unknown sweep parameter {other:?}: expected epsilon or theta"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::Theta => "theta",
        }
    }
}

pub struct Sweep {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

pub struct ScanRow {
    pub value: f64,
    pub kept_count: usize,
    pub max_abs_im: f64,
    pub phase: &'static str,
    pub transition: bool,
}

fn sweep_spec(base: &ModelSpec, parameter: SweepParameter, value: f64) -> Result<ModelSpec> {
    match (parameter, base) {
        (SweepParameter::Epsilon, ModelSpec::EpsilonFamily { .. }) => {
            Ok(ModelSpec::EpsilonFamily { epsilon: value })
        }
        (SweepParameter::Theta, ModelSpec::Matrix2x2 { r, s, .. }) => {
            Ok(ModelSpec::Matrix2x2 { r: *r, s: *s, theta: value })
        }
        (p, _) => Err(CliError::config(format!(
            "sweep parameter {} does not apply to this model",
            p.name()
        ))),
    }
}

/// Smallest gap between adjacent kept eigenvalues, infinite below two modes.
fn min_kept_gap(es: &EigenSystem, cls: &SpectrumClassification) -> f64 {
    let mut kept: Vec<f64> = cls.kept.iter().map(|&k| es.values[k].re).collect();
    kept.sort_by(f64::total_cmp);
    kept.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Sweeps one model parameter and classifies the phase at each point.
/// A defective decomposition is an exceptional point, not a failure: the
/// row records it and the sweep continues.
pub fn scan_rows(job: &ResolvedJob, sweep: &Sweep) -> Result<Vec<ScanRow>> {
    if sweep.steps < 2 {
        return Err(CliError::config(format!(
            "sweep needs at least 2 steps, got {}",
            sweep.steps
        )));
    }
    if !sweep.from.is_finite() || !sweep.to.is_finite() {
        return Err(CliError::config("sweep endpoints must be finite"));
    }

    let mut rows: Vec<ScanRow> = Vec::with_capacity(sweep.steps);
    for i in 0..sweep.steps {
        let t = i as f64 / (sweep.steps - 1) as f64;
        let value = sweep.from + (sweep.to - sweep.from) * t;
        let spec = sweep_spec(&job.spec, sweep.parameter, value)?;
        let model = build_hamiltonian(&spec, job.grid.as_ref())?;
        let h_scale = model.hamiltonian.matrix.fro_norm();
        let mut es = eig(&model.hamiltonian.matrix, &job.tolerances)?;
        let row = match biorthonormalize(&mut es, &job.tolerances) {
            Ok(()) => {
                let cls = classify_spectrum(&es, &job.tolerances, job.modes_kept)?;
                let phase_changed = rows
                    .last()
                    .map(|prev: &ScanRow| prev.phase != report::phase_label(cls.phase))
                    .unwrap_or(false);
                let near_degenerate = min_kept_gap(&es, &cls)
                    <= 1e-6 * h_scale.max(f64::MIN_POSITIVE);
                ScanRow {
                    value,
                    kept_count: cls.kept.len(),
                    max_abs_im: cls.max_abs_im(&es),
                    phase: report::phase_label(cls.phase),
                    transition: phase_changed || near_degenerate,
                }
            }
            Err(Error::DefectiveSpectrum { .. }) => ScanRow {
                value,
                kept_count: 0,
                max_abs_im: es
                    .values
                    .iter()
                    .map(|v| v.im.abs())
                    .fold(0.0, f64::max),
                phase: "exceptional_point",
                transition: true,
            },
            Err(e) => return Err(e.into()),
        };
        eprintln!(
            "# {} = {:.6}: {} ({} kept)",
            sweep.parameter.name(),
            value,
            row.phase,
            row.kept_count,
        );
        rows.push(row);
    }
    Ok(rows)
}

pub fn phase_scan_csv(parameter: SweepParameter, rows: &[ScanRow]) -> String {
    let mut out =
        String::from("# ptqm phase-scan csv v1\nparameter,value,kept_count,max_abs_im,phase,transition\n");
    for row in rows {
        out.push_str(&format!(
            "{p},{v},{k},{im},{phase},{t}\n",
            p = parameter.name(),
            v = csv_float(row.value),
            k = row.kept_count,
            im = csv_float(row.max_abs_im),
            phase = row.phase,
            t = row.transition as u8,
        ));
    }
    out
}

pub fn run_phase_scan(
    job: &ResolvedJob,
    sweep: &Sweep,
    out_base: &Option<PathBuf>,
) -> Result<()> {
    let paths = output_paths(job, out_base);
    let started = Instant::now();
    let rows = scan_rows(job, sweep)?;
    eprintln!(
        "# scanned {} points in {:.3}s",
        rows.len(),
        started.elapsed().as_secs_f64()
    );
    emit(paths.csv.as_deref(), &phase_scan_csv(sweep.parameter, &rows))
}

/// Constructs the frame for a job and persists it.
pub fn run_frame_save(
    job: &ResolvedJob,
    path_flag: &Option<PathBuf>,
    out_base: &Option<PathBuf>,
) -> Result<()> {
    let paths = output_paths(job, out_base);
    let path = path_flag
        .as_deref()
        .map(|p| resolve_output(out_base, p))
        .or(paths.frame)
        .ok_or_else(|| {
            CliError::config("frame save needs --path or outputs.frame_path")
        })?;
    let art = decompose(job)?;
    let frame = construct_frame(
        &art.model.hamiltonian,
        &art.model.par,
        &art.es,
        &art.cls,
        &job.tolerances,
    )?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            at_path(parent, std::fs::create_dir_all(parent))?;
        }
    }
    save_frame(&frame, &path)?;
    eprintln!("# wrote {}", path.display());
    Ok(())
}

/// Loads a frame, re-verifying every invariant, and prints its summary.
pub fn run_frame_load(path: &Path, tol: &Tolerances, quiet: bool) -> Result<CPTFrame> {
    let started = Instant::now();
    let frame = crate::frame_io::load_frame(path, tol)?;
    eprintln!(
        "# frame verified in {:.3}s: dim {}, {} modes",
        started.elapsed().as_secs_f64(),
        frame.dim(),
        frame.modes_kept,
    );
    if !quiet {
        print!("{}", render(&report::frame_block(&frame)));
    }
    Ok(frame)
}
