//! End-to-end tests of the ptqm binary: golden outputs, exit codes, output
//! routing, and frame persistence. Goldens pin exact bytes; regenerate them
//! deliberately by rerunning the commands in tests/golden/README when the
//! output contract changes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ptqm_cli::frame_io::{load_frame, save_frame};
use ptqm_core::linop::Tolerances;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptqm"))
        .args(args)
        .env("PTQM_NO_COLOR", "1")
        .output()
        .expect("binary launches")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn golden_spectrum_csv_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let config = golden_dir().join("spectrum_2x2.json");
    let out = run(&[
        "spectrum",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let produced = read(&tmp.path().join("spectrum_2x2.csv"));
    let golden = read(&golden_dir().join("spectrum_2x2.csv"));
    assert_eq!(produced, golden);
}

#[test]
fn golden_audit_report_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let config = golden_dir().join("audit_2x2.json");
    let out = run(&[
        "audit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let produced = read(&tmp.path().join("audit_2x2.report.json"));
    let golden = read(&golden_dir().join("audit_2x2.report.json"));
    assert_eq!(produced, golden);
}

#[test]
fn golden_phase_scan_csv_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let config = golden_dir().join("scan_theta.json");
    let out = run(&[
        "phase-scan",
        "--config",
        config.to_str().unwrap(),
        "--parameter",
        "theta",
        "--from",
        "0.0",
        "--to",
        "1.4",
        "--steps",
        "8",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let produced = read(&tmp.path().join("scan_theta.csv"));
    let golden = read(&golden_dir().join("scan_theta.csv"));
    assert_eq!(produced, golden);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.0, "s": 1.0, "theta": 0.3},
            "seed": 11,
            "operators": [{"builtin": "h"}, {"builtin": "random_def1"},
                          {"builtin": "random_def2"}]}"#,
    );
    let first = run(&["audit", "--config", config.to_str().unwrap()]);
    let second = run(&["audit", "--config", config.to_str().unwrap()]);
    assert!(first.status.success(), "{}", stderr_of(&first));
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn broken_phase_spectrum_succeeds_and_reports_the_phase() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 2.0, "s": 1.0, "theta": 1.5707963267948966}}"#,
    );
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let doc: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("report parses");
    assert_eq!(doc["spectrum"]["phase"], "broken");
    assert_eq!(doc["spectrum"]["kept_count"], 0);
}

#[test]
fn broken_phase_audit_writes_diagnostics_and_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 2.0, "s": 1.0, "theta": 1.5707963267948966},
            "operators": [{"builtin": "h"}],
            "outputs": {"report_path": "report.json"}}"#,
    );
    let out = run(&[
        "audit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("report.json"))).unwrap();
    assert_eq!(doc["frame"]["constructed"], false);
    assert_eq!(doc["frame"]["error"]["class"], "broken_phase");
    assert_eq!(doc["operators"][0]["verdict"], "inapplicable");
    assert_eq!(doc["spectrum"]["phase"], "broken");
}

#[test]
fn malformed_config_exits_two_and_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "ix_cubed"}, "mode_kept": 3}"#,
    );
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("mode_kept"), "{}", stderr_of(&out));

    let config = write(tmp.path(), "junk.json", "not json");
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let config = write(
        tmp.path(),
        "model_key.json",
        r#"{"model": {"kind": "ix_cubed", "epsilon": 1.0}}"#,
    );
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("epsilon"), "{}", stderr_of(&out));
}

#[test]
fn sweep_argument_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.2, "s": 1.0, "theta": 0.0}}"#,
    );
    let c = config.to_str().unwrap();
    let out = run(&["phase-scan", "--config", c, "--parameter", "theta", "--from", "0",
                    "--to", "1", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));

    let out = run(&["phase-scan", "--config", c, "--parameter", "radius", "--from", "0",
                    "--to", "1", "--steps", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("radius"));

    let out = run(&["phase-scan", "--config", c, "--parameter", "epsilon", "--from", "0",
                    "--to", "1", "--steps", "3"]);
    assert_eq!(out.status.code(), Some(2), "epsilon sweep on a matrix model");
}

#[test]
fn lattice_builtins_require_a_lattice_model() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.0, "s": 1.0, "theta": 0.3},
            "operators": [{"builtin": "x"}]}"#,
    );
    let out = run(&["audit", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn inline_operator_dimension_must_match_the_model() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.0, "s": 1.0, "theta": 0.3},
            "operators": [{"matrix": [[[1, 0]]]}]}"#,
    );
    let out = run(&["audit", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn frame_round_trip_is_bit_exact_and_reverified() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.0, "s": 1.0, "theta": 0.5235987755982988}}"#,
    );
    let saved = tmp.path().join("frame.json");
    let out = run(&[
        "frame", "save",
        "--config", config.to_str().unwrap(),
        "--path", saved.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let out = run(&["frame", "check", "--path", saved.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(out.stdout.is_empty(), "check writes nothing to stdout");

    // load re-verifies and re-saving reproduces the file byte for byte
    let frame = load_frame(&saved, &Tolerances::default()).unwrap();
    let resaved = tmp.path().join("frame2.json");
    save_frame(&frame, &resaved).unwrap();
    assert_eq!(read(&saved), read(&resaved));

    let out = run(&["frame", "load", "--path", saved.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["constructed"], true);
    assert_eq!(doc["modes_kept"], 2);
}

#[test]
fn tampered_frames_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.0, "s": 1.0, "theta": 0.5235987755982988}}"#,
    );
    let saved = tmp.path().join("frame.json");
    let out = run(&[
        "frame", "save",
        "--config", config.to_str().unwrap(),
        "--path", saved.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    // sign flip: the stored C no longer matches its spectral assembly
    let mut doc: serde_json::Value = serde_json::from_str(&read(&saved)).unwrap();
    let sign = doc["signs"][0].as_i64().unwrap();
    doc["signs"][0] = serde_json::Value::from(-sign);
    let flipped = write(tmp.path(), "flipped.json", &doc.to_string());
    let out = run(&["frame", "check", "--path", flipped.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("frame inconsistent"), "{}", stderr_of(&out));

    // truncation: structurally invalid
    let full = read(&saved);
    let truncated = write(tmp.path(), "truncated.json", &full[..full.len() / 2]);
    let out = run(&["frame", "check", "--path", truncated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("frame inconsistent"), "{}", stderr_of(&out));
}

#[test]
fn parse_check_prints_the_canonical_polynomial() {
    let out = run(&["parse-check", "--expr", "2*x^2 + 3*i*x^3 - 1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["ok"], true);
    assert_eq!(doc["degree"], 3);
    assert_eq!(doc["coefficients"][0][0].as_f64().unwrap(), -1.0);
    assert_eq!(doc["coefficients"][2][0].as_f64().unwrap(), 2.0);
    assert_eq!(doc["coefficients"][3][1].as_f64().unwrap(), 3.0);

    let out = run(&["parse-check", "--expr", "x^-2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn frame_save_requires_a_destination() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.0, "s": 1.0, "theta": 0.3}}"#,
    );
    let out = run(&["frame", "save", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

/// Lattice spectrum: kept eigenvalues are real to the certificate level and
/// stable against grid refinement.
#[test]
fn lattice_spectrum_kept_rows_are_real_and_grid_stable() {
    let tmp = tempfile::tempdir().unwrap();

    let kept_values = |n: usize| -> Vec<(f64, f64)> {
        let config = write(
            tmp.path(),
            &format!("job{n}.json"),
            &format!(
                r#"{{"model": {{"kind": "epsilon_family", "epsilon": 1.0}},
                    "grid": {{"n": {n}, "half_width": 8.0}},
                    "modes_kept": 5,
                    "outputs": {{"csv_path": "spec{n}.csv"}}}}"#
            ),
        );
        let out = run(&[
            "spectrum",
            "--config",
            config.to_str().unwrap(),
            "--out",
            tmp.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        let csv = read(&tmp.path().join(format!("spec{n}.csv")));
        csv.lines()
            .skip(2)
            .filter(|line| line.ends_with(",1"))
            .map(|line| {
                let cols: Vec<&str> = line.split(',').collect();
                (cols[1].parse().unwrap(), cols[2].parse().unwrap())
            })
            .collect()
    };

    let coarse = kept_values(201);
    let fine = kept_values(301);
    assert_eq!(coarse.len(), 5);
    assert_eq!(fine.len(), 5);
    let scale = coarse.iter().map(|v| v.0.abs()).fold(0.0, f64::max);
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(c.1.abs() <= 1e-8 * scale, "kept row has Im {}", c.1);
        assert!(
            (c.0 - f.0).abs() <= 1e-2 * f.0.abs(),
            "grid drift: {} vs {}",
            c.0,
            f.0
        );
    }
}

/// Epsilon sweep across the symmetry-breaking boundary at epsilon = 0.
#[test]
fn epsilon_sweep_labels_the_phases() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "epsilon_family", "epsilon": 1.0},
            "grid": {"n": 101, "half_width": 8.0},
            "modes_kept": 4,
            "outputs": {"csv_path": "scan.csv"}}"#,
    );
    let out = run(&[
        "phase-scan",
        "--config", config.to_str().unwrap(),
        "--parameter", "epsilon",
        "--from", "-0.5",
        "--to", "1.0",
        "--steps", "4",
        "--out", tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = read(&tmp.path().join("scan.csv"));
    let phases: Vec<&str> = csv
        .lines()
        .skip(2)
        .map(|line| line.split(',').nth(4).unwrap())
        .collect();
    assert_eq!(phases.len(), 4);
    assert_eq!(phases[0], "broken", "epsilon = -0.5 spontaneously breaks");
    assert_eq!(phases[3], "unbroken", "epsilon = 1.0 is unbroken");
    assert!(phases[1..].iter().all(|p| *p == "unbroken"), "{phases:?}");

    // the boundary row is flagged
    let transitions: Vec<&str> = csv
        .lines()
        .skip(2)
        .map(|line| line.split(',').nth(5).unwrap())
        .collect();
    assert_eq!(transitions[1], "1", "first unbroken row after broken: {csv}");
}

#[test]
fn exceptional_point_rows_are_labeled() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(
        tmp.path(),
        "job.json",
        r#"{"model": {"kind": "matrix2x2", "r": 1.0, "s": 1.0, "theta": 0.0}}"#,
    );
    let out = run(&[
        "phase-scan",
        "--config", config.to_str().unwrap(),
        "--parameter", "theta",
        "--from", "0.0",
        "--to", "1.5707963267948966",
        "--steps", "5",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = String::from_utf8(out.stdout).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.contains("exceptional_point"), "{csv}");
    assert!(last.ends_with(",1"), "exceptional rows are transitions: {csv}");
}
