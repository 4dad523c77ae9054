//! Job configuration: strict-schema JSON describing one model, its grid and
//! tolerances, the operators to audit, and where outputs go. Unknown keys
//! are rejected so typos fail loudly instead of silently using defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};

use ptqm_core::linop::Tolerances;
use ptqm_core::models::{make_grid, Grid, ModelSpec};
use ptqm_core::{CMatrix, C64};

use crate::error::{at_path, CliError, Result};
use crate::json::float;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub modes_kept: Option<usize>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub operators: Vec<OperatorConfig>,
    #[serde(default)]
    pub outputs: Option<OutputConfig>,
}

#[derive(Clone, Debug)]
pub enum ModelConfig {
    Matrix2x2 { r: f64, s: f64, theta: f64 },
    EpsilonFamily { epsilon: f64 },
    IxCubed,
    HermitianOscillator,
    ShiftedSquare,
    PotentialExpr { source: String },
}

/// Tagged-object decoding by hand: serde's unknown-field rejection does not
/// reach the variant fields of internally tagged enums, and a typo next to
/// "kind" must fail, not silently disappear.
impl<'de> Deserialize<'de> for ModelConfig {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as DeError;

        let mut map = serde_json::Map::deserialize(deserializer)?;
        let kind = match map.remove("kind") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(DeError::custom("model kind must be a string")),
            None => return Err(DeError::custom("model needs a kind")),
        };

        fn take_f64<E: DeError>(
            map: &mut serde_json::Map<String, Value>,
            kind: &str,
            key: &str,
        ) -> std::result::Result<f64, E> {
            match map.remove(key) {
                Some(v) => v.as_f64().ok_or_else(|| {
                    E::custom(format!("model {kind}: {key} must be a number"))
                }),
                None => Err(E::custom(format!("model {kind} needs {key}"))),
            }
        }

        let model = match kind.as_str() {
            "matrix2x2" => ModelConfig::Matrix2x2 {
                r: take_f64(&mut map, &kind, "r")?,
                s: take_f64(&mut map, &kind, "s")?,
                theta: take_f64(&mut map, &kind, "theta")?,
            },
            "epsilon_family" => ModelConfig::EpsilonFamily {
                epsilon: take_f64(&mut map, &kind, "epsilon")?,
            },
            "ix_cubed" => ModelConfig::IxCubed,
            "hermitian_oscillator" => ModelConfig::HermitianOscillator,
            "shifted_square" => ModelConfig::ShiftedSquare,
            "potential_expr" => match map.remove("source") {
                Some(Value::String(source)) => ModelConfig::PotentialExpr { source },
                Some(_) => {
                    return Err(DeError::custom("model potential_expr: source must be a string"))
                }
                None => return Err(DeError::custom("model potential_expr needs source")),
            },
            other => {
                return Err(DeError::custom(format!("unknown model kind {other:?}")))
            }
        };

        if let Some(stray) = map.keys().next() {
            return Err(DeError::custom(format!(
                "unknown key {stray:?} for model {kind}"
            )));
        }
        Ok(model)
    }
}

impl ModelConfig {
    pub fn to_spec(&self) -> ModelSpec {
        match self {
            ModelConfig::Matrix2x2 { r, s, theta } => {
                ModelSpec::Matrix2x2 { r: *r, s: *s, theta: *theta }
            }
            ModelConfig::EpsilonFamily { epsilon } => {
                ModelSpec::EpsilonFamily { epsilon: *epsilon }
            }
            ModelConfig::IxCubed => ModelSpec::IXCubed,
            ModelConfig::HermitianOscillator => ModelSpec::HermitianOscillator,
            ModelConfig::ShiftedSquare => ModelSpec::ShiftedSquare,
            ModelConfig::PotentialExpr { source } => {
                ModelSpec::PotentialExpr { source: source.clone() }
            }
        }
    }

    /// Config echo for the report document.
    pub fn echo(&self) -> Value {
        match self {
            ModelConfig::Matrix2x2 { r, s, theta } => json!({
                "kind": "matrix2x2", "r": float(*r), "s": float(*s), "theta": float(*theta),
            }),
            ModelConfig::EpsilonFamily { epsilon } => {
                json!({"kind": "epsilon_family", "epsilon": float(*epsilon)})
            }
            ModelConfig::IxCubed => json!({"kind": "ix_cubed"}),
            ModelConfig::HermitianOscillator => json!({"kind": "hermitian_oscillator"}),
            ModelConfig::ShiftedSquare => json!({"kind": "shifted_square"}),
            ModelConfig::PotentialExpr { source } => {
                json!({"kind": "potential_expr", "source": source})
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

/// Per-field overrides merged over the default tolerance bundle.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default)]
    pub tau_res: Option<f64>,
    #[serde(default)]
    pub tau_alg: Option<f64>,
    #[serde(default)]
    pub tau_real: Option<f64>,
    #[serde(default)]
    pub tau_disc: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default)]
    pub builtin: Option<BuiltinOperator>,
    /// Inline dense matrix, rows of [re, im] pairs.
    #[serde(default)]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinOperator {
    X,
    P,
    H,
    RandomDef1,
    RandomDef2,
}

impl BuiltinOperator {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinOperator::X => "x",
            BuiltinOperator::P => "p",
            BuiltinOperator::H => "h",
            BuiltinOperator::RandomDef1 => "random_def1",
            BuiltinOperator::RandomDef2 => "random_def2",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub report_path: Option<PathBuf>,
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub frame_path: Option<PathBuf>,
}

/// Flag-level overrides applied after the config file is read.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub modes: Option<usize>,
    pub tol_real: Option<f64>,
    pub tol_disc: Option<f64>,
}

/// A config resolved against model defaults and flag overrides; everything
/// numeric code needs, validated.
#[derive(Clone, Debug)]
pub struct ResolvedJob {
    pub config: JobConfig,
    pub spec: ModelSpec,
    pub grid: Option<Grid>,
    pub modes_kept: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
}

impl ResolvedJob {
    /// Config echo block for report documents: the resolved values, not the
    /// raw file, so defaults and overrides are visible.
    pub fn echo(&self) -> Value {
        let grid = match &self.grid {
            Some(g) => json!({"n": g.n(), "half_width": float(g.half_width())}),
            None => Value::Null,
        };
        json!({
            "model": self.config.model.echo(),
            "grid": grid,
            "modes_kept": self.modes_kept,
            "seed": self.seed,
            "tolerances": {
                "tau_res": float(self.tolerances.tau_res),
                "tau_alg": float(self.tolerances.tau_alg),
                "tau_real": float(self.tolerances.tau_real),
                "tau_disc": float(self.tolerances.tau_disc),
            },
        })
    }
}

pub fn load_config(path: &Path) -> Result<JobConfig> {
    let text = at_path(path, std::fs::read_to_string(path))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Applies model defaults and flag overrides, validates the model and
/// tolerance contracts, and builds the grid.
pub fn resolve(config: JobConfig, overrides: &Overrides) -> Result<ResolvedJob> {
    let spec = config.model.to_spec();
    spec.validate()?;

    let grid = if spec.needs_grid() {
        let (n, half_width) = match &config.grid {
            Some(g) => (g.n, g.half_width),
            None => spec.default_grid().expect("lattice models have default grids"),
        };
        Some(make_grid(n, half_width)?)
    } else {
        if config.grid.is_some() {
            return Err(CliError::config("grid given for a matrix model"));
        }
        None
    };

    let modes_kept = overrides
        .modes
        .or(config.modes_kept)
        .unwrap_or_else(|| spec.default_modes_kept());
    if modes_kept == 0 {
        return Err(CliError::config("modes_kept must be at least 1"));
    }

    let mut tolerances = Tolerances::default();
    if let Some(t) = &config.tolerances {
        if let Some(v) = t.tau_res {
            tolerances.tau_res = v;
        }
        if let Some(v) = t.tau_alg {
            tolerances.tau_alg = v;
        }
        if let Some(v) = t.tau_real {
            tolerances.tau_real = v;
        }
        if let Some(v) = t.tau_disc {
            tolerances.tau_disc = v;
        }
    }
    if let Some(v) = overrides.tol_real {
        tolerances.tau_real = v;
    }
    if let Some(v) = overrides.tol_disc {
        tolerances.tau_disc = v;
    }
    tolerances.validate()?;

    let seed = overrides.seed.or(config.seed).unwrap_or(0);

    for (index, op) in config.operators.iter().enumerate() {
        match (&op.builtin, &op.matrix) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(format!(
                    "operator {index}: give either builtin or matrix, not both"
                )));
            }
            (None, None) => {
                return Err(CliError::config(format!(
                    "operator {index}: give builtin or matrix"
                )));
            }
            _ => {}
        }
    }

    Ok(ResolvedJob { config, spec, grid, modes_kept, tolerances, seed })
}

/// Decodes an inline matrix of [re, im] rows into a dense operator.
pub fn inline_matrix(rows: &[Vec<[f64; 2]>], index: usize) -> Result<CMatrix> {
    let dim = rows.len();
    let mut data = Vec::with_capacity(dim * dim);
    for row in rows {
        if row.len() != dim {
            return Err(CliError::config(format!(
                "operator {index}: matrix must be square, got a row of {} in dimension {dim}",
                row.len()
            )));
        }
        for &[re, im] in row {
            data.push(C64::new(re, im));
        }
    }
    CMatrix::new(dim, data).map_err(CliError::from)
}

/// Joins an output path onto the --out directory when one is given.
/// Absolute config paths ignore the directory.
pub fn resolve_output(base: &Option<PathBuf>, path: &Path) -> PathBuf {
    match base {
        Some(dir) => dir.join(path),
        None => path.to_path_buf(),
    }
}
