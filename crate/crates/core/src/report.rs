//! Run configuration, the four report commands and their CSV/JSON writers.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::SolverError;
use crate::exec::{self, ExecMode};
use crate::levinson::{self, Classification, LevinsonReport, Tolerances};
use crate::potential::{is_half_integer, PotentialKind, PotentialModel, ProblemSpec, Tail};
use crate::radial::{SolverOptions, Threshold};
use crate::scattering::{phase_sweep, threshold_angles};
use crate::spectrum::{self, SpectrumReport};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    Free,
    SquareWell,
    PiecewiseLinear,
    SampledTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub b: f64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialName,
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "default_j")]
    pub j: Vec<f64>,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            mass: 1.0,
            j: default_j(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    /// Intervals on `λ ∈ [0, 1]` before adaptive refinement.
    #[serde(default = "default_lambda_points")]
    pub points: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            points: default_lambda_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    /// Smallest `|E| / M`, above 1.
    #[serde(default = "default_e_min")]
    pub min: f64,
    #[serde(default = "default_e_max")]
    pub max: f64,
    #[serde(default = "default_e_points")]
    pub points: usize,
    #[serde(default = "default_sides")]
    pub sides: Vec<Side>,
}

impl Default for EnergyGrid {
    fn default() -> Self {
        EnergyGrid {
            min: default_e_min(),
            max: default_e_max(),
            points: default_e_points(),
            sides: default_sides(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_tol_e")]
    pub tol_e: f64,
    #[serde(default = "default_tol_half")]
    pub tol_half: f64,
    /// In units of π.
    #[serde(default = "default_residual")]
    pub residual: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            tol_e: default_tol_e(),
            tol_half: default_tol_half(),
            residual: default_residual(),
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Depth,
    TailB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    #[default]
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub mode: SweepMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for randomized sweeps.
    #[serde(default)]
    pub seed: u64,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
    #[serde(default)]
    pub energy_grid: EnergyGrid,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn one() -> f64 {
    1.0
}
fn default_j() -> Vec<f64> {
    vec![0.5]
}
fn default_lambda_points() -> usize {
    32
}
fn default_e_min() -> f64 {
    1.05
}
fn default_e_max() -> f64 {
    3.0
}
fn default_e_points() -> usize {
    24
}
fn default_sides() -> Vec<Side> {
    vec![Side::Plus, Side::Minus]
}
fn default_tol_e() -> f64 {
    1e-10
}
fn default_tol_half() -> f64 {
    1e-6
}
fn default_residual() -> f64 {
    0.05
}
fn default_rtol() -> f64 {
    SolverOptions::default().rtol
}
fn default_atol() -> f64 {
    SolverOptions::default().atol
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string().trim_end()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.potential;
        positive("potential.r0", p.r0)?;
        match p.kind {
            PotentialName::SquareWell => match p.depth {
                Some(d) if d.is_finite() => {}
                Some(d) => {
                    return Err(ConfigError::new(
                        "potential.depth",
                        format!("must be finite, got {d}"),
                    ))
                }
                None => {
                    return Err(ConfigError::new(
                        "potential.depth",
                        "required for square_well",
                    ))
                }
            },
            PotentialName::PiecewiseLinear | PotentialName::SampledTable => {
                if p.knots.as_ref().map(|k| k.is_empty()).unwrap_or(true) {
                    return Err(ConfigError::new(
                        "potential.knots",
                        "at least one [r, V] knot is required",
                    ));
                }
            }
            PotentialName::Free => {}
        }
        if let Some(t) = &p.tail {
            if !t.b.is_finite() {
                return Err(ConfigError::new(
                    "potential.tail.b",
                    format!("must be finite, got {}", t.b),
                ));
            }
            positive("potential.tail.n", t.n)?;
        }
        positive("physics.mass", self.physics.mass)?;
        if self.physics.j.is_empty() {
            return Err(ConfigError::new("physics.j", "must list at least one j"));
        }
        for (i, &j) in self.physics.j.iter().enumerate() {
            if !is_half_integer(j) {
                return Err(ConfigError::new(
                    format!("physics.j[{i}]"),
                    format!("must be a half-integer, got {j}"),
                ));
            }
        }
        if self.lambda_grid.points == 0 {
            return Err(ConfigError::new("lambda_grid.points", "must be at least 1"));
        }
        let g = &self.energy_grid;
        if !(g.min > 1.0 && g.min.is_finite()) {
            return Err(ConfigError::new(
                "energy_grid.min",
                format!("|E|/M must exceed 1, got {}", g.min),
            ));
        }
        if !(g.max >= g.min && g.max.is_finite()) {
            return Err(ConfigError::new(
                "energy_grid.max",
                format!("must be finite and >= min, got {}", g.max),
            ));
        }
        if g.points == 0 {
            return Err(ConfigError::new("energy_grid.points", "must be at least 1"));
        }
        if g.sides.is_empty() {
            return Err(ConfigError::new(
                "energy_grid.sides",
                "must list at least one side",
            ));
        }
        let t = &self.tolerances;
        positive("tolerances.tol_e", t.tol_e)?;
        positive("tolerances.tol_half", t.tol_half)?;
        positive("tolerances.residual", t.residual)?;
        positive("tolerances.rtol", t.rtol)?;
        positive("tolerances.atol", t.atol)?;
        if let Some(s) = &self.sweep {
            if !s.start.is_finite() {
                return Err(ConfigError::new("sweep.start", "must be finite"));
            }
            if !s.stop.is_finite() {
                return Err(ConfigError::new("sweep.stop", "must be finite"));
            }
            if s.parameter == SweepParameter::Depth && p.kind != PotentialName::SquareWell {
                return Err(ConfigError::new(
                    "sweep.parameter",
                    "depth sweeps need a square_well potential",
                ));
            }
        }
        self.potential_with(None, None).map(|_| ())
    }

    fn potential_with(
        &self,
        depth: Option<f64>,
        tail_b: Option<f64>,
    ) -> Result<PotentialModel, ConfigError> {
        let p = &self.potential;
        let knots =
            || -> Vec<(f64, f64)> { p.knots.iter().flatten().map(|k| (k[0], k[1])).collect() };
        let kind = match p.kind {
            PotentialName::Free => PotentialKind::SquareWell { depth: 0.0 },
            PotentialName::SquareWell => PotentialKind::SquareWell {
                depth: depth.or(p.depth).unwrap_or(0.0),
            },
            PotentialName::PiecewiseLinear => PotentialKind::PiecewiseLinear { knots: knots() },
            PotentialName::SampledTable => PotentialKind::SampledTable {
                knots: knots(),
                slopes: Vec::new(),
            },
        };
        let tail = match (&p.tail, tail_b) {
            (Some(t), b) => Tail::Power {
                b: b.unwrap_or(t.b),
                n: t.n,
            },
            (None, Some(b)) => Tail::Power { b, n: 2.0 },
            (None, None) => Tail::None,
        };
        PotentialModel::new(kind, p.r0, tail)
            .map_err(|e| ConfigError::new("potential", e.to_string()))
    }

    pub fn potential(&self) -> Result<PotentialModel, ConfigError> {
        self.potential_with(None, None)
    }

    pub fn tolerances(&self) -> Tolerances {
        let t = &self.tolerances;
        Tolerances {
            tol_e: t.tol_e,
            tol_half: t.tol_half,
            residual: t.residual,
            solver: SolverOptions {
                rtol: t.rtol,
                atol: t.atol,
                ..SolverOptions::default()
            },
        }
    }

    /// Sweep parameter values, in ascending order.
    pub fn sweep_values(&self) -> Vec<f64> {
        let Some(s) = &self.sweep else {
            return Vec::new();
        };
        match (s.mode, s.points) {
            (_, 0) => Vec::new(),
            (SweepMode::Grid, 1) => vec![s.start],
            (SweepMode::Grid, n) => (0..n)
                .map(|i| s.start + (s.stop - s.start) * i as f64 / (n - 1) as f64)
                .collect(),
            (SweepMode::Random, n) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let (lo, hi) = if s.start <= s.stop {
                    (s.start, s.stop)
                } else {
                    (s.stop, s.start)
                };
                let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
                v.sort_by(f64::total_cmp);
                v
            }
        }
    }
}

/// Worst row status, which decides the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Unsupported,
    Violated,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Unsupported => 3,
            Status::Violated => 4,
        }
    }
}

/// Rectangular result with named columns. Cells are JSON values so that the
/// same table feeds both writers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub table: Table,
    pub metadata: Value,
    pub status: Status,
}

fn num(x: f64) -> Value {
    // Adding zero folds −0.0 into 0.0.
    serde_json::Number::from_f64(x + 0.0)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn over_pi(x: f64) -> Value {
    num(x / std::f64::consts::PI)
}

fn threshold_names(ts: &[Threshold]) -> Value {
    Value::Array(
        ts.iter()
            .map(|t| {
                Value::String(match t {
                    Threshold::PlusM => "plus_M".into(),
                    Threshold::MinusM => "minus_M".into(),
                })
            })
            .collect(),
    )
}

fn base_metadata(cfg: &RunConfig, mode: ExecMode) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("crate_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert(
        "scale".into(),
        json!({ "mass": cfg.physics.mass, "r0": cfg.potential.r0 }),
    );
    m.insert(
        "tolerances".into(),
        serde_json::to_value(&cfg.tolerances).unwrap_or(Value::Null),
    );
    m.insert(
        "exec_mode".into(),
        json!(format!("{mode:?}").to_lowercase()),
    );
    m.insert("inclusive_threshold".into(), json!(true));
    m
}

fn is_unsupported(e: &SolverError) -> bool {
    matches!(
        e,
        SolverError::UnsupportedRegime(_)
            | SolverError::InfiniteSpectrum(_)
            | SolverError::ExcludedCase(_)
            | SolverError::OutOfValidatedRange(_)
            | SolverError::NotIntegrable(_)
    )
}

pub const VERIFY_COLUMNS: [&str; 18] = [
    "j",
    "lhs_over_pi",
    "eta_plus_over_pi",
    "eta_minus_over_pi",
    "n_j",
    "half_bound",
    "correction",
    "tail_offset_over_pi",
    "residual_over_pi",
    "residual_n_over_pi",
    "residual_n_plus_1_over_pi",
    "classification",
    "n_lambda_sweep",
    "method_plus",
    "method_minus",
    "critical",
    "effective_r0",
    "note",
];

fn verify_row(r: &LevinsonReport) -> Vec<Value> {
    let (d0, d1) = match r.dual_residuals {
        Some([a, b]) => (over_pi(a), over_pi(b)),
        None => (Value::Null, Value::Null),
    };
    vec![
        num(r.j),
        over_pi(r.lhs),
        over_pi(r.eta_plus),
        over_pi(r.eta_minus),
        json!(r.n_j),
        json!(r.half_bound.as_str()),
        json!(r.correction),
        over_pi(r.tail_offset),
        over_pi(r.residual),
        d0,
        d1,
        json!(r.classification.as_str()),
        r.metadata
            .method_agreement
            .lambda_sweep
            .map(|n| json!(n))
            .unwrap_or(Value::Null),
        serde_json::to_value(r.metadata.method_plus).unwrap_or(Value::Null),
        serde_json::to_value(r.metadata.method_minus).unwrap_or(Value::Null),
        threshold_names(&r.metadata.critical),
        num(r.metadata.effective_r0),
        r.metadata
            .note
            .clone()
            .map(Value::String)
            .unwrap_or(Value::Null),
    ]
}

fn unsupported_row(j: f64, reason: &str) -> Vec<Value> {
    let mut row = vec![Value::Null; VERIFY_COLUMNS.len()];
    row[0] = num(j);
    row[11] = json!(Classification::UnsupportedRegime.as_str());
    row[15] = json!([]);
    row[17] = json!(reason);
    row
}

/// One Levinson report per `j`.
pub fn cmd_verify(cfg: &RunConfig, mode: ExecMode) -> Result<Outcome, RunError> {
    let v = cfg.potential()?;
    let tol = cfg.tolerances();
    let results = levinson::verify_all(&v, cfg.physics.mass, &cfg.physics.j, &tol, mode);
    let mut rows = Vec::new();
    let mut status = Status::Ok;
    for (&j, res) in cfg.physics.j.iter().zip(results) {
        match res {
            Ok(r) => {
                status = status.max(match r.classification {
                    Classification::Verified | Classification::CriticalAmbiguous => Status::Ok,
                    Classification::UnsupportedRegime => Status::Unsupported,
                    Classification::Violated => Status::Violated,
                });
                rows.push(verify_row(&r));
            }
            Err(e) if is_unsupported(&e) => {
                status = status.max(Status::Unsupported);
                rows.push(unsupported_row(j, &e.to_string()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome {
        command: "verify",
        table: Table {
            columns: VERIFY_COLUMNS.to_vec(),
            rows,
        },
        metadata: Value::Object(base_metadata(cfg, mode)),
        status,
    })
}

pub const PHASE_COLUMNS: [&str; 6] = ["j", "lambda", "e", "k", "tan_eta", "eta"];

/// Path `λ: 0 → 1` at the first energy, then the energy grid at `λ = 1`.
fn phase_path(cfg: &RunConfig, side: Side) -> Vec<(f64, f64)> {
    let g = &cfg.energy_grid;
    let m = cfg.physics.mass;
    let sign = if side == Side::Plus { 1.0 } else { -1.0 };
    let energies: Vec<f64> = if g.points == 1 {
        vec![g.min]
    } else {
        (0..g.points)
            .map(|i| g.min + (g.max - g.min) * i as f64 / (g.points - 1) as f64)
            .collect()
    };
    let n = cfg.lambda_grid.points;
    let mut path: Vec<(f64, f64)> = (0..n)
        .map(|i| (i as f64 / n as f64, sign * energies[0] * m))
        .collect();
    path.extend(energies.iter().map(|&e| (1.0, sign * e * m)));
    path
}

/// Unwrapped phase shifts along λ and then along E, one block per `(j, side)`.
pub fn cmd_phase(cfg: &RunConfig, mode: ExecMode) -> Result<Outcome, RunError> {
    let v = cfg.potential()?;
    let opts = cfg.tolerances().solver;
    let jobs: Vec<(f64, Side)> = cfg
        .physics
        .j
        .iter()
        .flat_map(|&j| cfg.energy_grid.sides.iter().map(move |&s| (j, s)))
        .collect();
    let blocks = exec::try_map(
        mode,
        &jobs,
        |&(j, side)| -> Result<Vec<Vec<Value>>, SolverError> {
            // Negative j: η_{−j}(E; V) = η_j(−E; −V).
            let (pot, jj, flip) = if j < 0.0 {
                (v.negated(), -j, -1.0)
            } else {
                (v.clone(), j, 1.0)
            };
            let spec = ProblemSpec::new(pot, cfg.physics.mass, jj, 1.0)?;
            let path: Vec<(f64, f64)> = phase_path(cfg, side)
                .into_iter()
                .map(|(l, e)| (l, flip * e))
                .collect();
            let rec = phase_sweep(&spec, &path, &opts)?;
            Ok(rec
                .samples
                .iter()
                .map(|s| {
                    vec![
                        num(j),
                        num(s.lambda),
                        num(flip * s.e),
                        num(s.k),
                        num(s.tan_eta),
                        num(s.eta),
                    ]
                })
                .collect())
        },
    );
    let mut rows = Vec::new();
    let mut status = Status::Ok;
    match blocks {
        Ok(b) => rows.extend(b.into_iter().flatten()),
        Err(e) if is_unsupported(&e) => status = Status::Unsupported,
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome {
        command: "phase",
        table: Table {
            columns: PHASE_COLUMNS.to_vec(),
            rows,
        },
        metadata: Value::Object(base_metadata(cfg, mode)),
        status,
    })
}

pub const SPECTRUM_COLUMNS: [&str; 9] = [
    "j",
    "n_j",
    "bound_energies",
    "threshold_bound",
    "half_bound",
    "critical",
    "n_direct",
    "n_lambda_sweep",
    "grid_points",
];

/// Spectrum for `(V, −j)` from the spectrum for `(−V, j)`.
pub fn mirror_spectrum(r: &SpectrumReport) -> SpectrumReport {
    SpectrumReport {
        j: -r.j,
        bound_energies: r.bound_energies.iter().rev().map(|e| -e).collect(),
        threshold_bound: r.threshold_bound.iter().rev().map(|t| t.flip()).collect(),
        half_bound: r.half_bound.flip(),
        critical: r.critical.iter().rev().map(|t| t.flip()).collect(),
        ..r.clone()
    }
}

/// Spectrum for one `j` of any sign.
pub fn spectrum_for(
    v: &PotentialModel,
    mass: f64,
    j: f64,
    tol: &Tolerances,
    mode: ExecMode,
) -> crate::Result<SpectrumReport> {
    if j < 0.0 {
        return Ok(mirror_spectrum(&spectrum_for(
            &v.negated(),
            mass,
            -j,
            tol,
            mode,
        )?));
    }
    let spec = ProblemSpec::new(v.clone(), mass, j, 1.0)?;
    let spec = match spec.potential.tail() {
        Tail::Power { b, n } if n > 2.0 && b != 0.0 => {
            let r_eff = spec
                .potential
                .r0()
                .max((b.abs() / levinson::TAIL_EPSILON).powf(1.0 / (n - 2.0)));
            ProblemSpec {
                potential: spec.potential.fold_tail(r_eff)?,
                ..spec
            }
        }
        _ => spec,
    };
    spectrum::spectrum(&spec, tol.tol_e * mass, tol.tol_half, &tol.solver, mode)
}

pub fn cmd_spectrum(cfg: &RunConfig, mode: ExecMode) -> Result<Outcome, RunError> {
    let v = cfg.potential()?;
    let tol = cfg.tolerances();
    let results = exec::map(mode, &cfg.physics.j, |&j| {
        spectrum_for(&v, cfg.physics.mass, j, &tol, mode)
    });
    let mut rows = Vec::new();
    let mut status = Status::Ok;
    for (&j, res) in cfg.physics.j.iter().zip(results) {
        match res {
            Ok(r) => rows.push(vec![
                num(j),
                json!(r.n_j),
                Value::Array(r.bound_energies.iter().map(|&e| num(e)).collect()),
                threshold_names(&r.threshold_bound),
                json!(r.half_bound.as_str()),
                threshold_names(&r.critical),
                json!(r.method_agreement.direct),
                r.method_agreement
                    .lambda_sweep
                    .map(|n| json!(n))
                    .unwrap_or(Value::Null),
                json!(r.grid_points),
            ]),
            Err(e) if is_unsupported(&e) => {
                status = status.max(Status::Unsupported);
                let mut row = vec![Value::Null; SPECTRUM_COLUMNS.len()];
                row[0] = num(j);
                rows.push(row);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome {
        command: "spectrum",
        table: Table {
            columns: SPECTRUM_COLUMNS.to_vec(),
            rows,
        },
        metadata: Value::Object(base_metadata(cfg, mode)),
        status,
    })
}

pub const SWEEP_COLUMNS: [&str; 5] = ["parameter", "value", "j", "series", "y"];

/// Series emitted per `(value, j)` in a family sweep.
pub const SWEEP_SERIES: [&str; 6] = [
    "n_j",
    "eta_plus_over_pi",
    "eta_minus_over_pi",
    "a_plus",
    "a_minus",
    "residual_over_pi",
];

/// Long-format table over a one-parameter family.
pub fn cmd_sweep_family(cfg: &RunConfig, mode: ExecMode) -> Result<Outcome, RunError> {
    let Some(sweep) = &cfg.sweep else {
        return Err(ConfigError::new("sweep", "sweep-family needs a [sweep] section").into());
    };
    let name = match sweep.parameter {
        SweepParameter::Depth => "depth",
        SweepParameter::TailB => "tail_b",
    };
    let values = cfg.sweep_values();
    let tol = cfg.tolerances();
    let mass = cfg.physics.mass;
    let jobs: Vec<(f64, f64)> = values
        .iter()
        .flat_map(|&x| cfg.physics.j.iter().map(move |&j| (x, j)))
        .collect();
    let results = exec::try_map(
        mode,
        &jobs,
        |&(x, j)| -> Result<(Vec<Value>, Status), RunError> {
            let v = match sweep.parameter {
                SweepParameter::Depth => cfg.potential_with(Some(x), None)?,
                SweepParameter::TailB => cfg.potential_with(None, Some(x))?,
            };
            let r = match levinson::verify(&v, mass, j, &tol, ExecMode::Sequential) {
                Ok(r) => r,
                Err(e) if is_unsupported(&e) => return Ok((Vec::new(), Status::Unsupported)),
                Err(e) => return Err(e.into()),
            };
            // Threshold ratios of the positive-j problem the report came from.
            let (pot, jj) = if j < 0.0 { (v.negated(), -j) } else { (v, j) };
            let spec = ProblemSpec::new(pot, mass, jj, 1.0)?;
            let spec = if r.metadata.effective_r0 != spec.potential.r0() {
                ProblemSpec {
                    potential: spec.potential.fold_tail(r.metadata.effective_r0)?,
                    ..spec
                }
            } else {
                spec
            };
            let mut a_plus = threshold_angles(&spec, Threshold::PlusM, &tol.solver)?
                .interior
                .value;
            let mut a_minus = threshold_angles(&spec, Threshold::MinusM, &tol.solver)?
                .interior
                .value;
            if j < 0.0 {
                std::mem::swap(&mut a_plus, &mut a_minus);
            }
            let ys = [
                r.n_j as f64,
                r.eta_plus_multiple as f64,
                r.eta_minus_multiple as f64,
                a_plus,
                a_minus,
                r.residual / std::f64::consts::PI,
            ];
            let status = match r.classification {
                Classification::Violated => Status::Violated,
                Classification::UnsupportedRegime => Status::Unsupported,
                _ => Status::Ok,
            };
            let row = SWEEP_SERIES
                .iter()
                .zip(ys)
                .map(|(s, y)| json!([name, num(x), num(j), s, num(y)]))
                .collect();
            Ok((row, status))
        },
    )?;
    let mut rows = Vec::new();
    let mut status = Status::Ok;
    for (block, s) in results {
        status = status.max(s);
        for r in block {
            if let Value::Array(cells) = r {
                rows.push(cells);
            }
        }
    }
    let mut meta = base_metadata(cfg, mode);
    meta.insert(
        "sweep_values".into(),
        Value::Array(values.iter().map(|&x| num(x)).collect()),
    );
    Ok(Outcome {
        command: "sweep-family",
        table: Table {
            columns: SWEEP_COLUMNS.to_vec(),
            rows,
        },
        metadata: Value::Object(meta),
        status,
    })
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.to_string(),
            (None, Some(f)) => format_float(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
    }
}

pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| RunError::Io(std::io::Error::other(e));
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(csv_cell)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(outcome: &Outcome, cfg: &RunConfig) -> Value {
    let rows: Vec<Value> = outcome
        .table
        .rows
        .iter()
        .map(|r| {
            Value::Object(
                outcome
                    .table
                    .columns
                    .iter()
                    .map(|c| c.to_string())
                    .zip(r.iter().cloned())
                    .collect(),
            )
        })
        .collect();
    let mut meta = outcome.metadata.clone();
    if let Value::Object(m) = &mut meta {
        m.insert("command".into(), json!(outcome.command));
        m.insert("columns".into(), json!(outcome.table.columns));
        m.insert("status".into(), json!(outcome.status));
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "config_echo": serde_json::to_value(cfg).unwrap_or(Value::Null),
        "rows": rows,
        "metadata": meta,
    })
}

pub fn write_output<W: Write>(
    outcome: &Outcome,
    cfg: &RunConfig,
    format: Format,
    mut out: W,
) -> Result<(), RunError> {
    match format {
        Format::Csv => write_csv(&outcome.table, out),
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &to_json(outcome, cfg))
                .map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREE: &str = "[potential]\nkind = \"free\"\n[physics]\nj = [0.5, 1.5]\n";

    #[test]
    fn parses_defaults() {
        let cfg = RunConfig::from_toml_str(FREE).unwrap();
        assert_eq!(cfg.physics.mass, 1.0);
        assert_eq!(cfg.potential.r0, 1.0);
        assert_eq!(cfg.tolerances.tol_half, 1e-6);
        assert_eq!(cfg.output.format, Format::Csv);
    }

    #[test]
    fn bad_j_names_field() {
        let err =
            RunConfig::from_toml_str("[potential]\nkind = \"free\"\n[physics]\nj = [0.5, 1.0]\n")
                .unwrap_err();
        assert_eq!(err.field, "physics.j[1]");
        assert!(err.to_string().starts_with("physics.j[1]:"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_toml_str("[potential]\nkind = \"free\"\nwidth = 2\n").is_err());
        let err = RunConfig::from_toml_str("[potential]\nkind = \"square_well\"\n").unwrap_err();
        assert_eq!(err.field, "potential.depth");
        let err =
            RunConfig::from_toml_str("[potential]\nkind = \"free\"\n[tolerances]\ntol_e = -1.0\n")
                .unwrap_err();
        assert_eq!(err.field, "tolerances.tol_e");
    }

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.1, 1.0, -2.5e-300, 1e21, std::f64::consts::PI, 123456.789] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(0.1), "0.1");
    }

    #[test]
    fn csv_layout() {
        let t = Table {
            columns: vec!["a", "b"],
            rows: vec![
                vec![json!(1), json!([0.5, 0.25])],
                vec![Value::Null, json!("x,y")],
            ],
        };
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "a,b\n1,0.5;0.25\n,\"x,y\"\n"
        );
    }

    #[test]
    fn random_sweep_is_seeded() {
        let text = "seed = 7\n[potential]\nkind = \"square_well\"\ndepth = -1.0\n[sweep]\nparameter = \"depth\"\nstart = -5.0\nstop = 0.0\npoints = 5\nmode = \"random\"\n";
        let a = RunConfig::from_toml_str(text).unwrap().sweep_values();
        let b = RunConfig::from_toml_str(text).unwrap().sweep_values();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]) && a.iter().all(|&x| (-5.0..=0.0).contains(&x)));
    }

    #[test]
    fn empty_sweep_is_empty() {
        let text = "[potential]\nkind = \"square_well\"\ndepth = -1.0\n[sweep]\nparameter = \"depth\"\nstart = -5.0\nstop = 0.0\npoints = 0\n";
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let out = cmd_sweep_family(&cfg, ExecMode::Sequential).unwrap();
        assert!(out.table.rows.is_empty());
        assert_eq!(out.status.exit_code(), 0);
    }

    #[test]
    fn free_verify_rows() {
        let cfg = RunConfig::from_toml_str(FREE).unwrap();
        let out = cmd_verify(&cfg, ExecMode::Sequential).unwrap();
        assert_eq!(out.status, Status::Ok);
        for row in &out.table.rows {
            assert_eq!(row[1], json!(0.0));
            assert_eq!(row[4], json!(0));
            assert_eq!(row[11], json!("VERIFIED"));
        }
    }
}
