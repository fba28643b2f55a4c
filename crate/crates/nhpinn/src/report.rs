//! Run reports: `report.json`, `summary.txt` and per-stage trajectory CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nhpinn_core::pinn::TrainedModel;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const BASELINE_FILE: &str = "baseline.json";
pub const TRANSFER_FILE: &str = "transfer.json";
pub const TRAJECTORY_DIR: &str = "trajectories";

const TRAJECTORY_HEADER: [&str; 6] = ["epoch", "total_loss", "residual_loss", "boundary_loss", "extra_loss", "rel_error"];

/// The error suite on the evaluation grid. Fields stay `None` when the
/// stage that produces them did not run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSuite {
    /// `‖p - u_ε‖ / ‖u_ε‖`
    pub e1: Option<f64>,
    /// `‖w - u_ε‖ / ‖u_ε‖`
    pub e2: Option<f64>,
    /// `‖p - w‖ / ‖w‖`
    pub e3: Option<f64>,
    /// `‖v - u_ε‖ / ‖u_ε‖`
    pub e4: Option<f64>,
    /// `‖a*_neural - a*‖ / ‖a*‖`, slow1d only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_a: Option<f64>,
}

impl ErrorSuite {
    /// `(name, value)` of the fields the experiment reports.
    pub fn fields(&self, kind: ExperimentKind) -> Vec<(&'static str, Option<f64>)> {
        let mut f = vec![("e1", self.e1), ("e2", self.e2), ("e3", self.e3), ("e4", self.e4)];
        if kind == ExperimentKind::Slow1d {
            f.push(("e_a", self.e_a));
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefficientSummary {
    Tensor {
        neural: [[f64; 2]; 2],
        reference: [[f64; 2]; 2],
    },
    Field {
        xs: Vec<f64>,
        neural: Vec<f64>,
        exact: Vec<f64>,
    },
    Reaction {
        diffusivity: f64,
        neural: f64,
        reference: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSummary {
    pub name: String,
    pub windowed_error: f64,
    /// Error of the final network; absent for warm-started slow-field cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_error: Option<f64>,
    pub epochs: usize,
}

/// Error history of a direct (classical PINN) solve against `u_ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectSummary {
    pub windowed: f64,
    pub initial: f64,
    #[serde(rename = "final")]
    pub final_error: f64,
    pub max: f64,
    pub epochs: usize,
}

impl DirectSummary {
    pub fn from_model(m: &TrainedModel) -> Self {
        Self {
            windowed: m.windowed_error,
            initial: m.errors.first().copied().unwrap_or(f64::NAN),
            final_error: m.errors.last().copied().unwrap_or(f64::NAN),
            max: m.errors.iter().copied().fold(f64::NAN, f64::max),
            epochs: m.errors.len(),
        }
    }
}

/// `baseline.json` / `transfer.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectRecord {
    pub summary: DirectSummary,
    pub seed: u64,
    /// Checkpoint the run started from (transfer only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase", deny_unknown_fields)]
pub enum RunStatus {
    Complete,
    Failed { stage: String, message: String },
    /// Only direct solves have been run in this directory.
    Pending,
}

/// One row per epoch: loss terms before the update and the relative error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub total: Vec<f64>,
    pub residual: Vec<f64>,
    pub boundary: Vec<f64>,
    pub extra: Vec<f64>,
    pub error: Vec<f64>,
}

impl Trajectory {
    pub fn from_model(m: &TrainedModel) -> Self {
        Self::with_errors(m, &m.errors)
    }

    /// Loss history of `m` against another error series of the same run.
    pub fn with_errors(m: &TrainedModel, errors: &[f64]) -> Self {
        Self {
            total: m.losses.iter().map(|l| l.total).collect(),
            residual: m.losses.iter().map(|l| l.residual).collect(),
            boundary: m.losses.iter().map(|l| l.boundary).collect(),
            extra: m.losses.iter().map(|l| l.extra + l.mean).collect(),
            error: errors.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.error.len()
    }

    pub fn is_empty(&self) -> bool {
        self.error.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::format(e.to_string());
        w.write_record(TRAJECTORY_HEADER).map_err(err)?;
        for k in 0..self.len() {
            w.serialize((k, self.total[k], self.residual[k], self.boundary[k], self.extra[k], self.error[k]))
                .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::format(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::format(e.to_string()))?;
        if header.iter().ne(TRAJECTORY_HEADER) {
            return Err(Error::format(format!("unexpected trajectory header {header:?}")));
        }
        let mut t = Self::default();
        for (k, row) in r.deserialize::<(usize, f64, f64, f64, f64, f64)>().enumerate() {
            let (epoch, total, residual, boundary, extra, error) = row.map_err(|e| Error::format(e.to_string()))?;
            if epoch != k {
                return Err(Error::format(format!("trajectory row {k} has epoch {epoch}")));
            }
            t.total.push(total);
            t.residual.push(residual);
            t.boundary.push(boundary);
            t.extra.push(extra);
            t.error.push(error);
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorReport {
    pub experiment: ExperimentKind,
    pub epsilon: f64,
    pub status: RunStatus,
    pub errors: ErrorSuite,
    /// Means of the last `window` epochs of the homogenized solve, against `w` and `u_ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windowed: Option<WindowedErrors>,
    pub cells: Vec<CellSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<DirectSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<DirectSummary>,
    pub config: ExperimentConfig,
    pub seeds: BTreeMap<String, u64>,
    /// Seconds per stage; the only field that differs between identical runs.
    pub wall_clock: BTreeMap<String, f64>,
    /// Stored as CSV files next to the report.
    #[serde(skip)]
    pub trajectories: BTreeMap<String, Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowedErrors {
    pub e1: f64,
    pub e3: f64,
}

impl ErrorReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment,
            epsilon: config.epsilon,
            status: RunStatus::Pending,
            errors: ErrorSuite::default(),
            windowed: None,
            cells: Vec::new(),
            coefficients: None,
            baseline: None,
            transfer: None,
            config: config.clone(),
            seeds: BTreeMap::new(),
            wall_clock: BTreeMap::new(),
            trajectories: BTreeMap::new(),
        }
    }

    /// Checks the invariant that every reported error is finite and nonnegative.
    pub fn validate(&self) -> Result<()> {
        let mut all: Vec<(String, f64)> = self
            .errors
            .fields(self.experiment)
            .into_iter()
            .filter_map(|(n, v)| v.map(|v| (n.to_string(), v)))
            .collect();
        for (name, s) in [("baseline", &self.baseline), ("transfer", &self.transfer)] {
            if let Some(s) = s {
                all.push((format!("{name}.windowed"), s.windowed));
            }
        }
        for c in &self.cells {
            all.push((format!("cell {}", c.name), c.windowed_error));
        }
        match all.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((n, v)) => Err(Error::format(format!("error {n} = {v} is not finite and nonnegative"))),
            None => Ok(()),
        }
    }

    /// Human-readable table of the error suite and the direct solves.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment {}  epsilon {}", self.experiment.name(), self.epsilon);
        match &self.status {
            RunStatus::Complete => {}
            RunStatus::Failed { stage, message } => {
                let _ = writeln!(s, "FAILED in stage {stage}: {message}");
            }
            RunStatus::Pending => {
                let _ = writeln!(s, "pipeline not run");
            }
        }
        let fields = self.errors.fields(self.experiment);
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(s, "{}", fields.iter().map(|(n, _)| format!("{n:>10}")).collect::<String>());
        let _ = writeln!(s, "{}", fields.iter().map(|(_, v)| format!("{:>10}", cell(*v))).collect::<String>());
        for c in &self.cells {
            let _ = writeln!(s, "cell {:<12} windowed error {:.6}", c.name, c.windowed_error);
        }
        for (name, d) in [("baseline", &self.baseline), ("transfer", &self.transfer)] {
            if let Some(d) = d {
                let _ = writeln!(
                    s,
                    "{name:<8} windowed {:.6}  initial {:.6}  final {:.6}  max {:.6}",
                    d.windowed, d.initial, d.final_error, d.max
                );
            }
        }
        s
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn save_trajectory(dir: &Path, name: &str, t: &Trajectory) -> Result<()> {
    write_atomic(&dir.join(TRAJECTORY_DIR).join(format!("{name}.csv")), t.to_csv()?.as_bytes())
}

/// Writes `report.json`, `summary.txt` and one CSV per trajectory into `dir`.
/// Emitting the same report twice leaves identical files.
pub fn emit_report(report: &ErrorReport, dir: &Path) -> Result<()> {
    report.validate()?;
    for (name, t) in &report.trajectories {
        save_trajectory(dir, name, t)?;
    }
    write_atomic(&dir.join(REPORT_FILE), to_json(report)?.as_bytes())?;
    write_atomic(&dir.join(SUMMARY_FILE), report.summary().as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// Parses `report.json` and the trajectory CSVs of `dir`.
pub fn read_report(dir: &Path) -> Result<ErrorReport> {
    let mut report: ErrorReport = read_json(&dir.join(REPORT_FILE))?;
    let tdir = dir.join(TRAJECTORY_DIR);
    if tdir.is_dir() {
        let entries = std::fs::read_dir(&tdir).map_err(|e| Error::io(&tdir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&tdir, e))?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                report.trajectories.insert(name, Trajectory::from_csv(&text)?);
            }
        }
    }
    Ok(report)
}

pub fn save_direct(dir: &Path, file: &str, record: &DirectRecord) -> Result<()> {
    write_atomic(&dir.join(file), to_json(record)?.as_bytes())
}

pub fn read_direct(dir: &Path, file: &str) -> Result<Option<DirectRecord>> {
    let path = dir.join(file);
    if !path.exists() {
        return Ok(None);
    }
    read_json(&path).map(Some)
}

/// Folds `baseline.json` and `transfer.json` of `dir` into its report (creating
/// a pending one when the pipeline has not run there) and re-emits it.
pub fn collect_report(dir: &Path) -> Result<ErrorReport> {
    let baseline = read_direct(dir, BASELINE_FILE)?;
    let transfer = read_direct(dir, TRANSFER_FILE)?;
    let mut report = if dir.join(REPORT_FILE).exists() {
        read_report(dir)?
    } else {
        let cfg = baseline
            .as_ref()
            .or(transfer.as_ref())
            .map(|r| r.config.clone())
            .ok_or_else(|| Error::config(format!("{} holds no report", dir.display())))?;
        ErrorReport::new(&cfg)
    };
    for (name, rec, slot) in [
        ("baseline", baseline, &mut report.baseline),
        ("transfer", transfer, &mut report.transfer),
    ] {
        if let Some(rec) = rec {
            *slot = Some(rec.summary);
            report.seeds.insert(name.to_string(), rec.seed);
            report.wall_clock.insert(name.to_string(), rec.wall_clock);
        }
    }
    emit_report(&report, dir)?;
    Ok(report)
}
