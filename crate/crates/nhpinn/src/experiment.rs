//! The three-step pipeline, the FD reference path, classical-PINN baselines
//! and transfer probes.
//!
//! Solution roles on the evaluation grid:
//!
//! | name | method | coefficients |
//! |------|--------|--------------|
//! | `u_eps` | FD on the multiscale PDE | exact |
//! | `v` | FD on the homogenized PDE | reference cells |
//! | `w` | FD on the homogenized PDE | neural cells |
//! | `p` | PINN on the homogenized PDE | neural cells |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nhpinn_core::collocation::uniform_grid_1d;
use nhpinn_core::diffnet::NetworkParams;
use nhpinn_core::homogenize::{
    homogenized_field_1d_slow, homogenized_reaction, homogenized_reaction_reference, homogenized_tensor_2d,
    homogenized_tensor_2d_reference, solve_cell, CellProblem, CellSolveConfig, FieldMode, HomogenizedModel,
    HomogenizedPayload, Provenance, SlowFieldConfig,
};
use nhpinn_core::pinn::{relative_l2, train_from, ErrorProbe, LossBreakdown, TrainedModel};
use nhpinn_core::reference::{reference_cell_solution, Grid, GridSolution, SolverMeta};
use serde::{Deserialize, Serialize};

use crate::cache::ArtifactCache;
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{ExperimentConfig, ExperimentKind, SolveStage};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::grid_file::save_grid_csv;
use crate::model_file::encode_model;
use crate::problems::Family;
use crate::report::{
    emit_report, save_direct, save_trajectory, CellSummary, CoefficientSummary, DirectRecord, DirectSummary,
    ErrorReport, ErrorSuite, RunStatus, Trajectory, WindowedErrors, BASELINE_FILE, TRANSFER_FILE,
};
use crate::seeds::{stage_seed, Stage};

pub const CACHE_SUBDIR: &str = "cache";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const MODEL_DIR: &str = "models";
pub const SOLUTION_DIR: &str = "solutions";
/// Checkpoint of the homogenized network, the usual `--init` of a transfer run.
pub const HOMOGENIZED_CHECKPOINT: &str = "checkpoints/homogenized.ckpt";

/// Where a run writes and which cache it reads.
#[derive(Debug)]
pub struct RunEnv {
    pub out: PathBuf,
    pub cache: ArtifactCache,
    /// Print training progress to stderr.
    pub verbose: bool,
}

impl RunEnv {
    /// Output in `out`, cache in `$NHPINN_CACHE_DIR` or `out/cache`.
    pub fn new(out: impl Into<PathBuf>) -> Self {
        let out = out.into();
        let cache = ArtifactCache::from_env(&out.join(CACHE_SUBDIR));
        Self {
            out,
            cache,
            verbose: false,
        }
    }

    pub fn with_cache(out: impl Into<PathBuf>, cache: ArtifactCache) -> Self {
        Self {
            out: out.into(),
            cache,
            verbose: false,
        }
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }

    fn observer<'a>(&'a self, stage: &'a str) -> impl FnMut(usize, &LossBreakdown, f64) + 'a {
        move |epoch, loss, err| {
            if self.verbose && epoch % 500 == 0 {
                eprintln!("  {stage} epoch {epoch:>6} loss {:.3e} error {err:.4}", loss.total);
            }
        }
    }
}

/// FD references on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub u_eps: GridSolution,
    pub v: GridSolution,
    pub reference_model: HomogenizedModel,
}

/// One trained cell surrogate.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub name: String,
    pub problem: CellProblem,
    pub model: TrainedModel,
}

impl CellRun {
    fn summary(&self) -> CellSummary {
        CellSummary {
            name: self.name.clone(),
            windowed_error: self.model.windowed_error,
            final_error: self.model.errors.last().copied(),
            epochs: self.model.epochs(),
        }
    }
}

fn eval_stride(cfg: &ExperimentConfig) -> usize {
    (cfg.reference.fine_nodes - 1) / (cfg.reference.eval_nodes - 1)
}

fn time_step(cfg: &ExperimentConfig) -> f64 {
    match cfg.experiment {
        ExperimentKind::Dr => cfg.reference.time_step,
        _ => 0.0,
    }
}

/// FD solution of the multiscale PDE on the evaluation grid.
pub fn fine_reference(cfg: &ExperimentConfig, env: &RunEnv) -> Result<GridSolution> {
    let fam = Family::new(cfg);
    let (n, dt) = (cfg.reference.fine_nodes, time_step(cfg));
    let desc = format!("u_eps {} n={n} dt={dt:e}", fam.describe());
    let fine = env.cache.grid("u_eps", &desc, || fam.fine_reference(n, dt))?;
    Ok(fine.subsample(eval_stride(cfg))?)
}

/// FD solution of the homogenized PDE driven by `model`, on the evaluation grid.
pub fn homogenized_fd(cfg: &ExperimentConfig, env: &RunEnv, model: &HomogenizedModel) -> Result<GridSolution> {
    let fam = Family::new(cfg);
    let (n, dt) = (cfg.reference.fine_nodes, time_step(cfg));
    let desc = format!("homogenized-fd {} n={n} dt={dt:e}\n{}", fam.describe(), encode_model(model));
    let fine = env.cache.grid("homog", &desc, || fam.homogenized_reference(model, n, dt))?;
    Ok(fine.subsample(eval_stride(cfg))?)
}

fn cell_names(kind: ExperimentKind) -> &'static [(&'static str, Stage)] {
    match kind {
        ExperimentKind::Elliptic2d => &[("chi_1", Stage::CellX), ("chi_2", Stage::CellY)],
        ExperimentKind::Dr => &[("n", Stage::CellDr)],
        ExperimentKind::Slow1d => &[],
    }
}

fn cell_config(cfg: &ExperimentConfig, dim: usize, seed: u64) -> Result<CellSolveConfig> {
    let c = &cfg.cell;
    Ok(CellSolveConfig {
        train: c.train.to_train(dim, seed)?,
        grid: c.grid,
        oversampling: c.oversampling,
        mean_penalty: c.mean_penalty,
        eval_grid: c.eval_grid,
        reference_grid: c.reference_grid,
    })
}

/// Trains the cell surrogates of the elliptic2d and dr families (cached).
pub fn solve_cells(cfg: &ExperimentConfig, env: &RunEnv) -> Result<Vec<CellRun>> {
    let fam = Family::new(cfg);
    let cells = fam.cells()?;
    let mut runs = Vec::with_capacity(cells.len());
    for (cell, &(name, stage)) in cells.into_iter().zip(cell_names(cfg.experiment)) {
        let cc = cell_config(cfg, cell.dim(), stage_seed(cfg.seed, stage))?;
        let desc = format!("cell {} {name} {cc:?}", fam.describe());
        env.log(&format!("cell {name}"));
        let model = env.cache.trained("cell", &desc, || {
            let mut obs = env.observer(name);
            Ok(solve_cell(&cell, &cc, None, &mut obs)?.model)
        })?;
        runs.push(CellRun {
            name: name.to_string(),
            problem: cell,
            model,
        });
    }
    Ok(runs)
}

fn cell_reference(cfg: &ExperimentConfig, env: &RunEnv, cell: &CellProblem, name: &str) -> Result<GridSolution> {
    let n = cfg.cell.reference_grid;
    let desc = format!("cell-reference {} {name} n={n}", Family::new(cfg).describe());
    env.cache.grid("cellref", &desc, || Ok(reference_cell_solution(cell, n)?))
}

/// Homogenized model from the FD cell path (exact harmonic average for slow1d).
pub fn reference_model(cfg: &ExperimentConfig, env: &RunEnv) -> Result<HomogenizedModel> {
    let fam = Family::new(cfg);
    match cfg.experiment {
        ExperimentKind::Elliptic2d => {
            let cells = fam.cells()?;
            let chi0 = cell_reference(cfg, env, &cells[0], "chi_1")?;
            let chi1 = cell_reference(cfg, env, &cells[1], "chi_2")?;
            let t = homogenized_tensor_2d_reference(&cells[0].coefficient, [&chi0, &chi1], cells[0].period)?;
            Ok(HomogenizedModel::tensor(t, Provenance::Reference)?)
        }
        ExperimentKind::Dr => {
            let cell = fam.cells()?.remove(0);
            let n = cell_reference(cfg, env, &cell, "n")?;
            let r_star = homogenized_reaction_reference(&cell.coefficient, &n)?;
            Ok(HomogenizedModel::reaction(fam.diffusivity(), r_star, Provenance::Reference)?)
        }
        ExperimentKind::Slow1d => {
            let xs = slow_nodes(cfg, &fam)?;
            let values = xs.iter().map(|&x| fam.exact_slow_field(x)).collect::<Result<Vec<_>>>()?;
            Ok(HomogenizedModel::field(xs, values, Provenance::Exact)?)
        }
    }
}

fn slow_nodes(cfg: &ExperimentConfig, fam: &Family) -> Result<Vec<f64>> {
    let nodes = cfg
        .slow_field
        .as_ref()
        .ok_or_else(|| Error::config("slow1d experiment needs the `slow_field` block"))?
        .nodes;
    Ok(uniform_grid_1d(fam.spatial_domain(), nodes)?)
}

/// `u_ε`, `v` and the reference model.
pub fn references(cfg: &ExperimentConfig, env: &RunEnv) -> Result<References> {
    let u_eps = fine_reference(cfg, env)?;
    let reference_model = reference_model(cfg, env)?;
    let v = homogenized_fd(cfg, env, &reference_model)?;
    Ok(References {
        u_eps,
        v,
        reference_model,
    })
}

#[derive(Serialize, Deserialize)]
struct SlowFieldRecord {
    values: Vec<f64>,
    cell_errors: Vec<f64>,
}

/// Neural homogenized model; fills cell summaries, coefficients and `e_a` of `report`.
fn neural_model(
    cfg: &ExperimentConfig,
    env: &RunEnv,
    report: &mut ErrorReport,
    reference: &HomogenizedModel,
) -> Result<HomogenizedModel> {
    let fam = Family::new(cfg);
    let q = cfg.cell.quadrature;
    match cfg.experiment {
        ExperimentKind::Elliptic2d | ExperimentKind::Dr => {
            let runs = timed(report, "cells", || solve_cells(cfg, env))?;
            for (run, &(_, stage)) in runs.iter().zip(cell_names(cfg.experiment)) {
                report.cells.push(run.summary());
                report.seeds.insert(stage.name().to_string(), stage_seed(cfg.seed, stage));
                report
                    .trajectories
                    .insert(format!("cell_{}", run.name), Trajectory::from_model(&run.model));
                save_checkpoint(&run.model.params, &env.out.join(CHECKPOINT_DIR).join(format!("cell_{}.ckpt", run.name)))?;
            }
            let (cell, period) = (&runs[0].problem, runs[0].problem.period);
            let model = match cfg.experiment {
                ExperimentKind::Elliptic2d => {
                    let t = homogenized_tensor_2d(&cell.coefficient, [&runs[0].model.params, &runs[1].model.params], period, q)
                        .map_err(|e| Error::in_stage("coefficients", e))?;
                    HomogenizedModel::tensor(t, Provenance::Neural).map_err(|e| Error::in_stage("coefficients", e))?
                }
                _ => {
                    let r = homogenized_reaction(&cell.coefficient, &runs[0].model.params, period, q)
                        .map_err(|e| Error::in_stage("coefficients", e))?;
                    HomogenizedModel::reaction(fam.diffusivity(), r, Provenance::Neural)
                        .map_err(|e| Error::in_stage("coefficients", e))?
                }
            };
            report.coefficients = Some(match (&model.payload, &reference.payload) {
                (HomogenizedPayload::Tensor(n), HomogenizedPayload::Tensor(r)) => CoefficientSummary::Tensor {
                    neural: *n,
                    reference: *r,
                },
                (HomogenizedPayload::Reaction { diffusivity, r_star }, HomogenizedPayload::Reaction { r_star: r, .. }) => {
                    CoefficientSummary::Reaction {
                        diffusivity: *diffusivity,
                        neural: *r_star,
                        reference: *r,
                    }
                }
                _ => unreachable!("neural and reference models share the family"),
            });
            Ok(model)
        }
        ExperimentKind::Slow1d => {
            let stage = Stage::SlowField;
            let seed = stage_seed(cfg.seed, stage);
            report.seeds.insert(stage.name().to_string(), seed);
            let sf = cfg.slow_field.as_ref().expect("validated slow1d config");
            let xs = slow_nodes(cfg, &fam)?;
            let scfg = SlowFieldConfig {
                cell: cell_config(cfg, 1, seed)?,
                warm_epochs: sf.warm_epochs,
                quadrature: q,
            };
            let desc = format!("slow-field {} xs={xs:?} {scfg:?}", fam.describe());
            let rec = timed(report, "cells", || {
                env.log("slow field");
                env.cache.json("slowfield", &desc, || {
                    let f = homogenized_field_1d_slow(&fam.slow_coefficient(), &xs, FieldMode::Neural(&scfg))?;
                    Ok(SlowFieldRecord {
                        values: f.values,
                        cell_errors: f.cell_errors,
                    })
                })
            })?;
            for (k, e) in rec.cell_errors.iter().enumerate() {
                report.cells.push(CellSummary {
                    name: format!("x{k:02}"),
                    windowed_error: *e,
                    final_error: None,
                    epochs: if k == 0 { cfg.cell.train.epochs } else { sf.warm_epochs },
                });
            }
            let HomogenizedPayload::Field { values: exact, .. } = &reference.payload else {
                unreachable!("slow1d reference is a field")
            };
            report.errors.e_a = Some(relative_l2(&rec.values, exact)?);
            report.coefficients = Some(CoefficientSummary::Field {
                xs: xs.clone(),
                neural: rec.values.clone(),
                exact: exact.clone(),
            });
            HomogenizedModel::field(xs, rec.values, Provenance::Neural).map_err(|e| Error::in_stage("coefficients", e))
        }
    }
}

/// Runs `f` as pipeline stage `name`: records its wall clock and tags its errors.
fn timed<T>(report: &mut ErrorReport, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    *report.wall_clock.entry(name.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
    out.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::in_stage(name, other),
    })
}

fn pinn_solution(cfg: &ExperimentConfig, grid: &Grid, values: Vec<f64>) -> Result<GridSolution> {
    let fam = Family::new(cfg);
    let resolution = match grid {
        Grid::Line(xs) => vec![xs.len()],
        Grid::Plane { xs, ys } => vec![xs.len(), ys.len()],
    };
    let time = (cfg.experiment == ExperimentKind::Dr).then(|| fam.horizon());
    Ok(GridSolution::new(
        grid.clone(),
        values,
        SolverMeta {
            scheme: "pinn".into(),
            resolution,
            time_step: None,
            time,
        },
    )?)
}

fn save_model(env: &RunEnv, name: &str, model: &HomogenizedModel) -> Result<()> {
    write_atomic(&env.out.join(MODEL_DIR).join(format!("{name}.homog")), encode_model(model).as_bytes())
}

fn save_solution(env: &RunEnv, name: &str, sol: &GridSolution) -> Result<()> {
    save_grid_csv(sol, &env.out.join(SOLUTION_DIR).join(format!("{name}.csv")))
}

fn pipeline(cfg: &ExperimentConfig, env: &RunEnv, report: &mut ErrorReport) -> Result<()> {
    let fam = Family::new(cfg);
    env.log(&format!("{} eps={}: references", cfg.experiment.name(), cfg.epsilon));
    let refs = timed(report, "references", || references(cfg, env))?;
    let u = &refs.u_eps;
    report.errors.e4 = Some(relative_l2(&refs.v.values, &u.values)?);
    save_solution(env, "u_eps", u)?;
    save_solution(env, "v", &refs.v)?;
    save_model(env, "reference", &refs.reference_model)?;

    let model = neural_model(cfg, env, report, &refs.reference_model)?;
    save_model(env, "neural", &model)?;
    let w = timed(report, "references", || homogenized_fd(cfg, env, &model))?;
    report.errors.e2 = Some(relative_l2(&w.values, &u.values)?);
    save_solution(env, "w", &w)?;

    let stage = Stage::Homogenized;
    let seed = stage_seed(cfg.seed, stage);
    report.seeds.insert(stage.name().to_string(), seed);
    env.log("homogenized solve");
    let trained = timed(report, "homogenized", || {
        let problem = fam.homogenized_problem(&model)?;
        let colloc = fam.collocation(&cfg.homogenized)?;
        let points = fam.eval_inputs(&u.grid);
        let probe = ErrorProbe::new(fam.input_dim(), points, w.values.clone())?.with_companion(u.values.clone())?;
        let train = cfg.homogenized.train.to_train(fam.input_dim(), seed)?;
        let init = NetworkParams::init(&train.dims, seed)?;
        let mut obs = env.observer("homogenized");
        let m = train_from(init, &problem, &colloc, &train, &probe, &mut obs)?;
        let p = probe.predict(&m.params)?;
        Ok((m, p))
    })?;
    let (m, p) = trained;
    let p = pinn_solution(cfg, &u.grid, p)?;
    report.errors.e1 = Some(relative_l2(&p.values, &u.values)?);
    report.errors.e3 = Some(relative_l2(&p.values, &w.values)?);
    report.windowed = Some(WindowedErrors {
        e1: m.companion_windowed[0],
        e3: m.windowed_error,
    });
    report.trajectories.insert("homogenized_e3".into(), Trajectory::from_model(&m));
    report
        .trajectories
        .insert("homogenized_e1".into(), Trajectory::with_errors(&m, &m.companion_errors[0]));
    save_solution(env, "p", &p)?;
    save_checkpoint(&m.params, &env.out.join(HOMOGENIZED_CHECKPOINT))?;
    Ok(())
}

/// Runs the pipeline and writes its report into `env.out`. On failure the
/// partial report, tagged with the failing stage, is still written.
pub fn run_experiment(cfg: &ExperimentConfig, env: &RunEnv) -> Result<ErrorReport> {
    cfg.validate()?;
    let mut report = ErrorReport::new(cfg);
    match pipeline(cfg, env, &mut report) {
        Ok(()) => {
            report.status = RunStatus::Complete;
            emit_report(&report, &env.out)?;
            Ok(report)
        }
        Err(e) => {
            let stage = match &e {
                Error::Stage { stage, .. } => stage.clone(),
                _ => "output".to_string(),
            };
            report.status = RunStatus::Failed {
                stage,
                message: e.root().to_string(),
            };
            // Partial reports may hold non-finite values; keep what can be written.
            if emit_report(&report, &env.out).is_err() {
                report.errors = ErrorSuite::default();
                let _ = emit_report(&report, &env.out);
            }
            Err(e)
        }
    }
}

/// FD references only: writes `u_eps`, `v` and the reference model; returns `e4`.
pub fn run_reference(cfg: &ExperimentConfig, env: &RunEnv) -> Result<(References, f64)> {
    cfg.validate()?;
    let refs = references(cfg, env)?;
    let e4 = relative_l2(&refs.v.values, &refs.u_eps.values)?;
    save_solution(env, "u_eps", &refs.u_eps)?;
    save_solution(env, "v", &refs.v)?;
    save_model(env, "reference", &refs.reference_model)?;
    Ok((refs, e4))
}

/// Result of a classical PINN solve of the multiscale PDE.
#[derive(Debug, Clone)]
pub struct DirectRun {
    pub record: DirectRecord,
    pub model: TrainedModel,
}

fn direct(cfg: &ExperimentConfig, env: &RunEnv, stage: Stage, init: Option<&Path>) -> Result<DirectRun> {
    cfg.validate()?;
    let fam = Family::new(cfg);
    let solve: &SolveStage = if stage == Stage::Transfer { &cfg.transfer } else { &cfg.baseline };
    let u = fine_reference(cfg, env)?;
    let seed = stage_seed(cfg.seed, stage);
    let start = Instant::now();
    let problem = fam.multiscale_problem()?;
    let params = match init {
        Some(path) => {
            let p = load_checkpoint(path)?;
            if p.input_dim() != problem.input_dim() {
                return Err(nhpinn_core::Error::InvalidArgument(format!(
                    "checkpoint takes {} inputs, the {} problem has {}",
                    p.input_dim(),
                    cfg.experiment.name(),
                    problem.input_dim()
                ))
                .into());
            }
            p
        }
        None => NetworkParams::init(&solve.train.dims(fam.input_dim()), seed)?,
    };
    let colloc = fam.collocation(solve)?;
    let probe = ErrorProbe::new(fam.input_dim(), fam.eval_inputs(&u.grid), u.values.clone())?;
    let train = solve.train.to_train(fam.input_dim(), seed)?;
    env.log(&format!("{} {} eps={}", stage.name(), cfg.experiment.name(), cfg.epsilon));
    let mut obs = env.observer(stage.name());
    let model = train_from(params, &problem, &colloc, &train, &probe, &mut obs)
        .map_err(|e| Error::in_stage(stage.name(), e))?;
    let record = DirectRecord {
        summary: DirectSummary::from_model(&model),
        seed,
        init: init.map(Path::to_path_buf),
        config: cfg.clone(),
        wall_clock: start.elapsed().as_secs_f64(),
    };
    let file = if stage == Stage::Transfer { TRANSFER_FILE } else { BASELINE_FILE };
    save_trajectory(&env.out, stage.name(), &Trajectory::from_model(&model))?;
    save_checkpoint(&model.params, &env.out.join(CHECKPOINT_DIR).join(format!("{}.ckpt", stage.name())))?;
    save_direct(&env.out, file, &record)?;
    Ok(DirectRun { record, model })
}

/// Classical PINN on the multiscale PDE from the seeded initialisation.
pub fn run_baseline(cfg: &ExperimentConfig, env: &RunEnv) -> Result<DirectRun> {
    direct(cfg, env, Stage::Baseline, None)
}

/// Classical PINN on the multiscale PDE starting from the network in `init`.
pub fn run_transfer(cfg: &ExperimentConfig, env: &RunEnv, init: &Path) -> Result<DirectRun> {
    direct(cfg, env, Stage::Transfer, Some(init))
}

/// Seeds of every stage for the config's master seed.
pub fn stage_seeds(cfg: &ExperimentConfig) -> BTreeMap<String, u64> {
    Stage::ALL
        .iter()
        .map(|&s| (s.name().to_string(), stage_seed(cfg.seed, s)))
        .collect()
}
