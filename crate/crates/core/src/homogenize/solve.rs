use alloc::format;
use alloc::vec::Vec;

use super::average::harmonic_average;
use super::cell::{CellFamily, CellProblem};
use super::coefficients::homogenized_scalar_1d;
use crate::collocation::{CollocationSet, Interval};
use crate::diffnet::NetworkParams;
use crate::pinn::{train_from, Coefficient, ErrorProbe, LossBreakdown, TrainConfig, TrainedModel};
use crate::reference::{reference_cell_solution, GridSolution};
use crate::{Error, Result};

/// PINN settings for one cell solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSolveConfig {
    pub train: TrainConfig,
    /// Training nodes per axis, both ends of the period included.
    pub grid: usize,
    /// Oversampling layers on each side of each axis; 0 disables.
    pub oversampling: usize,
    /// Weight of the squared empirical mean.
    pub mean_penalty: f64,
    /// Periodic evaluation nodes per axis.
    pub eval_grid: usize,
    /// Periodic nodes per axis of the FD reference; a multiple of `eval_grid`.
    pub reference_grid: usize,
}

impl CellSolveConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.eval_grid < 8 || self.reference_grid % self.eval_grid != 0 {
            return Err(Error::invalid(format!(
                "reference grid {} must be a multiple of evaluation grid {} (at least 8)",
                self.reference_grid, self.eval_grid
            )));
        }
        if !(self.mean_penalty.is_finite() && self.mean_penalty >= 0.0) {
            return Err(Error::invalid("mean penalty must be nonnegative"));
        }
        Ok(())
    }
}

/// Trained cell surrogate with the reference it was scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSolution {
    pub model: TrainedModel,
    /// FD reference on the evaluation grid.
    pub reference: GridSolution,
}

/// FD cell solution sampled on the evaluation grid.
pub fn cell_reference(cell: &CellProblem, cfg: &CellSolveConfig) -> Result<GridSolution> {
    cfg.validate()?;
    reference_cell_solution(cell, cfg.reference_grid)?.subsample(cfg.reference_grid / cfg.eval_grid)
}

fn cell_probe(reference: &GridSolution) -> Result<ErrorProbe> {
    let dim = reference.grid.dim();
    let points = reference.grid.points();
    let scale = reference.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let probe = if scale < 1e-12 {
        ErrorProbe::absolute(dim, points, reference.values.clone())?
    } else {
        ErrorProbe::new(dim, points, reference.values.clone())?
    };
    Ok(probe.centered())
}

/// Collocation for a cell: residual on the closed grid, periodic pairs, oversampling.
pub fn cell_collocation(cell: &CellProblem, cfg: &CellSolveConfig) -> Result<CollocationSet> {
    let y = Interval::new(0.0, cell.period)?;
    match cell.dim() {
        1 => CollocationSet::periodic_1d(y, cfg.grid, cfg.oversampling),
        _ => CollocationSet::periodic_2d(y, y, cfg.grid, cfg.grid, cfg.oversampling),
    }
}

/// Trains a cell surrogate, from `init` when given, else from the seeded initialisation.
pub fn solve_cell(
    cell: &CellProblem,
    cfg: &CellSolveConfig,
    init: Option<NetworkParams>,
    observer: &mut dyn FnMut(usize, &LossBreakdown, f64),
) -> Result<CellSolution> {
    cfg.validate()?;
    let reference = cell_reference(cell, cfg)?;
    let probe = cell_probe(&reference)?;
    let problem = cell.to_problem(cfg.mean_penalty)?;
    let colloc = cell_collocation(cell, cfg)?;
    let init = match init {
        Some(p) => p,
        None => NetworkParams::init(&cfg.train.dims, cfg.train.seed)?,
    };
    if init.input_dim() != cell.dim() {
        return Err(Error::invalid("network input dimension differs from the cell"));
    }
    let model = train_from(init, &problem, &colloc, &cfg.train, &probe, observer)?;
    Ok(CellSolution { model, reference })
}

/// Corrector `χ_j` of an isotropic 2D cell.
pub fn solve_cell_elliptic_2d(cell: &CellProblem, cfg: &CellSolveConfig) -> Result<CellSolution> {
    if !matches!(cell.family, CellFamily::Elliptic2d { .. }) {
        return Err(Error::invalid("expected a 2D elliptic cell"));
    }
    solve_cell(cell, cfg, None, &mut |_, _, _| {})
}

/// Corrector `N` of the diffusion-reaction cell.
pub fn solve_cell_dr(cell: &CellProblem, cfg: &CellSolveConfig) -> Result<CellSolution> {
    if !matches!(cell.family, CellFamily::Dr { .. }) {
        return Err(Error::invalid("expected a diffusion-reaction cell"));
    }
    solve_cell(cell, cfg, None, &mut |_, _, _| {})
}

/// Coefficient `a(x, y)` with slow `x` and fast periodic `y`, plus `∂a/∂y`.
#[derive(Clone)]
pub struct SlowCoefficient {
    pub value: alloc::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub dy: alloc::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    /// Period in `y`.
    pub period: f64,
}

impl core::fmt::Debug for SlowCoefficient {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SlowCoefficient").field("period", &self.period).finish()
    }
}

impl SlowCoefficient {
    /// The fast profile `y ↦ a(x, y)` frozen at `x`.
    pub fn at(&self, x: f64) -> Coefficient {
        let (v, d) = (self.value.clone(), self.dy.clone());
        Coefficient::scalar_1d(move |y| v(x, y), move |y| d(x, y))
    }
}

/// Neural settings for the slow 1D family: the first cell trains from the seed,
/// later cells start from the previous solution for `warm_epochs` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowFieldConfig {
    pub cell: CellSolveConfig,
    pub warm_epochs: usize,
    /// Quadrature nodes for `⟨a (1 + χ')⟩`.
    pub quadrature: usize,
}

#[derive(Debug, Clone)]
pub enum FieldMode<'a> {
    Exact { quadrature: usize },
    Neural(&'a SlowFieldConfig),
}

/// `a*(x)` sampled on `xs`, with per-cell windowed errors in neural mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowField {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub cell_errors: Vec<f64>,
}

pub fn homogenized_field_1d_slow(a: &SlowCoefficient, xs: &[f64], mode: FieldMode<'_>) -> Result<SlowField> {
    if xs.is_empty() {
        return Err(Error::invalid("empty slow grid"));
    }
    match mode {
        FieldMode::Exact { quadrature } => {
            let values = xs
                .iter()
                .map(|&x| harmonic_average(|y| (a.value)(x, y), a.period, quadrature))
                .collect::<Result<Vec<_>>>()?;
            Ok(SlowField {
                xs: xs.to_vec(),
                values,
                cell_errors: Vec::new(),
            })
        }
        FieldMode::Neural(cfg) => {
            let mut values = Vec::with_capacity(xs.len());
            let mut cell_errors = Vec::with_capacity(xs.len());
            let mut prev: Option<NetworkParams> = None;
            for &x in xs {
                let coef = a.at(x);
                let cell = CellProblem::elliptic_1d(coef.clone(), a.period)?;
                let mut c = cfg.cell.clone();
                if prev.is_some() {
                    c.train.epochs = cfg.warm_epochs;
                    c.train.window = c.train.window.min(cfg.warm_epochs);
                }
                let sol = solve_cell(&cell, &c, prev.take(), &mut |_, _, _| {})?;
                let v = homogenized_scalar_1d(&coef, &sol.model.params, a.period, cfg.quadrature)?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::DegenerateModel(format!("a*({x}) = {v}")));
                }
                values.push(v);
                cell_errors.push(sol.model.windowed_error);
                prev = Some(sol.model.params);
            }
            Ok(SlowField {
                xs: xs.to_vec(),
                values,
                cell_errors,
            })
        }
    }
}
