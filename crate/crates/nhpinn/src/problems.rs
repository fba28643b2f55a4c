//! The three experiment families: coefficients, PDEs, grids and FD references.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nhpinn_core::collocation::{uniform_grid_1d, CollocationSet, Interval};
use nhpinn_core::homogenize::{harmonic_average, CellProblem, HomogenizedModel, HomogenizedPayload, SlowCoefficient};
use nhpinn_core::pinn::{BoundaryCondition, Coefficient, Operator, ProblemKind, ProblemSpec};
use nhpinn_core::reference::{fd_elliptic_1d, fd_elliptic_2d, fd_parabolic_dr, Diffusivity2d, Grid, GridSolution, ParabolicSetup};

use crate::config::{ExperimentConfig, ExperimentKind, SolveStage};
use crate::error::{Error, Result};

/// Quadrature nodes of the exact harmonic average in the slow family.
const EXACT_QUADRATURE: usize = 512;

/// Problem definitions derived from a validated config.
#[derive(Debug, Clone)]
pub struct Family {
    pub kind: ExperimentKind,
    pub epsilon: f64,
    base: f64,
    amplitude: f64,
    slow: f64,
    diffusivity: f64,
    horizon: f64,
}

impl Family {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let (diffusivity, horizon) = cfg.dr.as_ref().map_or((0.0, 0.0), |d| (d.diffusivity, d.horizon));
        Self {
            kind: cfg.experiment,
            epsilon: cfg.epsilon,
            base: cfg.coefficient.base,
            amplitude: cfg.coefficient.amplitude,
            slow: cfg.coefficient.slow,
            diffusivity,
            horizon,
        }
    }

    /// Identity of the physics for cache keys.
    pub fn describe(&self) -> String {
        format!(
            "{} eps={:e} base={:e} amp={:e} slow={:e} D={:e} T={:e}",
            self.kind.name(),
            self.epsilon,
            self.base,
            self.amplitude,
            self.slow,
            self.diffusivity,
            self.horizon
        )
    }

    pub fn spatial_domain(&self) -> Interval {
        let (a, b) = match self.kind {
            ExperimentKind::Elliptic2d => (0.0, 1.0),
            ExperimentKind::Slow1d => (0.0, PI),
            ExperimentKind::Dr => (-PI, PI),
        };
        Interval { x0: a, xt: b }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    /// Network input dimension of the multiscale and homogenized problems.
    pub fn input_dim(&self) -> usize {
        match self.kind {
            ExperimentKind::Slow1d => 1,
            ExperimentKind::Elliptic2d | ExperimentKind::Dr => 2,
        }
    }

    fn domain(&self) -> Vec<Interval> {
        let x = self.spatial_domain();
        match self.kind {
            ExperimentKind::Elliptic2d => vec![x, x],
            ExperimentKind::Slow1d => vec![x],
            ExperimentKind::Dr => vec![x, Interval { x0: 0.0, xt: self.horizon }],
        }
    }

    fn source(&self) -> Coefficient {
        match self.kind {
            ExperimentKind::Elliptic2d => Coefficient::new(2, |x| x[0].sin() + x[1].cos()),
            ExperimentKind::Slow1d => Coefficient::new(1, |x| x[0].sin()),
            ExperimentKind::Dr => Coefficient::new(2, |x| (TAU * x[0]).sin()),
        }
    }

    fn source_fn(&self) -> fn(f64, f64) -> f64 {
        match self.kind {
            ExperimentKind::Elliptic2d => |x, y| x.sin() + y.cos(),
            ExperimentKind::Slow1d => |x, _| x.sin(),
            ExperimentKind::Dr => |x, _| (TAU * x).sin(),
        }
    }

    /// Fine-scale coefficient `a(x)` of the elliptic families with its gradient.
    pub fn multiscale_coefficient(&self) -> Result<Coefficient> {
        let (b, amp, s, k) = (self.base, self.amplitude, self.slow, TAU / self.epsilon);
        match self.kind {
            ExperimentKind::Elliptic2d => Ok(Coefficient::with_gradient(
                2,
                move |x| b + amp * (k * x[0]).sin() * (k * x[1]).cos(),
                move |x, g| {
                    g[0] = amp * k * (k * x[0]).cos() * (k * x[1]).cos();
                    g[1] = -amp * k * (k * x[0]).sin() * (k * x[1]).sin();
                },
            )),
            ExperimentKind::Slow1d => Ok(Coefficient::scalar_1d(
                move |x| b + s * x.sin() + amp * (k * x).sin(),
                move |x| s * x.cos() + amp * k * (k * x).cos(),
            )),
            ExperimentKind::Dr => Err(Error::config("dr has no diffusion coefficient field")),
        }
    }

    /// `(1/ε) r(x/ε)` of the dr family.
    fn multiscale_reaction(&self) -> impl Fn(f64) -> f64 + Send + Sync + Copy + 'static {
        let (amp, eps) = (self.amplitude, self.epsilon);
        move |x| amp * (x / eps).cos() / eps
    }

    /// Classical PINN formulation of the multiscale PDE.
    pub fn multiscale_problem(&self) -> Result<ProblemSpec> {
        let (kind, operator, initial) = match self.kind {
            ExperimentKind::Elliptic2d => (ProblemKind::Elliptic2d, Operator::Diffusion(self.multiscale_coefficient()?), None),
            ExperimentKind::Slow1d => (ProblemKind::Elliptic1d, Operator::Diffusion(self.multiscale_coefficient()?), None),
            ExperimentKind::Dr => {
                let c = self.multiscale_reaction();
                (
                    ProblemKind::ParabolicDr,
                    Operator::ReactionDiffusion {
                        diffusivity: self.diffusivity,
                        reaction: Coefficient::new(1, move |x| c(x[0])),
                    },
                    Some(Coefficient::constant(1, 0.0)),
                )
            }
        };
        let p = ProblemSpec {
            kind,
            operator,
            source: self.source(),
            domain: self.domain(),
            boundary: BoundaryCondition::DirichletZero,
            initial,
        };
        p.validate()?;
        Ok(p)
    }

    /// Homogenized PDE driven by `model`.
    pub fn homogenized_problem(&self, model: &HomogenizedModel) -> Result<ProblemSpec> {
        let (kind, operator, initial) = match (&model.payload, self.kind) {
            (HomogenizedPayload::Tensor(t), ExperimentKind::Elliptic2d) => {
                (ProblemKind::HomogenizedElliptic2d, Operator::ConstantTensor(*t), None)
            }
            (HomogenizedPayload::Field { .. }, ExperimentKind::Slow1d) => (
                ProblemKind::HomogenizedElliptic1d,
                Operator::Diffusion(model.field_coefficient()?),
                None,
            ),
            (HomogenizedPayload::Reaction { diffusivity, r_star }, ExperimentKind::Dr) => (
                ProblemKind::HomogenizedDr,
                Operator::ReactionDiffusion {
                    diffusivity: *diffusivity,
                    reaction: Coefficient::constant(1, *r_star),
                },
                Some(Coefficient::constant(1, 0.0)),
            ),
            _ => return Err(Error::config("homogenized model does not match the experiment family")),
        };
        let p = ProblemSpec {
            kind,
            operator,
            source: self.source(),
            domain: self.domain(),
            boundary: BoundaryCondition::DirichletZero,
            initial,
        };
        p.validate()?;
        Ok(p)
    }

    /// Training points of a direct solve (multiscale or homogenized).
    pub fn collocation(&self, stage: &SolveStage) -> Result<CollocationSet> {
        let x = self.spatial_domain();
        Ok(match self.kind {
            ExperimentKind::Elliptic2d => CollocationSet::dirichlet_2d(x, x, stage.grid, stage.grid)?,
            ExperimentKind::Slow1d => CollocationSet::dirichlet_1d(x, stage.grid)?,
            ExperimentKind::Dr => CollocationSet::space_time(x, stage.grid, self.horizon, stage.time_grid)?,
        })
    }

    /// Evaluation grid (the final-time line for dr).
    pub fn eval_grid(&self, nodes: usize) -> Result<Grid> {
        let xs = uniform_grid_1d(self.spatial_domain(), nodes)?;
        Ok(match self.kind {
            ExperimentKind::Elliptic2d => Grid::Plane { xs: xs.clone(), ys: xs },
            _ => Grid::Line(xs),
        })
    }

    /// Network inputs of the evaluation grid.
    pub fn eval_inputs(&self, grid: &Grid) -> Vec<f64> {
        match self.kind {
            ExperimentKind::Dr => grid.points().into_iter().flat_map(|x| [x, self.horizon]).collect(),
            _ => grid.points(),
        }
    }

    /// Cell problems: `χ_1, χ_2` for elliptic2d, `N` for dr. The slow family
    /// builds its cells per node from [`Family::slow_coefficient`].
    pub fn cells(&self) -> Result<Vec<CellProblem>> {
        let (b, amp) = (self.base, self.amplitude);
        match self.kind {
            ExperimentKind::Elliptic2d => {
                let a = Coefficient::with_gradient(
                    2,
                    move |y| b + amp * (TAU * y[0]).sin() * (TAU * y[1]).cos(),
                    move |y, g| {
                        g[0] = amp * TAU * (TAU * y[0]).cos() * (TAU * y[1]).cos();
                        g[1] = -amp * TAU * (TAU * y[0]).sin() * (TAU * y[1]).sin();
                    },
                );
                Ok(vec![CellProblem::elliptic_2d(a.clone(), 0, 1.0)?, CellProblem::elliptic_2d(a, 1, 1.0)?])
            }
            ExperimentKind::Dr => {
                let r = Coefficient::scalar_1d(move |y| amp * y.cos(), move |y| -amp * y.sin());
                Ok(vec![CellProblem::dr(r, self.diffusivity, TAU)?])
            }
            ExperimentKind::Slow1d => Ok(Vec::new()),
        }
    }

    /// `a(x, y)` of the slow family, 1-periodic in `y`.
    pub fn slow_coefficient(&self) -> SlowCoefficient {
        let (b, amp, s) = (self.base, self.amplitude, self.slow);
        SlowCoefficient {
            value: Arc::new(move |x: f64, y: f64| b + s * x.sin() + amp * (TAU * y).sin()),
            dy: Arc::new(move |_x: f64, y: f64| amp * TAU * (TAU * y).cos()),
            period: 1.0,
        }
    }

    /// Exact `a*(x)` of the slow family: the harmonic average over the fast variable.
    pub fn exact_slow_field(&self, x: f64) -> Result<f64> {
        let a = self.slow_coefficient();
        Ok(harmonic_average(|y| (a.value)(x, y), 1.0, EXACT_QUADRATURE)?)
    }

    /// FD solution `u_ε` of the multiscale PDE on `n` nodes per axis.
    pub fn fine_reference(&self, n: usize, time_step: f64) -> Result<GridSolution> {
        let x = self.spatial_domain();
        let f = self.source_fn();
        match self.kind {
            ExperimentKind::Elliptic2d => {
                let a = self.multiscale_coefficient()?;
                let scalar = move |x: f64, y: f64| a.eval(&[x, y]);
                Ok(fd_elliptic_2d(Diffusivity2d::Scalar(&scalar), f, x, x, n, n)?)
            }
            ExperimentKind::Slow1d => {
                let a = self.multiscale_coefficient()?;
                Ok(fd_elliptic_1d(|x| a.eval(&[x]), |x| f(x, 0.0), x, n)?)
            }
            ExperimentKind::Dr => {
                let c = self.multiscale_reaction();
                self.parabolic(&c, n, time_step)
            }
        }
    }

    fn parabolic(&self, reaction: &dyn Fn(f64) -> f64, n: usize, dt: f64) -> Result<GridSolution> {
        let f = self.source_fn();
        let setup = ParabolicSetup {
            diffusivity: self.diffusivity,
            reaction,
            source: &f,
            initial: &|_| 0.0,
            domain: self.spatial_domain(),
            horizon: self.horizon,
        };
        Ok(fd_parabolic_dr(&setup, n, dt)?)
    }

    /// FD solution of the homogenized PDE. `Exact` field models are evaluated
    /// through the harmonic average at every FD half node rather than splined.
    pub fn homogenized_reference(&self, model: &HomogenizedModel, n: usize, time_step: f64) -> Result<GridSolution> {
        let x = self.spatial_domain();
        let f = self.source_fn();
        match (&model.payload, self.kind) {
            (HomogenizedPayload::Tensor(t), ExperimentKind::Elliptic2d) => {
                Ok(fd_elliptic_2d(Diffusivity2d::Tensor(*t), f, x, x, n, n)?)
            }
            (HomogenizedPayload::Field { .. }, ExperimentKind::Slow1d) => {
                if model.provenance == nhpinn_core::homogenize::Provenance::Exact {
                    let this = self.clone();
                    let a = move |x: f64| this.exact_slow_field(x).unwrap_or(f64::NAN);
                    Ok(fd_elliptic_1d(a, |x| f(x, 0.0), x, n)?)
                } else {
                    let a = model.field_coefficient()?;
                    Ok(fd_elliptic_1d(|x| a.eval(&[x]), |x| f(x, 0.0), x, n)?)
                }
            }
            (HomogenizedPayload::Reaction { r_star, .. }, ExperimentKind::Dr) => {
                let r = *r_star;
                self.parabolic(&move |_| r, n, time_step)
            }
            _ => Err(Error::config("homogenized model does not match the experiment family")),
        }
    }
}
