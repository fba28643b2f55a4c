use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::collocation::Interval;
use crate::pinn::{BoundaryCondition, Coefficient, Operator, ProblemKind, ProblemSpec};
use crate::{Error, Result};

/// The three cell-problem families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellFamily {
    /// `-div(a grad χ_j) = ∂a/∂y_j` on a 2D cell, `axis` = j (0-based).
    Elliptic2d { axis: usize },
    /// `-(a χ')' = a'` for the coefficient frozen at one slow point.
    Elliptic1d,
    /// `-D N'' = -r`.
    Dr { diffusivity: f64 },
}

/// A periodic cell problem with the zero-mean constraint.
#[derive(Debug, Clone)]
pub struct CellProblem {
    pub family: CellFamily,
    /// `a(y)` with gradient, or `r(y)` for the DR family.
    pub coefficient: Coefficient,
    /// Period per axis; the cell is `[0, period]^d`.
    pub period: f64,
}

/// Tolerance on the cell average of `r`, relative to its magnitude.
const SOLVABILITY_TOL: f64 = 1e-8;

impl CellProblem {
    pub fn elliptic_2d(a: Coefficient, axis: usize, period: f64) -> Result<Self> {
        let cell = Self {
            family: CellFamily::Elliptic2d { axis },
            coefficient: a,
            period,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn elliptic_1d(a: Coefficient, period: f64) -> Result<Self> {
        let cell = Self {
            family: CellFamily::Elliptic1d,
            coefficient: a,
            period,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn dr(r: Coefficient, diffusivity: f64, period: f64) -> Result<Self> {
        let cell = Self {
            family: CellFamily::Dr { diffusivity },
            coefficient: r,
            period,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn dim(&self) -> usize {
        match self.family {
            CellFamily::Elliptic2d { .. } => 2,
            _ => 1,
        }
    }

    pub fn is_elliptic(&self) -> bool {
        !matches!(self.family, CellFamily::Dr { .. })
    }

    /// Nodes `k·period/n`, `k < n`, of the periodic grid on one axis.
    pub fn periodic_nodes(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.period * k as f64 / n as f64).collect()
    }

    /// Samples on the `n^d` periodic grid, first axis outermost.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        let ys = self.periodic_nodes(n);
        match self.dim() {
            1 => ys.iter().map(|&y| self.coefficient.eval(&[y])).collect(),
            _ => {
                let mut out = Vec::with_capacity(n * n);
                for &y1 in &ys {
                    for &y2 in &ys {
                        out.push(self.coefficient.eval(&[y1, y2]));
                    }
                }
                out
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.coefficient.dim() != d {
            return Err(Error::invalid(format!("cell coefficient must take {d} inputs")));
        }
        if let CellFamily::Elliptic2d { axis } = self.family {
            if axis > 1 {
                return Err(Error::invalid(format!("cell axis {axis} out of range")));
            }
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid("cell period must be positive"));
        }
        // Periodicity probe: values on opposite faces agree.
        let probes = 13;
        let mut worst: f64 = 0.0;
        for k in 0..probes {
            let s = self.period * (k as f64 + 0.31) / probes as f64;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = if d == 1 {
                vec![(vec![0.0], vec![self.period])]
            } else {
                vec![(vec![0.0, s], vec![self.period, s]), (vec![s, 0.0], vec![s, self.period])]
            };
            for (a, b) in pairs {
                let (va, vb) = (self.coefficient.eval(&a), self.coefficient.eval(&b));
                worst = worst.max((va - vb).abs() / (1.0 + va.abs()));
            }
        }
        if worst > 1e-10 {
            return Err(Error::invalid(format!("coefficient is not periodic on the cell (mismatch {worst:e})")));
        }
        match self.family {
            CellFamily::Dr { diffusivity } => {
                if !(diffusivity.is_finite() && diffusivity > 0.0) {
                    return Err(Error::invalid("diffusivity must be positive"));
                }
                let samples = self.sample(256);
                let avg = samples.iter().sum::<f64>() / samples.len() as f64;
                let scale = samples.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                if avg.abs() > SOLVABILITY_TOL * scale {
                    return Err(Error::Solvability { average: avg });
                }
            }
            _ => {
                if !self.coefficient.has_gradient() {
                    return Err(Error::invalid("elliptic cell coefficient needs its gradient"));
                }
                if let Some(v) = self.sample(16).into_iter().find(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::invalid(format!("cell coefficient must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// The cell problem as a PINN problem on `[0, period]^d`.
    pub fn to_problem(&self, mean_penalty: f64) -> Result<ProblemSpec> {
        let cell = Interval::new(0.0, self.period)?;
        let (kind, operator, source) = match self.family {
            CellFamily::Elliptic2d { axis } => {
                let a = self.coefficient.clone();
                let rhs = Coefficient::new(2, move |y| {
                    let mut g = [0.0; 2];
                    let _ = a.gradient(y, &mut g);
                    g[axis]
                });
                (ProblemKind::CellElliptic2d { axis }, Operator::Diffusion(self.coefficient.clone()), rhs)
            }
            CellFamily::Elliptic1d => {
                let a = self.coefficient.clone();
                let rhs = Coefficient::new(1, move |y| {
                    let mut g = [0.0];
                    let _ = a.gradient(y, &mut g);
                    g[0]
                });
                (ProblemKind::CellElliptic1d, Operator::Diffusion(self.coefficient.clone()), rhs)
            }
            CellFamily::Dr { diffusivity } => {
                let r = self.coefficient.clone();
                let rhs = Coefficient::new(1, move |y| -r.eval(y));
                (ProblemKind::CellDr, Operator::Diffusion(Coefficient::constant(1, diffusivity)), rhs)
            }
        };
        Ok(ProblemSpec {
            kind,
            operator,
            source,
            domain: vec![cell; self.dim()],
            boundary: BoundaryCondition::PeriodicZeroMean { penalty: mean_penalty },
            initial: None,
        })
    }
}
