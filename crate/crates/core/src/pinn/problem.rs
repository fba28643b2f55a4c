use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::collocation::Interval;
use crate::{Error, Result};

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A scalar field on points of a fixed dimension, optionally with its closed-form gradient.
#[derive(Clone)]
pub struct Coefficient {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient")
            .field("dim", &self.dim)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl Coefficient {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::with_gradient(dim, move |_| c, |_, g| g.fill(0.0))
    }

    /// One-dimensional field from a value/derivative pair of closures.
    pub fn scalar_1d(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::with_gradient(1, move |x| value(x[0]), move |x, g| g[0] = derivative(x[0]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.gradient {
            Some(g) => {
                g(x, out);
                Ok(())
            }
            None => Err(Error::invalid("coefficient has no gradient")),
        }
    }
}

/// Which equation a problem poses; fixes the meaning of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Elliptic1d,
    Elliptic2d,
    /// Cell problem for corrector `axis` (0-based).
    CellElliptic2d { axis: usize },
    /// Cell problem of the slowly varying 1D family at one slow point.
    CellElliptic1d,
    CellDr,
    ParabolicDr,
    HomogenizedElliptic1d,
    HomogenizedElliptic2d,
    HomogenizedDr,
}

impl ProblemKind {
    pub fn is_parabolic(self) -> bool {
        matches!(self, Self::ParabolicDr | Self::HomogenizedDr)
    }

    pub fn is_cell(self) -> bool {
        matches!(self, Self::CellElliptic2d { .. } | Self::CellElliptic1d | Self::CellDr)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Elliptic1d => "elliptic-1d",
            Self::Elliptic2d => "elliptic-2d",
            Self::CellElliptic2d { .. } => "cell-elliptic-2d",
            Self::CellElliptic1d => "cell-elliptic-1d",
            Self::CellDr => "cell-dr",
            Self::ParabolicDr => "parabolic-dr",
            Self::HomogenizedElliptic1d => "homogenized-elliptic-1d",
            Self::HomogenizedElliptic2d => "homogenized-elliptic-2d",
            Self::HomogenizedDr => "homogenized-dr",
        }
    }
}

/// Differential operator in the residual `L(u) - f`.
#[derive(Debug, Clone)]
pub enum Operator {
    /// `-div(a grad u)` with scalar `a` carrying its gradient.
    Diffusion(Coefficient),
    /// `-d_i (A_ij d_j u)` with a constant 2x2 tensor.
    ConstantTensor([[f64; 2]; 2]),
    /// `u_t - D u_xx + c(x) u` on points `(x, t)`; `c` is a 1D field.
    ReactionDiffusion { diffusivity: f64, reaction: Coefficient },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    DirichletZero,
    Periodic,
    /// Periodic with the empirical mean over interior points penalised by `penalty`.
    PeriodicZeroMean { penalty: f64 },
}

impl BoundaryCondition {
    pub fn is_periodic(self) -> bool {
        !matches!(self, Self::DirichletZero)
    }

    pub fn mean_penalty(self) -> f64 {
        match self {
            Self::PeriodicZeroMean { penalty } => penalty,
            _ => 0.0,
        }
    }
}

/// A fully specified PDE for the PINN: operator, source, domain, side conditions.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub operator: Operator,
    /// Evaluated on the full input point (space, or space then time).
    pub source: Coefficient,
    /// One interval per input axis; time is the last axis for parabolic kinds.
    pub domain: Vec<Interval>,
    pub boundary: BoundaryCondition,
    /// `u(x, 0)` for parabolic kinds, a 1D field.
    pub initial: Option<Coefficient>,
}

const PROBES: usize = 17;

impl ProblemSpec {
    pub fn input_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn spatial_dim(&self) -> usize {
        if self.kind.is_parabolic() {
            self.domain.len() - 1
        } else {
            self.domain.len()
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.domain.len() && self.domain.iter().zip(x).all(|(iv, &v)| iv.contains(v, 1e-12 * (1.0 + iv.length())))
    }

    fn probe_points(&self, axes: usize) -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for k in 0..PROBES {
            let s = (k as f64 + 0.5) / PROBES as f64;
            let p: Vec<f64> = (0..axes)
                .map(|a| {
                    // Stagger per axis so 2D probes are not all on the diagonal.
                    let t = (s + 0.37 * a as f64) % 1.0;
                    self.domain[a].x0 + t * self.domain[a].length()
                })
                .collect();
            pts.push(p);
        }
        pts
    }

    /// Structural checks plus finite/positive coefficient probes.
    pub fn validate(&self) -> Result<()> {
        let dim = self.input_dim();
        let spatial = self.spatial_dim();
        let expected = match self.kind {
            ProblemKind::Elliptic1d
            | ProblemKind::CellElliptic1d
            | ProblemKind::CellDr
            | ProblemKind::HomogenizedElliptic1d => 1,
            ProblemKind::ParabolicDr | ProblemKind::HomogenizedDr => 2,
            ProblemKind::Elliptic2d | ProblemKind::HomogenizedElliptic2d => 2,
            ProblemKind::CellElliptic2d { axis } => {
                if axis > 1 {
                    return Err(Error::invalid(format!("cell axis {axis} out of range")));
                }
                2
            }
        };
        if dim != expected {
            return Err(Error::invalid(format!(
                "{} expects {expected} input axes, got {dim}",
                self.kind.name()
            )));
        }
        if self.source.dim() != dim {
            return Err(Error::invalid("source dimension differs from the input dimension"));
        }
        if self.kind.is_cell() && !self.boundary.is_periodic() {
            return Err(Error::invalid("cell problems need a periodic boundary condition"));
        }
        if self.kind.is_parabolic() {
            match &self.initial {
                Some(ic) if ic.dim() == 1 => {}
                _ => return Err(Error::invalid("parabolic problems need a 1D initial condition")),
            }
        }
        let probes = self.probe_points(dim);
        match &self.operator {
            Operator::Diffusion(a) => {
                if self.kind.is_parabolic() || a.dim() != spatial || !a.has_gradient() {
                    return Err(Error::invalid(
                        "diffusion operator needs a spatial coefficient with gradient",
                    ));
                }
                let mut g = [0.0; 2];
                for p in &probes {
                    let v = a.eval(p);
                    a.gradient(p, &mut g[..spatial])?;
                    if !(v.is_finite() && v > 0.0) || g[..spatial].iter().any(|x| !x.is_finite()) {
                        return Err(Error::invalid(format!(
                            "diffusion coefficient must be finite and positive, got {v} at {p:?}"
                        )));
                    }
                }
            }
            Operator::ConstantTensor(t) => {
                if spatial != 2 || self.kind.is_parabolic() {
                    return Err(Error::invalid("tensor operator is 2D elliptic only"));
                }
                let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
                if t[0][0] <= 0.0 || det <= 0.0 || (t[0][1] - t[1][0]).abs() > 1e-12 * t[0][0] {
                    return Err(Error::invalid("tensor must be symmetric positive definite"));
                }
            }
            Operator::ReactionDiffusion { diffusivity, reaction } => {
                if !self.kind.is_parabolic() || reaction.dim() != 1 {
                    return Err(Error::invalid("reaction-diffusion needs (x, t) inputs and a 1D reaction"));
                }
                if !(diffusivity.is_finite() && *diffusivity > 0.0) {
                    return Err(Error::invalid("diffusivity must be positive"));
                }
                if probes.iter().any(|p| !reaction.eval(&p[..1]).is_finite()) {
                    return Err(Error::invalid("reaction coefficient is not finite"));
                }
            }
        }
        if self.kind == ProblemKind::CellDr {
            // Cell DR is posed as -D N'' = -r through a diffusion operator with constant D.
            if !matches!(self.operator, Operator::Diffusion(_)) {
                return Err(Error::invalid("dr cell uses a constant diffusion operator"));
            }
        }
        if probes.iter().any(|p| !self.source.eval(p).is_finite()) {
            return Err(Error::invalid("source is not finite"));
        }
        Ok(())
    }
}
