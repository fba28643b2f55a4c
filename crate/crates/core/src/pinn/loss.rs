use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::problem::{Operator, ProblemSpec};
use crate::collocation::{CollocationSet, PointPairs, PointSet};
use crate::diffnet::{hessian_channel, objective_gradient, EvalBundle, NetworkParams, Order, PointBatch, Tape};
use crate::{Error, Result};

/// `(w1, w2, w3)`: residual, boundary or periodic, oversampling or initial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub residual: f64,
    pub boundary: f64,
    pub extra: f64,
}

impl LossWeights {
    pub fn new(residual: f64, boundary: f64, extra: f64) -> Result<Self> {
        let w = Self {
            residual,
            boundary,
            extra,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.residual, self.boundary, self.extra];
        if ws.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid(format!("loss weights must be nonnegative, got {ws:?}")));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("loss weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// All three weights times `c`; the result no longer sums to one.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            residual: self.residual * c,
            boundary: self.boundary * c,
            extra: self.extra * c,
        }
    }
}

/// Unweighted loss terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub residual: f64,
    pub boundary: f64,
    pub extra: f64,
    /// Zero-mean penalty, already multiplied by its weight.
    pub mean: f64,
    pub total: f64,
}

/// Anything that can produce derivative channels at a batch of points.
pub trait Surrogate {
    fn input_dim(&self) -> usize;

    /// Channel tuples for every point, in the batch's point-major layout.
    fn eval_batch(&self, batch: &PointBatch) -> Result<Vec<f64>>;
}

impl Surrogate for NetworkParams {
    fn input_dim(&self) -> usize {
        NetworkParams::input_dim(self)
    }

    fn eval_batch(&self, batch: &PointBatch) -> Result<Vec<f64>> {
        Tape::forward_inference(self, batch)
    }
}

/// Closed-form surrogate, handy for exactness checks.
pub struct AnalyticSurrogate<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> EvalBundle> AnalyticSurrogate<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> EvalBundle> Surrogate for AnalyticSurrogate<F> {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn eval_batch(&self, batch: &PointBatch) -> Result<Vec<f64>> {
        let d = self.dim;
        let c = batch.channels();
        let mut out = vec![0.0; batch.len() * c];
        for (p, row) in out.chunks_mut(c).enumerate() {
            let b = (self.f)(batch.point(p));
            row[0] = b.value;
            if c > 1 {
                row[1..1 + d].copy_from_slice(&b.grad);
            }
            if let Order::Laplacian { axes } = batch.order() {
                row[1 + d] = (0..axes).map(|k| b.hess[k * d + k]).sum();
            } else if c > 1 + d {
                for i in 0..d {
                    for j in i..d {
                        row[hessian_channel(d, i, j)] = b.hess[i * d + j];
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Cheapest derivative order that still determines the residual.
fn residual_order(problem: &ProblemSpec) -> Order {
    match problem.operator {
        Operator::Diffusion(_) => Order::Laplacian { axes: problem.input_dim() },
        Operator::ConstantTensor(_) => Order::Hessian,
        Operator::ReactionDiffusion { .. } => Order::Laplacian { axes: 1 },
    }
}

/// Writes the residual's channel coefficients at `x` (in the layout of
/// [`residual_order`]) and returns the source value, so that
/// `residual = Σ coeffs[c]·channel[c] − f`.
fn residual_coefficients(problem: &ProblemSpec, x: &[f64], coeffs: &mut [f64]) -> f64 {
    coeffs.fill(0.0);
    let d = x.len();
    match &problem.operator {
        Operator::Diffusion(a) => {
            let mut g = [0.0; 2];
            // Validated on construction: the coefficient carries a gradient.
            let _ = a.gradient(x, &mut g[..d]);
            for i in 0..d {
                coeffs[1 + i] = -g[i];
            }
            coeffs[1 + d] = -a.eval(x);
        }
        Operator::ConstantTensor(t) => {
            coeffs[hessian_channel(2, 0, 0)] = -t[0][0];
            coeffs[hessian_channel(2, 0, 1)] = -(t[0][1] + t[1][0]);
            coeffs[hessian_channel(2, 1, 1)] = -t[1][1];
        }
        Operator::ReactionDiffusion { diffusivity, reaction } => {
            coeffs[0] = reaction.eval(&x[..1]);
            coeffs[2] = 1.0;
            coeffs[3] = -diffusivity;
        }
    }
    problem.source.eval(x)
}

/// `L(u)(x) − f(x)` for the surrogate `u`.
pub fn residual<S: Surrogate + ?Sized>(problem: &ProblemSpec, surrogate: &S, x: &[f64]) -> Result<f64> {
    if surrogate.input_dim() != problem.input_dim() {
        return Err(Error::invalid("surrogate input dimension differs from the problem"));
    }
    if !problem.contains(x) {
        return Err(Error::invalid(format!("point {x:?} lies outside the problem domain")));
    }
    let batch = PointBatch::new(x.len(), residual_order(problem), x.to_vec())?;
    let out = surrogate.eval_batch(&batch)?;
    let mut coeffs = vec![0.0; batch.channels()];
    let f = residual_coefficients(problem, x, &mut coeffs);
    Ok(coeffs.iter().zip(&out).map(|(c, u)| c * u).sum::<f64>() - f)
}

/// Loss with all point-dependent data precomputed, reusable across epochs.
#[derive(Debug, Clone)]
pub struct CompiledLoss {
    residual_batch: PointBatch,
    coeffs: Vec<f64>,
    rhs: Vec<f64>,
    value_batch: PointBatch,
    boundary: Range<usize>,
    boundary_targets: Vec<f64>,
    periodic: (Range<usize>, Range<usize>),
    oversampling: (Range<usize>, Range<usize>),
    initial: Range<usize>,
    initial_targets: Vec<f64>,
    weights: LossWeights,
    mean_penalty: f64,
}

fn append(coords: &mut Vec<f64>, dim: usize, set: &PointSet) -> Range<usize> {
    let start = coords.len() / dim;
    coords.extend_from_slice(&set.coords);
    start..coords.len() / dim
}

fn append_pairs(coords: &mut Vec<f64>, dim: usize, pairs: &PointPairs) -> (Range<usize>, Range<usize>) {
    let a = append(coords, dim, &pairs.first);
    let b = append(coords, dim, &pairs.second);
    (a, b)
}

fn mean_square(diffs: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        diffs.map(|d| d * d).sum::<f64>() / n as f64
    }
}

impl CompiledLoss {
    pub fn new(problem: &ProblemSpec, colloc: &CollocationSet, weights: LossWeights) -> Result<Self> {
        problem.validate()?;
        let dim = problem.input_dim();
        let groups = [
            &colloc.interior,
            &colloc.boundary,
            &colloc.periodic.first,
            &colloc.periodic.second,
            &colloc.oversampling.first,
            &colloc.oversampling.second,
            &colloc.initial,
        ];
        if groups.iter().any(|g| g.dim != dim && !g.is_empty()) {
            return Err(Error::invalid("collocation dimension differs from the problem"));
        }
        if colloc.interior.is_empty() {
            return Err(Error::invalid("no residual points"));
        }
        if problem.boundary.is_periodic() {
            if colloc.periodic.is_empty() {
                return Err(Error::invalid(format!("{} needs periodic pairs", problem.kind.name())));
            }
        } else if colloc.boundary.is_empty() {
            return Err(Error::invalid(format!("{} needs boundary points", problem.kind.name())));
        }
        if problem.kind.is_parabolic() && colloc.initial.is_empty() {
            return Err(Error::invalid("parabolic problems need initial points"));
        }
        for p in colloc.interior.iter() {
            if !problem.contains(p) {
                return Err(Error::invalid(format!("residual point {p:?} outside the domain")));
            }
        }

        let residual_batch = PointBatch::new(dim, residual_order(problem), colloc.interior.coords.clone())?;
        let c = residual_batch.channels();
        let mut coeffs = vec![0.0; residual_batch.len() * c];
        let rhs: Vec<f64> = colloc
            .interior
            .iter()
            .zip(coeffs.chunks_mut(c))
            .map(|(p, row)| residual_coefficients(problem, p, row))
            .collect();
        if coeffs.iter().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::invalid("coefficients or source are not finite at the residual points"));
        }

        let mut coords = Vec::new();
        let empty = PointSet::new(dim);
        let (boundary_set, boundary_targets) = if problem.boundary.is_periodic() {
            (&empty, Vec::new())
        } else {
            (&colloc.boundary, vec![0.0; colloc.boundary.len()])
        };
        let boundary = append(&mut coords, dim, boundary_set);
        let periodic = if problem.boundary.is_periodic() {
            append_pairs(&mut coords, dim, &colloc.periodic)
        } else {
            (0..0, 0..0)
        };
        let oversampling = append_pairs(&mut coords, dim, &colloc.oversampling);
        let (initial, initial_targets) = match (&problem.initial, problem.kind.is_parabolic()) {
            (Some(ic), true) => {
                let targets = colloc.initial.iter().map(|p| ic.eval(&p[..1])).collect();
                (append(&mut coords, dim, &colloc.initial), targets)
            }
            _ => (0..0, Vec::new()),
        };
        let value_batch = PointBatch::new(dim, Order::Value, coords)?;
        Ok(Self {
            residual_batch,
            coeffs,
            rhs,
            value_batch,
            boundary,
            boundary_targets,
            periodic,
            oversampling,
            initial,
            initial_targets,
            weights,
            mean_penalty: problem.boundary.mean_penalty(),
        })
    }

    pub fn weights(&self) -> LossWeights {
        self.weights
    }

    /// Loss terms from the residual-batch channels and the value-batch outputs;
    /// fills the output adjoints when buffers are given.
    fn assemble(&self, res: &[f64], val: &[f64], adjoints: Option<(&mut [f64], &mut [f64])>) -> LossBreakdown {
        let c = self.residual_batch.channels();
        let n = self.rhs.len();
        let r: Vec<f64> = (0..n)
            .map(|p| {
                let row = &res[p * c..(p + 1) * c];
                let co = &self.coeffs[p * c..(p + 1) * c];
                co.iter().zip(row).map(|(a, b)| a * b).sum::<f64>() - self.rhs[p]
            })
            .collect();
        let residual = mean_square(r.iter().copied(), n);

        let nb = self.boundary.len();
        let bdiff = |k: usize| val[self.boundary.start + k] - self.boundary_targets[k];
        let np = self.periodic.0.len();
        let pdiff = |k: usize| val[self.periodic.0.start + k] - val[self.periodic.1.start + k];
        let boundary = mean_square((0..nb).map(bdiff), nb) + mean_square((0..np).map(pdiff), np);

        let no = self.oversampling.0.len();
        let odiff = |k: usize| val[self.oversampling.0.start + k] - val[self.oversampling.1.start + k];
        let ni = self.initial.len();
        let idiff = |k: usize| val[self.initial.start + k] - self.initial_targets[k];
        let extra = mean_square((0..no).map(odiff), no) + mean_square((0..ni).map(idiff), ni);

        let m = if self.mean_penalty > 0.0 {
            (0..n).map(|p| res[p * c]).sum::<f64>() / n as f64
        } else {
            0.0
        };
        let mean = self.mean_penalty * m * m;
        let w = self.weights;
        let total = w.residual * residual + w.boundary * boundary + w.extra * extra + mean;

        if let Some((ares, aval)) = adjoints {
            ares.fill(0.0);
            aval.fill(0.0);
            let s = 2.0 * w.residual / n as f64;
            for p in 0..n {
                let k = s * r[p];
                for (a, co) in ares[p * c..(p + 1) * c].iter_mut().zip(&self.coeffs[p * c..(p + 1) * c]) {
                    *a = k * co;
                }
            }
            if self.mean_penalty > 0.0 {
                let k = 2.0 * self.mean_penalty * m / n as f64;
                for p in 0..n {
                    ares[p * c] += k;
                }
            }
            for k in 0..nb {
                aval[self.boundary.start + k] += 2.0 * w.boundary / nb as f64 * bdiff(k);
            }
            for k in 0..np {
                let g = 2.0 * w.boundary / np as f64 * pdiff(k);
                aval[self.periodic.0.start + k] += g;
                aval[self.periodic.1.start + k] -= g;
            }
            for k in 0..no {
                let g = 2.0 * w.extra / no as f64 * odiff(k);
                aval[self.oversampling.0.start + k] += g;
                aval[self.oversampling.1.start + k] -= g;
            }
            for k in 0..ni {
                aval[self.initial.start + k] += 2.0 * w.extra / ni as f64 * idiff(k);
            }
        }
        LossBreakdown {
            residual,
            boundary,
            extra,
            mean,
            total,
        }
    }

    pub fn evaluate<S: Surrogate + ?Sized>(&self, surrogate: &S) -> Result<LossBreakdown> {
        if surrogate.input_dim() != self.residual_batch.dim() {
            return Err(Error::invalid("surrogate input dimension differs from the problem"));
        }
        let res = surrogate.eval_batch(&self.residual_batch)?;
        let val = surrogate.eval_batch(&self.value_batch)?;
        Ok(self.assemble(&res, &val, None))
    }

    /// Loss breakdown and its gradient with respect to the network parameters.
    pub fn value_and_gradient(&self, params: &NetworkParams) -> Result<(LossBreakdown, NetworkParams)> {
        let mut breakdown = LossBreakdown::default();
        let batches = [self.residual_batch.clone(), self.value_batch.clone()];
        let (_, grad) = objective_gradient(params, &batches, |outs| {
            let mut ares = vec![0.0; outs[0].len()];
            let mut aval = vec![0.0; outs[1].len()];
            breakdown = self.assemble(outs[0], outs[1], Some((&mut ares, &mut aval)));
            Ok((breakdown.total, vec![ares, aval]))
        })?;
        Ok((breakdown, grad))
    }
}

/// Weighted loss of `surrogate` over the collocation set.
pub fn total_loss<S: Surrogate + ?Sized>(
    problem: &ProblemSpec,
    surrogate: &S,
    colloc: &CollocationSet,
    weights: LossWeights,
) -> Result<LossBreakdown> {
    CompiledLoss::new(problem, colloc, weights)?.evaluate(surrogate)
}

/// `‖pred − reference‖₂ / ‖reference‖₂`.
pub fn relative_l2(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::invalid(format!(
            "sample counts differ: {} vs {}",
            pred.len(),
            reference.len()
        )));
    }
    let norm: f64 = reference.iter().map(|r| r * r).sum();
    if norm == 0.0 {
        return Err(Error::invalid("reference has zero norm"));
    }
    let diff: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    Ok(libm::sqrt(diff / norm))
}
