use alloc::format;
use alloc::vec::Vec;

use super::loss::{relative_l2, CompiledLoss, LossBreakdown, LossWeights};
use super::problem::ProblemSpec;
use crate::collocation::CollocationSet;
use crate::diffnet::{AdamConfig, AdamState, NetworkParams};
use crate::{Error, Result};

/// Hyperparameters of one full-batch Adam run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dims: Vec<usize>,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub weights: LossWeights,
    pub seed: u64,
    /// Number of final epochs averaged into the reported error.
    pub window: usize,
    /// Learning rate of the last epoch relative to the first; the rate decays
    /// geometrically in between. 1 keeps it constant.
    pub final_lr_factor: f64,
}

impl TrainConfig {
    pub fn new(dims: Vec<usize>, epochs: usize, learning_rate: f64, weights: LossWeights, seed: u64) -> Self {
        Self {
            dims,
            epochs,
            adam: AdamConfig::with_learning_rate(learning_rate),
            weights,
            seed,
            window: 500,
            final_lr_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.adam.learning_rate.is_finite() && self.adam.learning_rate > 0.0) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.adam.learning_rate
            )));
        }
        if self.window == 0 {
            return Err(Error::invalid("error window must be at least 1"));
        }
        if !(self.final_lr_factor.is_finite() && self.final_lr_factor > 0.0 && self.final_lr_factor <= 1.0) {
            return Err(Error::invalid(format!(
                "final learning-rate factor must lie in (0, 1], got {}",
                self.final_lr_factor
            )));
        }
        self.weights.validate()
    }
}

/// Reference samples on an evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProbe {
    dim: usize,
    points: Vec<f64>,
    reference: Vec<f64>,
    centered: bool,
    absolute: bool,
    companions: Vec<Vec<f64>>,
}

impl ErrorProbe {
    pub fn new(dim: usize, points: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * reference.len() {
            return Err(Error::invalid("probe points and reference samples do not match"));
        }
        if reference.iter().all(|r| *r == 0.0) {
            return Err(Error::invalid("reference has zero norm"));
        }
        Ok(Self {
            dim,
            points,
            reference,
            centered: false,
            absolute: false,
            companions: Vec::new(),
        })
    }

    /// Probe reporting the root-mean-square deviation instead of a relative
    /// error; the only option when the reference vanishes identically.
    pub fn absolute(dim: usize, points: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * reference.len() || reference.is_empty() {
            return Err(Error::invalid("probe points and reference samples do not match"));
        }
        Ok(Self {
            dim,
            points,
            reference,
            centered: false,
            absolute: true,
            companions: Vec::new(),
        })
    }

    /// Subtract the prediction's sample mean before comparing (zero-mean problems).
    pub fn centered(mut self) -> Self {
        self.centered = true;
        self
    }

    /// Another reference on the same points, scored with the same prediction.
    pub fn with_companion(mut self, reference: Vec<f64>) -> Result<Self> {
        if reference.len() != self.reference.len() {
            return Err(Error::invalid("companion reference has a different sample count"));
        }
        if !self.absolute && reference.iter().all(|r| *r == 0.0) {
            return Err(Error::invalid("companion reference has zero norm"));
        }
        self.companions.push(reference);
        Ok(self)
    }

    pub fn companion_count(&self) -> usize {
        self.companions.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn predict(&self, params: &NetworkParams) -> Result<Vec<f64>> {
        let mut pred = params.values(&self.points)?;
        if self.centered {
            let m = pred.iter().sum::<f64>() / pred.len() as f64;
            pred.iter_mut().for_each(|p| *p -= m);
        }
        Ok(pred)
    }

    pub fn error(&self, params: &NetworkParams) -> Result<f64> {
        let pred = self.predict(params)?;
        self.score(&pred, &self.reference)
    }

    /// Error against the primary reference followed by one per companion.
    pub fn errors(&self, params: &NetworkParams) -> Result<Vec<f64>> {
        let pred = self.predict(params)?;
        core::iter::once(&self.reference)
            .chain(&self.companions)
            .map(|r| self.score(&pred, r))
            .collect()
    }

    fn score(&self, pred: &[f64], reference: &[f64]) -> Result<f64> {
        if self.absolute {
            let ss: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
            return Ok(libm::sqrt(ss / pred.len() as f64));
        }
        relative_l2(pred, reference)
    }
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: NetworkParams,
    pub losses: Vec<LossBreakdown>,
    pub errors: Vec<f64>,
    pub windowed_error: f64,
    /// Per-epoch errors against each companion reference of the probe.
    pub companion_errors: Vec<Vec<f64>>,
    pub companion_windowed: Vec<f64>,
}

impl TrainedModel {
    pub fn epochs(&self) -> usize {
        self.losses.len()
    }
}

/// Mean of the last `window` entries (all of them if fewer).
pub fn windowed_mean(values: &[f64], window: usize) -> f64 {
    let k = window.min(values.len()).max(1);
    values[values.len().saturating_sub(k)..].iter().sum::<f64>() / k as f64
}

/// Per-epoch callback: epoch index, loss terms, relative error.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &LossBreakdown, f64);

/// Adam from a seeded Glorot initialisation.
pub fn train(
    problem: &ProblemSpec,
    colloc: &CollocationSet,
    config: &TrainConfig,
    probe: &ErrorProbe,
) -> Result<TrainedModel> {
    config.validate()?;
    let init = NetworkParams::init(&config.dims, config.seed)?;
    train_from(init, problem, colloc, config, probe, &mut |_, _, _| {})
}

/// Adam starting from `init`; the error trajectory shows drift away from it.
pub fn transfer_train(
    init: NetworkParams,
    problem: &ProblemSpec,
    colloc: &CollocationSet,
    config: &TrainConfig,
    probe: &ErrorProbe,
) -> Result<TrainedModel> {
    if init.input_dim() != problem.input_dim() {
        return Err(Error::invalid(format!(
            "initial network takes {} inputs, problem has {}",
            init.input_dim(),
            problem.input_dim()
        )));
    }
    train_from(init, problem, colloc, config, probe, &mut |_, _, _| {})
}

/// Full-batch Adam for `config.epochs` steps from the given parameters.
///
/// The loss and error of epoch `e` are measured before its update.
pub fn train_from(
    init: NetworkParams,
    problem: &ProblemSpec,
    colloc: &CollocationSet,
    config: &TrainConfig,
    probe: &ErrorProbe,
    observer: Observer<'_>,
) -> Result<TrainedModel> {
    config.validate()?;
    if probe.dim() != problem.input_dim() {
        return Err(Error::invalid("probe dimension differs from the problem"));
    }
    let loss = CompiledLoss::new(problem, colloc, config.weights)?;
    let mut params = init;
    let mut adam = AdamState::new(&params, config.adam);
    let mut losses = Vec::with_capacity(config.epochs);
    let mut errors = Vec::with_capacity(config.epochs);
    let mut companion_errors = alloc::vec![Vec::with_capacity(config.epochs); probe.companion_count()];
    let decay = match config.epochs {
        1 => 1.0,
        n => libm::pow(config.final_lr_factor, 1.0 / (n - 1) as f64),
    };
    for epoch in 0..config.epochs {
        adam.config.learning_rate = config.adam.learning_rate * libm::pow(decay, epoch as f64);
        let (terms, grad) = loss.value_and_gradient(&params).map_err(|e| match e {
            Error::NumericFailure { detail, .. } => Error::numeric("training", format!("epoch {epoch}: {detail}")),
            other => other,
        })?;
        if !terms.total.is_finite() {
            return Err(Error::numeric("training", format!("epoch {epoch}: loss is {}", terms.total)));
        }
        let errs = probe.errors(&params)?;
        let err = errs[0];
        observer(epoch, &terms, err);
        losses.push(terms);
        errors.push(err);
        for (traj, e) in companion_errors.iter_mut().zip(&errs[1..]) {
            traj.push(*e);
        }
        adam.step(&mut params, &grad)?;
    }
    Ok(TrainedModel {
        params,
        windowed_error: windowed_mean(&errors, config.window),
        companion_windowed: companion_errors.iter().map(|c| windowed_mean(c, config.window)).collect(),
        losses,
        errors,
        companion_errors,
    })
}
