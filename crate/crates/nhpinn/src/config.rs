//! Experiment configuration.
//!
//! A config file is a JSON object. Only `experiment` is required; every other
//! key overrides the family defaults from [`ExperimentConfig::defaults`], and
//! keys that do not exist there are rejected.

use std::path::{Path, PathBuf};

use nhpinn_core::pinn::{LossWeights, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Elliptic2d,
    Slow1d,
    Dr,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Elliptic2d => "elliptic2d",
            Self::Slow1d => "slow1d",
            Self::Dr => "dr",
        }
    }

    pub fn default_epsilon(self) -> f64 {
        match self {
            Self::Elliptic2d | Self::Slow1d => 1.0 / 8.0,
            Self::Dr => 1.0 / 50.0,
        }
    }
}

/// Oscillatory part of the coefficient.
///
/// - elliptic2d: `a = base + amplitude·sin(2πx₁/ε)·cos(2πx₂/ε)`
/// - slow1d: `a = base + slow·sin(x) + amplitude·sin(2πx/ε)`
/// - dr: `r = amplitude·cos(x/ε)`; `base` is unused
///
/// `slow` only enters slow1d; setting it to 0 gives the purely oscillatory 1D problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientParams {
    pub base: f64,
    pub amplitude: f64,
    pub slow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrParams {
    pub diffusivity: f64,
    /// Final time; errors are measured there.
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainStage {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    /// `[w1, w2, w3]`, summing to one.
    pub weights: [f64; 3],
    pub window: usize,
    /// Learning rate of the last epoch relative to `learning_rate` (geometric decay); 1 keeps it constant.
    pub final_lr_factor: f64,
}

impl TrainStage {
    fn new(epochs: usize, learning_rate: f64, weights: [f64; 3], window: usize) -> Self {
        Self {
            hidden: vec![64, 64, 64],
            epochs,
            learning_rate,
            weights,
            window,
            final_lr_factor: 1.0,
        }
    }

    pub fn dims(&self, input: usize) -> Vec<usize> {
        let mut d = vec![input];
        d.extend(&self.hidden);
        d.push(1);
        d
    }

    pub fn to_train(&self, input: usize, seed: u64) -> Result<TrainConfig> {
        let [w1, w2, w3] = self.weights;
        let mut t = TrainConfig::new(self.dims(input), self.epochs, self.learning_rate, LossWeights::new(w1, w2, w3)?, seed);
        t.window = self.window;
        t.final_lr_factor = self.final_lr_factor;
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellStage {
    pub train: TrainStage,
    /// Training nodes per axis over one period, ends included.
    pub grid: usize,
    pub oversampling: usize,
    pub mean_penalty: f64,
    /// Periodic nodes per axis where the cell error is measured.
    pub eval_grid: usize,
    /// Periodic nodes per axis of the FD cell reference.
    pub reference_grid: usize,
    /// Periodic quadrature nodes per axis for the effective coefficient.
    pub quadrature: usize,
}

/// Per-node cells of the slowly varying family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowFieldStage {
    /// Slow nodes where a cell is solved; `a*(x)` is splined between them.
    pub nodes: usize,
    pub warm_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveStage {
    pub train: TrainStage,
    /// Training nodes per spatial axis.
    pub grid: usize,
    /// Training nodes in time (dr only).
    pub time_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceStage {
    /// FD nodes per axis of the fine multiscale and homogenized solves.
    pub fine_nodes: usize,
    /// Evaluation nodes per axis; `fine_nodes - 1` must be a multiple of `eval_nodes - 1`.
    pub eval_nodes: usize,
    /// Implicit Euler step (dr only).
    pub time_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub epsilon: f64,
    pub coefficient: CoefficientParams,
    pub dr: Option<DrParams>,
    pub cell: CellStage,
    pub slow_field: Option<SlowFieldStage>,
    pub homogenized: SolveStage,
    pub baseline: SolveStage,
    pub transfer: SolveStage,
    pub reference: ReferenceStage,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Family defaults; the baseline learning rate of `dr` depends on `epsilon`.
    pub fn defaults(kind: ExperimentKind, epsilon: f64) -> Self {
        let output_dir = PathBuf::from("runs").join(kind.name());
        match kind {
            ExperimentKind::Elliptic2d => Self {
                experiment: kind,
                epsilon,
                coefficient: CoefficientParams {
                    base: 2.0,
                    amplitude: 1.0,
                    slow: 0.0,
                },
                dr: None,
                cell: CellStage {
                    train: TrainStage::new(15000, 1e-3, [0.01, 0.495, 0.495], 300),
                    grid: 21,
                    oversampling: 2,
                    mean_penalty: 0.1,
                    eval_grid: 50,
                    reference_grid: 200,
                    quadrature: 100,
                },
                slow_field: None,
                homogenized: SolveStage {
                    train: TrainStage {
                        final_lr_factor: 0.1,
                        ..TrainStage::new(10000, 1e-3, [0.001, 0.999, 0.0], 500)
                    },
                    grid: 21,
                    time_grid: 0,
                },
                baseline: SolveStage {
                    train: TrainStage::new(4000, 1e-4, [0.5, 0.5, 0.0], 500),
                    grid: 41,
                    time_grid: 0,
                },
                transfer: SolveStage {
                    train: TrainStage::new(4000, 1e-4, [0.5, 0.5, 0.0], 500),
                    grid: 41,
                    time_grid: 0,
                },
                reference: ReferenceStage {
                    fine_nodes: 401,
                    eval_nodes: 101,
                    time_step: 0.0,
                },
                output_dir,
                seed: 0,
            },
            ExperimentKind::Slow1d => Self {
                experiment: kind,
                epsilon,
                coefficient: CoefficientParams {
                    base: 2.0,
                    amplitude: 0.5,
                    slow: 1.0,
                },
                dr: None,
                cell: CellStage {
                    train: TrainStage::new(2000, 1e-3, [0.1, 0.45, 0.45], 100),
                    grid: 101,
                    oversampling: 2,
                    mean_penalty: 0.1,
                    eval_grid: 64,
                    reference_grid: 512,
                    quadrature: 256,
                },
                slow_field: Some(SlowFieldStage {
                    nodes: 33,
                    warm_epochs: 300,
                }),
                homogenized: SolveStage {
                    train: TrainStage::new(3000, 1e-3, [0.5, 0.5, 0.0], 500),
                    grid: 101,
                    time_grid: 0,
                },
                baseline: SolveStage {
                    train: TrainStage::new(1000, 1e-4, [1.0 / 11.0, 10.0 / 11.0, 0.0], 100),
                    grid: 401,
                    time_grid: 0,
                },
                transfer: SolveStage {
                    train: TrainStage::new(1000, 1e-4, [1.0 / 11.0, 10.0 / 11.0, 0.0], 100),
                    grid: 401,
                    time_grid: 0,
                },
                reference: ReferenceStage {
                    fine_nodes: 4001,
                    eval_nodes: 401,
                    time_step: 0.0,
                },
                output_dir,
                seed: 0,
            },
            ExperimentKind::Dr => {
                let lr = if epsilon >= 0.05 { 0.015 } else { 0.05 };
                let direct = SolveStage {
                    train: TrainStage::new(3000, lr, [1.0 / 7.0, 5.0 / 7.0, 1.0 / 7.0], 100),
                    grid: 201,
                    time_grid: 21,
                };
                Self {
                    experiment: kind,
                    epsilon,
                    coefficient: CoefficientParams {
                        base: 0.0,
                        amplitude: 1.0,
                        slow: 0.0,
                    },
                    dr: Some(DrParams {
                        diffusivity: 2.0,
                        horizon: 1.0,
                    }),
                    cell: CellStage {
                        train: TrainStage::new(3000, 1e-3, [0.1, 0.45, 0.45], 500),
                        grid: 101,
                        oversampling: 2,
                        mean_penalty: 0.1,
                        eval_grid: 64,
                        reference_grid: 512,
                        quadrature: 256,
                    },
                    slow_field: None,
                    homogenized: SolveStage {
                        train: TrainStage {
                            final_lr_factor: 0.01,
                            ..TrainStage::new(10000, 1e-3, [1.0 / 7.0, 5.0 / 7.0, 1.0 / 7.0], 500)
                        },
                        grid: 61,
                        time_grid: 11,
                    },
                    baseline: direct.clone(),
                    transfer: direct,
                    reference: ReferenceStage {
                        fine_nodes: 2001,
                        eval_nodes: 201,
                        time_step: 1e-3,
                    },
                    output_dir,
                    seed: 0,
                }
            }
        }
    }

    /// Parses a config document, filling unspecified keys from the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text)?;
        let obj = user.as_object().ok_or_else(|| Error::config("config must be a JSON object"))?;
        let kind: ExperimentKind = serde_json::from_value(
            obj.get("experiment")
                .cloned()
                .ok_or_else(|| Error::config("missing key `experiment`"))?,
        )?;
        let epsilon = match obj.get("epsilon") {
            Some(v) => v.as_f64().ok_or_else(|| Error::config("`epsilon` must be a number"))?,
            None => kind.default_epsilon(),
        };
        let mut merged = serde_json::to_value(Self::defaults(kind, epsilon))?;
        merge(&mut merged, &user, "")?;
        let cfg: Self = serde_json::from_value(merged)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        let c = &self.coefficient;
        if !(c.base.is_finite() && c.amplitude.is_finite() && c.slow.is_finite()) {
            return bad("coefficient parameters must be finite".into());
        }
        match self.experiment {
            ExperimentKind::Elliptic2d if c.base <= c.amplitude.abs() => {
                return bad("elliptic2d coefficient must stay positive: base > |amplitude|".into());
            }
            ExperimentKind::Slow1d if c.base - c.slow.abs() <= c.amplitude.abs() => {
                return bad("slow1d coefficient must stay positive: base - |slow| > |amplitude|".into());
            }
            _ => {}
        }
        match (self.experiment, &self.dr) {
            (ExperimentKind::Dr, None) => return bad("dr experiment needs the `dr` block".into()),
            (ExperimentKind::Dr, Some(d)) => {
                if !(d.diffusivity > 0.0 && d.horizon > 0.0 && d.diffusivity.is_finite() && d.horizon.is_finite()) {
                    return bad("dr diffusivity and horizon must be positive".into());
                }
                if !(self.reference.time_step > 0.0) {
                    return bad("dr reference needs a positive time step".into());
                }
                let steps = d.horizon / self.reference.time_step;
                if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                    return bad("dr horizon must be a multiple of the reference time step".into());
                }
                for (name, s) in [("homogenized", &self.homogenized), ("baseline", &self.baseline), ("transfer", &self.transfer)] {
                    if s.time_grid < 2 {
                        return bad(format!("{name}.time_grid must be at least 2"));
                    }
                }
            }
            _ => {}
        }
        if self.experiment == ExperimentKind::Slow1d {
            match &self.slow_field {
                None => return bad("slow1d experiment needs the `slow_field` block".into()),
                Some(s) if s.nodes < 4 || s.warm_epochs == 0 => {
                    return bad("slow_field needs at least 4 nodes and positive warm epochs".into())
                }
                _ => {}
            }
        }
        for (name, t) in [
            ("cell", &self.cell.train),
            ("homogenized", &self.homogenized.train),
            ("baseline", &self.baseline.train),
            ("transfer", &self.transfer.train),
        ] {
            t.to_train(1, 0).map_err(|e| Error::config(format!("{name}.train: {e}")))?;
            if t.hidden.is_empty() || t.hidden.contains(&0) {
                return bad(format!("{name}.train.hidden must list positive widths"));
            }
        }
        if self.baseline.train.hidden != self.transfer.train.hidden || self.homogenized.train.hidden != self.transfer.train.hidden {
            return bad("transfer needs the homogenized, baseline and transfer networks to share hidden widths".into());
        }
        let cell = &self.cell;
        if cell.grid < 3 || cell.oversampling + 2 >= cell.grid {
            return bad(format!("cell grid {} too small for {} oversampling layers", cell.grid, cell.oversampling));
        }
        if cell.eval_grid < 8 || cell.reference_grid % cell.eval_grid != 0 || cell.quadrature < 8 {
            return bad("cell reference_grid must be a multiple of eval_grid (>= 8); quadrature >= 8".into());
        }
        for (name, s) in [("homogenized", &self.homogenized), ("baseline", &self.baseline), ("transfer", &self.transfer)] {
            if s.grid < 3 {
                return bad(format!("{name}.grid must be at least 3"));
            }
        }
        let r = &self.reference;
        if r.eval_nodes < 3 || r.fine_nodes < r.eval_nodes || (r.fine_nodes - 1) % (r.eval_nodes - 1) != 0 {
            return bad(format!(
                "reference.fine_nodes - 1 ({}) must be a multiple of eval_nodes - 1 ({})",
                r.fine_nodes.saturating_sub(1),
                r.eval_nodes.saturating_sub(1)
            ));
        }
        Ok(())
    }
}

/// Overlays `user` onto `base`; objects merge key by key, anything else replaces.
/// Keys absent from `base` are kept so that deserialization can reject them by name.
fn merge(base: &mut Value, user: &Value, path: &str) -> Result<()> {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v, &p)?,
                    Some(slot) => *slot = v.clone(),
                    None => {
                        return Err(Error::config(format!("unknown key `{p}`")));
                    }
                }
            }
            Ok(())
        }
        (b, u) => {
            *b = u.clone();
            Ok(())
        }
    }
}
