//! PINN objective, training loop and error metrics.

mod loss;
mod problem;
mod train;

pub use loss::{relative_l2, residual, total_loss, AnalyticSurrogate, CompiledLoss, LossBreakdown, LossWeights, Surrogate};
pub use problem::{BoundaryCondition, Coefficient, Operator, ProblemKind, ProblemSpec};
pub use train::{train, train_from, transfer_train, windowed_mean, ErrorProbe, Observer, TrainConfig, TrainedModel};
