//! Pretext losses, the Jensen-Shannon mutual-information objective, and the
//! pseudo bi-level training loop.

mod bins;
mod losses;
mod mi;
mod trainer;

pub use bins::BinSpec;
pub use losses::{
    angle_loss, angle_targets, distance_loss, distance_loss_regression, ProteinLosses,
};
pub use mi::{mi_objective, negative_partner};
pub use trainer::{inner_step, pretrain_run, Pretrainer, StepMetrics};
