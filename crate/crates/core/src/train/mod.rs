//! SGD-with-momentum training and leave-one-out splits.

mod config;
mod optim;
mod run;
mod splits;

pub use config::{Preset, TrainConfig};
pub use optim::{sgd_momentum_step, OptimizerState};
pub use run::{shuffled_batches, train_loop, write_loss_csv, TrainEvent, TrainOutcome};
pub use splits::{leave_one_out_splits, Split};
