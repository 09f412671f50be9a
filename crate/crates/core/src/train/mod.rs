//! The training loop and its parts.

mod config;
mod densify;
mod optim;
mod schedule;
mod trainer;

pub use config::TrainConfig;
pub use densify::{densify, split_children, DensifyOutcome, DensifyParams, DensifyStats};
pub use optim::{learning_rates, position_lr, Adam};
pub use schedule::{Phases, Schedule};
pub use trainer::{
    init_scene, train, train_scene, DensifyEvent, IterationLog, PruneEvent, TrainData, TrainOutcome, TrainReport,
    TrainView,
};
