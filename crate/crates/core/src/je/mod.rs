//! The joint embedding: model, loss, training loop and checkpoints.

pub mod checkpoint;
pub mod loss;
pub mod model;
pub mod train;

pub use checkpoint::{load_model, read_model, save_model, write_model};
pub use loss::triplet_loss;
pub use model::{BranchParams, JeConfig, JointModel, PARAM_COUNT};
pub use train::{train_je, train_je_with, EpochStats, LossCurve, TrainConfig};
