//! Classifier heads over the fused joint-space embeddings: the sentiment
//! MLP (task A) and the multi-task emotion models (tasks B and C).

pub mod checkpoint;
pub mod fuse;
pub mod mlp;
pub mod mtl;
pub mod stack;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::OptimSpec;

pub use checkpoint::{load_heads, read_heads, save_heads, write_heads};
pub use fuse::{first_sentences, fuse};
pub use mlp::{argmax, train_task_a, MlpConfig, MlpHead};
pub use mtl::{train_mtl, MtlConfig, MtlModel, MtlTargets, TaskMode};
pub use stack::DenseStack;

/// Shared training knobs for all classifier heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadTrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimSpec,
    pub seed: u64,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        Self { batch_size: 32, epochs: 40, optimizer: OptimSpec::default(), seed: 0 }
    }
}

impl HeadTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".to_string()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".to_string()));
        }
        self.optimizer.validate()
    }
}

/// Trained heads for all three tasks, sharing input width and label schema.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadsBundle {
    pub task_a: MlpHead,
    pub task_b: MtlModel,
    pub task_c: MtlModel,
}

impl HeadsBundle {
    pub fn validate(&self) -> Result<()> {
        if self.task_b.mode() != TaskMode::B || self.task_c.mode() != TaskMode::C {
            return Err(Error::Contract(
                "heads bundle has models in the wrong modes".to_string(),
            ));
        }
        if self.task_b.schema() != self.task_c.schema() {
            return Err(Error::Contract(
                "task B and task C models disagree on the label schema".to_string(),
            ));
        }
        if self.task_a.classes() != self.task_b.schema().task_a_classes {
            return Err(Error::Contract(format!(
                "task A head has {} classes, schema says {}",
                self.task_a.classes(),
                self.task_b.schema().task_a_classes
            )));
        }
        let dims = [
            self.task_a.input_dim(),
            self.task_b.input_dim(),
            self.task_c.input_dim(),
        ];
        if dims.iter().any(|&d| d != dims[0]) {
            return Err(Error::Dimension(format!(
                "heads disagree on input width: {dims:?}"
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.task_a.input_dim()
    }
}
