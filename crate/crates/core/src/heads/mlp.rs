//! The overall-sentiment classifier: a three-layer MLP over fused
//! embeddings with a softmax output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heads::stack::DenseStack;
use crate::heads::HeadTrainConfig;
use crate::numeric::{Matrix, OptimizerState, SeededRng, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden1: usize,
    pub hidden2: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden1: 128, hidden2: 64 }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::Config("hidden widths must be positive".to_string()));
        }
        Ok(())
    }
}

/// Input → hidden1 → hidden2 → class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead {
    classes: usize,
    stack: DenseStack,
}

impl MlpHead {
    pub fn init(
        input_dim: usize,
        classes: usize,
        config: MlpConfig,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        config.validate()?;
        if classes < 2 {
            return Err(Error::Config(format!(
                "a classifier needs at least 2 classes, got {classes}"
            )));
        }
        let stack = DenseStack::init(&[input_dim, config.hidden1, config.hidden2, classes], rng)?;
        Ok(Self { classes, stack })
    }

    pub fn from_stack(stack: DenseStack) -> Result<Self> {
        let classes = stack.output_dim();
        if classes < 2 {
            return Err(Error::Config(format!(
                "a classifier needs at least 2 classes, got {classes}"
            )));
        }
        Ok(Self { classes, stack })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input_dim(&self) -> usize {
        self.stack.input_dim()
    }

    pub fn stack(&self) -> &DenseStack {
        &self.stack
    }

    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        self.stack.forward_value(x)
    }

    /// Predicted class per row: argmax of the logits, lowest index on ties.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.logits(x)?.iter_rows().map(argmax).collect())
    }
}

/// Index of the largest value, preferring the lowest index on exact ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Train the head in place with softmax cross-entropy; returns per-epoch
/// mean losses.
pub fn train_task_a(
    head: &mut MlpHead,
    x: &Matrix,
    golds: &[usize],
    cfg: &HeadTrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if x.rows() != golds.len() {
        return Err(Error::Contract(format!(
            "{} feature rows but {} labels",
            x.rows(),
            golds.len()
        )));
    }
    if x.cols() != head.input_dim() {
        return Err(Error::Dimension(format!(
            "head expects {}-dim input, got {}",
            head.input_dim(),
            x.cols()
        )));
    }
    if let Some(&bad) = golds.iter().find(|&&g| g >= head.classes) {
        return Err(Error::Label(format!(
            "gold class {bad} out of range for {} classes",
            head.classes
        )));
    }

    let shapes: Vec<(usize, usize)> = head.stack.params().iter().map(|m| m.shape()).collect();
    let mut optim = OptimizerState::new(cfg.optimizer, &shapes)?;
    let frozen = vec![false; shapes.len()];
    let mut rng = SeededRng::new(cfg.seed);
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..x.rows()).collect();
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch_x = x.take_rows(chunk)?;
            let batch_y: Vec<usize> = chunk.iter().map(|&i| golds[i]).collect();
            let mut tape = Tape::new();
            let staged = head.stack.stage(&mut tape);
            let input = tape.input(batch_x);
            let logits = staged.forward(&mut tape, input)?;
            let loss_id = tape.softmax_cross_entropy(logits, &batch_y)?;
            let loss = tape.value(loss_id).scalar_value()?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "epoch {epoch}, batch {batch_no}: loss is {loss}"
                )));
            }
            let grads = tape.backward(loss_id)?;
            let grad_mats = staged.collect_grads(&grads, &head.stack);
            let mut params = head.stack.params_mut();
            optim.step(&mut params, &grad_mats, &frozen).map_err(|e| match e {
                Error::Diverged(msg) => {
                    Error::Diverged(format!("epoch {epoch}, batch {batch_no}: {msg}"))
                }
                other => other,
            })?;
            total += loss * chunk.len() as f64;
        }
        curve.push(total / x.rows() as f64);
    }
    Ok(curve)
}
