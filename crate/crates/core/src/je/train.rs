//! Mini-batch training loop for the joint embedding.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureTable, PairSet};
use crate::error::{Error, Result};
use crate::je::loss::stage_loss;
use crate::je::model::{JointModel, StagedModel, PARAM_COUNT};
use crate::numeric::{HingeSkips, Matrix, OptimSpec, OptimizerState, SeededRng, Tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimSpec,
    pub seed: u64,
    /// Stop after this many epochs without improvement of the monitored
    /// loss (validation loss when a validation set is given, training loss
    /// otherwise), restoring the best weights seen.
    pub patience: Option<usize>,
    pub freeze_image_branch: bool,
    pub freeze_text_branch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 30,
            optimizer: OptimSpec::default(),
            seed: 0,
            patience: None,
            freeze_image_branch: false,
            freeze_text_branch: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "triplets need in-batch negatives; batch_size {} < 2",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".to_string()));
        }
        if self.freeze_image_branch && self.freeze_text_branch {
            return Err(Error::Config("both branches frozen; nothing to train".to_string()));
        }
        if let Some(0) = self.patience {
            return Err(Error::Config("patience must be at least 1".to_string()));
        }
        self.optimizer.validate()
    }

    fn frozen_mask(&self) -> [bool; PARAM_COUNT] {
        let mut mask = [false; PARAM_COUNT];
        if self.freeze_image_branch {
            mask[..4].fill(true);
        }
        if self.freeze_text_branch {
            mask[4..].fill(true);
        }
        mask
    }
}

/// Per-epoch losses, in epoch order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

pub type LossCurve = Vec<EpochStats>;

/// A pair set with its features resolved into aligned rows.
struct ResolvedPairs {
    image_keys: Vec<String>,
    text_keys: Vec<String>,
    images: Matrix,
    texts: Matrix,
}

impl ResolvedPairs {
    fn resolve(pairs: &PairSet, images: &FeatureTable, texts: &FeatureTable) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 pairs to form triplets, got {}",
                pairs.len()
            )));
        }
        let image_keys: Vec<String> = pairs.iter().map(|(i, _)| i.to_string()).collect();
        let text_keys: Vec<String> = pairs.iter().map(|(_, t)| t.to_string()).collect();
        Ok(Self {
            images: images.batch(&image_keys)?,
            texts: texts.batch(&text_keys)?,
            image_keys,
            text_keys,
        })
    }

    fn len(&self) -> usize {
        self.image_keys.len()
    }

    /// Gather rows `idx` into a batch: features plus hinge exclusions.
    fn batch(&self, idx: &[usize]) -> Result<(Matrix, Matrix, HingeSkips)> {
        let take = |m: &Matrix| m.take_rows(idx);
        let img_keys: Vec<&str> = idx.iter().map(|&i| self.image_keys[i].as_str()).collect();
        let txt_keys: Vec<&str> = idx.iter().map(|&i| self.text_keys[i].as_str()).collect();
        Ok((take(&self.images)?, take(&self.texts)?, HingeSkips::from_keys(&img_keys, &txt_keys)))
    }
}

/// Mean batch loss over a resolved set, weighted by batch size, without
/// gradients. Deterministic batching in storage order.
fn evaluate_loss(model: &JointModel, set: &ResolvedPairs, batch_size: usize) -> Result<f64> {
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut total = 0.0;
    let mut weight = 0usize;
    for chunk in idx.chunks(batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let (images, texts, skips) = set.batch(chunk)?;
        let mut tape = Tape::new();
        let staged = StagedModel::stage(&mut tape, model);
        let loss = stage_loss(&mut tape, &staged, &images, &texts, model.margin(), skips)?;
        total += tape.value(loss).scalar_value()? * chunk.len() as f64;
        weight += chunk.len();
    }
    if weight == 0 {
        return Err(Error::Config("no batch of size >= 2 to evaluate".to_string()));
    }
    Ok(total / weight as f64)
}

/// Train `model` in place on `pairs`, shuffling each epoch with a stream
/// derived from `cfg.seed`. Trailing batches smaller than two pairs are
/// dropped — a single pair has no in-batch negative. Returns the loss
/// curve; with `patience` set, the model is left at the best epoch.
pub fn train_je(
    model: &mut JointModel,
    pairs: &PairSet,
    images: &FeatureTable,
    texts: &FeatureTable,
    cfg: &TrainConfig,
    val_pairs: Option<&PairSet>,
) -> Result<LossCurve> {
    train_je_with(model, pairs, images, texts, cfg, val_pairs, |_| Ok(()))
}

/// Like [`train_je`], but calls `on_epoch` after every completed epoch, so
/// callers can stream the loss curve to disk as it grows: if training later
/// diverges, every epoch reported so far has already been handed out. An
/// error from the observer aborts training.
pub fn train_je_with(
    model: &mut JointModel,
    pairs: &PairSet,
    images: &FeatureTable,
    texts: &FeatureTable,
    cfg: &TrainConfig,
    val_pairs: Option<&PairSet>,
    mut on_epoch: impl FnMut(&EpochStats) -> Result<()>,
) -> Result<LossCurve> {
    cfg.validate()?;
    let train = ResolvedPairs::resolve(pairs, images, texts)?;
    let val = val_pairs
        .map(|p| ResolvedPairs::resolve(p, images, texts))
        .transpose()?;

    let mut optim = OptimizerState::new(cfg.optimizer, &model.param_shapes())?;
    let frozen = cfg.frozen_mask();
    let mut rng = SeededRng::new(cfg.seed);
    let mut curve = LossCurve::new();
    let mut best: Option<(f64, [Matrix; PARAM_COUNT], usize)> = None;
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        rng.shuffle(&mut order);

        let mut total = 0.0;
        let mut weight = 0usize;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let (imgs, txts, skips) = train.batch(chunk)?;
            let mut tape = Tape::new();
            let staged = StagedModel::stage(&mut tape, model);
            let loss_id = stage_loss(&mut tape, &staged, &imgs, &txts, model.margin(), skips)?;
            let loss = tape.value(loss_id).scalar_value()?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "epoch {epoch}, batch {batch_no}: loss is {loss}"
                )));
            }
            let grads = tape.backward(loss_id)?;
            let grad_mats = staged.collect_grads(&grads, model);
            let mut params = model.params_mut();
            optim
                .step(&mut params, &grad_mats, &frozen)
                .map_err(|e| match e {
                    Error::Diverged(msg) => {
                        Error::Diverged(format!("epoch {epoch}, batch {batch_no}: {msg}"))
                    }
                    other => other,
                })?;
            total += loss * chunk.len() as f64;
            weight += chunk.len();
        }
        if weight == 0 {
            return Err(Error::Config(format!(
                "batch_size {} leaves no usable batch for {} pairs",
                cfg.batch_size,
                train.len()
            )));
        }
        let train_loss = total / weight as f64;
        let val_loss = val
            .as_ref()
            .map(|v| evaluate_loss(model, v, cfg.batch_size))
            .transpose()?;
        let stats = EpochStats { epoch, train_loss, val_loss };
        on_epoch(&stats)?;
        curve.push(stats);

        if let Some(patience) = cfg.patience {
            let monitored = val_loss.unwrap_or(train_loss);
            let improved = best.as_ref().map_or(true, |(b, _, _)| monitored < *b);
            if improved {
                best = Some((monitored, snapshot(model), epoch));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }

    if let Some((_, weights, _)) = best {
        restore(model, weights);
    }
    Ok(curve)
}

fn snapshot(model: &JointModel) -> [Matrix; PARAM_COUNT] {
    model.params().map(Matrix::clone)
}

fn restore(model: &mut JointModel, weights: [Matrix; PARAM_COUNT]) {
    for (param, saved) in model.params_mut().into_iter().zip(weights) {
        *param = saved;
    }
}
