//! The multi-task emotion model: four towers, one per sub-task
//! (humour, sarcasm, offence, motivation), trained jointly under the mean
//! of the per-tower losses.
//!
//! In mode B each tower emits one logit and is scored with sigmoid
//! cross-entropy against the binary flag. In mode C each tower emits one
//! logit per intensity level and is scored with softmax cross-entropy.
//! With `shared_trunk` the first dense layer (plus ReLU) is shared across
//! towers; otherwise every tower is a full three-layer MLP of its own.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{LabelSchema, SUB_TASKS};
use crate::error::{Error, Result};
use crate::heads::stack::{DenseStack, StagedStack};
use crate::heads::HeadTrainConfig;
use crate::numeric::{Matrix, OptimizerState, SeededRng, Tape, ValueId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskMode {
    B,
    C,
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskMode::B => "B",
            TaskMode::C => "C",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtlConfig {
    pub hidden1: usize,
    pub hidden2: usize,
    pub shared_trunk: bool,
}

impl Default for MtlConfig {
    fn default() -> Self {
        Self { hidden1: 128, hidden2: 64, shared_trunk: false }
    }
}

impl MtlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::Config("hidden widths must be positive".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtlModel {
    mode: TaskMode,
    schema: LabelSchema,
    /// First dense layer shared by all towers, if configured.
    trunk: Option<DenseStack>,
    towers: Vec<DenseStack>,
}

impl MtlModel {
    /// Initialization draws the trunk first (when shared), then the towers
    /// in sub-task order.
    pub fn init(
        input_dim: usize,
        mode: TaskMode,
        schema: LabelSchema,
        config: MtlConfig,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        config.validate()?;
        schema.validate()?;
        let trunk = if config.shared_trunk {
            Some(DenseStack::init(&[input_dim, config.hidden1], rng)?)
        } else {
            None
        };
        let mut towers = Vec::with_capacity(SUB_TASKS);
        for t in 0..SUB_TASKS {
            let out = match mode {
                TaskMode::B => 1,
                TaskMode::C => schema.task_c_cards[t],
            };
            let dims: Vec<usize> = if config.shared_trunk {
                vec![config.hidden1, config.hidden2, out]
            } else {
                vec![input_dim, config.hidden1, config.hidden2, out]
            };
            towers.push(DenseStack::init(&dims, rng)?);
        }
        Ok(Self { mode, schema, trunk, towers })
    }

    pub fn from_parts(
        mode: TaskMode,
        schema: LabelSchema,
        trunk: Option<DenseStack>,
        towers: Vec<DenseStack>,
    ) -> Result<Self> {
        schema.validate()?;
        if towers.len() != SUB_TASKS {
            return Err(Error::Dimension(format!(
                "expected {SUB_TASKS} towers, got {}",
                towers.len()
            )));
        }
        let tower_input = trunk.as_ref().map(DenseStack::output_dim);
        for (t, tower) in towers.iter().enumerate() {
            if let Some(width) = tower_input {
                if tower.input_dim() != width {
                    return Err(Error::Dimension(format!(
                        "tower {t} consumes {} columns but the trunk makes {width}",
                        tower.input_dim()
                    )));
                }
            }
            let expect = match mode {
                TaskMode::B => 1,
                TaskMode::C => schema.task_c_cards[t],
            };
            if tower.output_dim() != expect {
                return Err(Error::Dimension(format!(
                    "tower {t} emits {} logits, mode {mode} needs {expect}",
                    tower.output_dim()
                )));
            }
        }
        Ok(Self { mode, schema, trunk, towers })
    }

    pub fn mode(&self) -> TaskMode {
        self.mode
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.schema
    }

    pub fn has_shared_trunk(&self) -> bool {
        self.trunk.is_some()
    }

    pub fn trunk(&self) -> Option<&DenseStack> {
        self.trunk.as_ref()
    }

    pub fn towers(&self) -> &[DenseStack] {
        &self.towers
    }

    pub fn input_dim(&self) -> usize {
        match &self.trunk {
            Some(t) => t.input_dim(),
            None => self.towers[0].input_dim(),
        }
    }

    fn params(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = Vec::new();
        if let Some(t) = &self.trunk {
            out.extend(t.params());
        }
        for tower in &self.towers {
            out.extend(tower.params());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = Vec::new();
        if let Some(t) = &mut self.trunk {
            out.extend(t.params_mut());
        }
        for tower in &mut self.towers {
            out.extend(tower.params_mut());
        }
        out
    }

    fn stage(&self, tape: &mut Tape) -> StagedMtl {
        StagedMtl {
            trunk: self.trunk.as_ref().map(|t| t.stage(tape)),
            towers: self.towers.iter().map(|t| t.stage(tape)).collect(),
        }
    }

    /// Per-tower logits for `x`, without building a training graph.
    pub fn logits(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        let mut tape = Tape::new();
        let staged = self.stage(&mut tape);
        let input = tape.input(x.clone());
        let outs = staged.forward(&mut tape, input)?;
        Ok(outs.into_iter().map(|id| tape.value(id).clone()).collect())
    }

    /// Mode B: flags per row, sub-task order; logit >= 0 means "present"
    /// (that is, sigmoid >= 0.5).
    pub fn predict_flags(&self, x: &Matrix) -> Result<Vec<[u8; SUB_TASKS]>> {
        if self.mode != TaskMode::B {
            return Err(Error::Contract("flag prediction needs a mode B model".to_string()));
        }
        let logits = self.logits(x)?;
        let mut out = vec![[0u8; SUB_TASKS]; x.rows()];
        for (t, tower_logits) in logits.iter().enumerate() {
            for (r, row) in tower_logits.iter_rows().enumerate() {
                out[r][t] = u8::from(row[0] >= 0.0);
            }
        }
        Ok(out)
    }

    /// Mode C: intensity levels per row, argmax with lowest-index ties.
    pub fn predict_levels(&self, x: &Matrix) -> Result<Vec<[usize; SUB_TASKS]>> {
        if self.mode != TaskMode::C {
            return Err(Error::Contract("level prediction needs a mode C model".to_string()));
        }
        let logits = self.logits(x)?;
        let mut out = vec![[0usize; SUB_TASKS]; x.rows()];
        for (t, tower_logits) in logits.iter().enumerate() {
            for (r, row) in tower_logits.iter_rows().enumerate() {
                out[r][t] = crate::heads::mlp::argmax(row);
            }
        }
        Ok(out)
    }
}

struct StagedMtl {
    trunk: Option<StagedStack>,
    towers: Vec<StagedStack>,
}

impl StagedMtl {
    fn forward(&self, tape: &mut Tape, x: ValueId) -> Result<Vec<ValueId>> {
        let shared = match &self.trunk {
            Some(trunk) => {
                let out = trunk.forward(tape, x)?;
                tape.relu(out)?
            }
            None => x,
        };
        self.towers.iter().map(|t| t.forward(tape, shared)).collect()
    }

    fn collect_grads(&self, grads: &crate::numeric::Gradients, model: &MtlModel) -> Vec<Matrix> {
        let ids: Vec<ValueId> = self
            .trunk
            .iter()
            .flat_map(StagedStack::param_ids)
            .chain(self.towers.iter().flat_map(StagedStack::param_ids))
            .collect();
        ids.iter()
            .zip(model.params())
            .map(|(id, p)| grads.get_or_zeros(*id, p.shape()))
            .collect()
    }
}

/// Gold labels for multi-task training, matching the model's mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MtlTargets {
    Flags(Vec<[u8; SUB_TASKS]>),
    Levels(Vec<[usize; SUB_TASKS]>),
}

impl MtlTargets {
    pub fn len(&self) -> usize {
        match self {
            MtlTargets::Flags(v) => v.len(),
            MtlTargets::Levels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self, model: &MtlModel) -> Result<()> {
        match (self, model.mode()) {
            (MtlTargets::Flags(rows), TaskMode::B) => {
                for row in rows {
                    if row.iter().any(|&f| f > 1) {
                        return Err(Error::Label(format!("flag out of range in {row:?}")));
                    }
                }
                Ok(())
            }
            (MtlTargets::Levels(rows), TaskMode::C) => {
                for row in rows {
                    for (t, &level) in row.iter().enumerate() {
                        if level >= model.schema().task_c_cards[t] {
                            return Err(Error::Label(format!(
                                "level {level} out of range for sub-task {t}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            (targets, mode) => Err(Error::Contract(format!(
                "targets {} do not match model mode {mode}",
                match targets {
                    MtlTargets::Flags(_) => "for task B",
                    MtlTargets::Levels(_) => "for task C",
                }
            ))),
        }
    }
}

/// Train all towers jointly; the batch loss is the unweighted mean of the
/// four tower losses. Returns per-epoch mean losses.
pub fn train_mtl(
    model: &mut MtlModel,
    x: &Matrix,
    targets: &MtlTargets,
    cfg: &HeadTrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    targets.validate(model)?;
    if x.rows() != targets.len() {
        return Err(Error::Contract(format!(
            "{} feature rows but {} label rows",
            x.rows(),
            targets.len()
        )));
    }
    if x.cols() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "model expects {}-dim input, got {}",
            model.input_dim(),
            x.cols()
        )));
    }

    let shapes: Vec<(usize, usize)> = model.params().iter().map(|m| m.shape()).collect();
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
            let mut tape = Tape::new();
            let staged = model.stage(&mut tape);
            let input = tape.input(batch_x);
            let tower_logits = staged.forward(&mut tape, input)?;

            let mut terms = Vec::with_capacity(SUB_TASKS);
            for (t, logits) in tower_logits.into_iter().enumerate() {
                let loss_t = match targets {
                    MtlTargets::Flags(rows) => {
                        let gold: Vec<u8> = chunk.iter().map(|&i| rows[i][t]).collect();
                        tape.sigmoid_cross_entropy(logits, &gold)?
                    }
                    MtlTargets::Levels(rows) => {
                        let gold: Vec<usize> = chunk.iter().map(|&i| rows[i][t]).collect();
                        tape.softmax_cross_entropy(logits, &gold)?
                    }
                };
                terms.push((loss_t, 1.0 / SUB_TASKS as f64));
            }
            let loss_id = tape.weighted_sum(&terms)?;
            let loss = tape.value(loss_id).scalar_value()?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "epoch {epoch}, batch {batch_no}: loss is {loss}"
                )));
            }
            let grads = tape.backward(loss_id)?;
            let grad_mats = staged.collect_grads(&grads, model);
            let mut params = model.params_mut();
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

#[cfg(test)]
mod tests {
    use super::*;

    /// Two clusters; flags and levels are functions of the cluster.
    fn toy() -> (Matrix, Vec<[u8; SUB_TASKS]>, Vec<[usize; SUB_TASKS]>) {
        let mut rng = SeededRng::new(31);
        let mut rows = Vec::new();
        let mut flags = Vec::new();
        let mut levels = Vec::new();
        for i in 0..40 {
            let side = i % 2;
            let center = if side == 0 { 3.0 } else { -3.0 };
            rows.push(vec![
                center + rng.normal(0.0, 0.3),
                -center + rng.normal(0.0, 0.3),
                center + rng.normal(0.0, 0.3),
            ]);
            let s = side as u8;
            flags.push([s, 1 - s, s, 1 - s]);
            levels.push([side, 1 - side, side * 3, side]);
        }
        (Matrix::from_rows(&rows).unwrap(), flags, levels)
    }

    #[test]
    fn mode_b_learns_complementary_flags() {
        let (x, flags, _) = toy();
        let mut model = MtlModel::init(
            3,
            TaskMode::B,
            LabelSchema::default(),
            MtlConfig { hidden1: 16, hidden2: 8, shared_trunk: false },
            &mut SeededRng::new(4),
        )
        .unwrap();
        let cfg = HeadTrainConfig { epochs: 60, seed: 2, ..HeadTrainConfig::default() };
        let curve = train_mtl(&mut model, &x, &MtlTargets::Flags(flags.clone()), &cfg).unwrap();
        assert!(curve.last().unwrap() < &0.1, "final loss {:?}", curve.last());
        let preds = model.predict_flags(&x).unwrap();
        assert_eq!(preds, flags);
    }

    #[test]
    fn mode_c_learns_levels_with_a_shared_trunk() {
        let (x, _, levels) = toy();
        let mut model = MtlModel::init(
            3,
            TaskMode::C,
            LabelSchema::default(),
            MtlConfig { hidden1: 16, hidden2: 8, shared_trunk: true },
            &mut SeededRng::new(4),
        )
        .unwrap();
        assert!(model.has_shared_trunk());
        let cfg = HeadTrainConfig { epochs: 80, seed: 2, ..HeadTrainConfig::default() };
        train_mtl(&mut model, &x, &MtlTargets::Levels(levels.clone()), &cfg).unwrap();
        let preds = model.predict_levels(&x).unwrap();
        assert_eq!(preds, levels);
    }

    #[test]
    fn tower_output_widths_follow_the_schema() {
        let model = MtlModel::init(
            5,
            TaskMode::C,
            LabelSchema::default(),
            MtlConfig::default(),
            &mut SeededRng::new(1),
        )
        .unwrap();
        let widths: Vec<usize> = model.towers().iter().map(DenseStack::output_dim).collect();
        assert_eq!(widths, vec![4, 4, 4, 2]);
        let model_b = MtlModel::init(
            5,
            TaskMode::B,
            LabelSchema::default(),
            MtlConfig::default(),
            &mut SeededRng::new(1),
        )
        .unwrap();
        let widths: Vec<usize> = model_b.towers().iter().map(DenseStack::output_dim).collect();
        assert_eq!(widths, vec![1, 1, 1, 1]);
    }

    #[test]
    fn mismatched_targets_are_rejected() {
        let (x, _, levels) = toy();
        let mut model = MtlModel::init(
            3,
            TaskMode::B,
            LabelSchema::default(),
            MtlConfig::default(),
            &mut SeededRng::new(1),
        )
        .unwrap();
        let cfg = HeadTrainConfig::default();
        assert!(matches!(
            train_mtl(&mut model, &x, &MtlTargets::Levels(levels), &cfg),
            Err(Error::Contract(_))
        ));
        // Aligned mode but out-of-range level.
        let mut model_c = MtlModel::init(
            3,
            TaskMode::C,
            LabelSchema::default(),
            MtlConfig::default(),
            &mut SeededRng::new(1),
        )
        .unwrap();
        let mut bad = vec![[0usize; SUB_TASKS]; x.rows()];
        bad[0][3] = 2; // motivation is binary
        assert!(matches!(
            train_mtl(&mut model_c, &x, &MtlTargets::Levels(bad), &cfg),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn wrong_mode_prediction_is_rejected() {
        let model = MtlModel::init(
            3,
            TaskMode::B,
            LabelSchema::default(),
            MtlConfig::default(),
            &mut SeededRng::new(1),
        )
        .unwrap();
        let x = Matrix::zeros(2, 3).unwrap();
        assert!(model.predict_flags(&x).is_ok());
        assert!(model.predict_levels(&x).is_err());
    }
}
