//! The two-branch projection network.
//!
//! Each modality passes through its own small MLP — dense, ReLU, dense —
//! and is then L2-normalized, so both branches land on the unit sphere of a
//! shared joint space and cosine similarity reduces to a dot product.

use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::numeric::{Gradients, Matrix, SeededRng, Tape, ValueId};

/// Architecture knobs shared by both branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JeConfig {
    pub hidden: usize,
    pub joint_dim: usize,
    /// Margin of the triplet hinge this model is trained with.
    pub margin: f64,
}

impl Default for JeConfig {
    fn default() -> Self {
        Self { hidden: 256, joint_dim: 128, margin: 0.2 }
    }
}

impl JeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.joint_dim == 0 {
            return Err(Error::Config("layer widths must be positive".to_string()));
        }
        if !self.margin.is_finite() || self.margin <= 0.0 {
            return Err(Error::Config(format!("margin must be positive, got {}", self.margin)));
        }
        Ok(())
    }
}

/// Weights of one branch: input → hidden → joint.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

impl BranchParams {
    /// Uniform Glorot weights, zero biases. Draws `w1` row-major first,
    /// then `w2`; the caller controls draw order across branches.
    fn init(input: usize, hidden: usize, output: usize, rng: &mut SeededRng) -> Result<Self> {
        Ok(Self {
            w1: Matrix::glorot(input, hidden, rng)?,
            b1: Matrix::zeros(1, hidden)?,
            w2: Matrix::glorot(hidden, output, rng)?,
            b2: Matrix::zeros(1, output)?,
        })
    }
}

/// A trained (or initializing) joint embedding model.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    dim_img: usize,
    dim_txt: usize,
    config: JeConfig,
    pub image_branch: BranchParams,
    pub text_branch: BranchParams,
}

/// How many parameter matrices a model exposes to the optimizer.
pub const PARAM_COUNT: usize = 8;

impl JointModel {
    /// Fresh Glorot-initialized model. The image branch consumes the
    /// generator stream before the text branch.
    pub fn init(dim_img: usize, dim_txt: usize, config: JeConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        if dim_img == 0 || dim_txt == 0 {
            return Err(Error::Config("input dimensions must be positive".to_string()));
        }
        let image_branch = BranchParams::init(dim_img, config.hidden, config.joint_dim, rng)?;
        let text_branch = BranchParams::init(dim_txt, config.hidden, config.joint_dim, rng)?;
        Ok(Self { dim_img, dim_txt, config, image_branch, text_branch })
    }

    /// Rebuild from stored weights, re-deriving dimensions from shapes.
    pub fn from_parts(
        image_branch: BranchParams,
        text_branch: BranchParams,
        margin: f64,
    ) -> Result<Self> {
        let check = |b: &BranchParams, name: &str| -> Result<(usize, usize, usize)> {
            let (input, hidden) = b.w1.shape();
            let (hidden2, joint) = b.w2.shape();
            if hidden != hidden2 || b.b1.shape() != (1, hidden) || b.b2.shape() != (1, joint) {
                return Err(Error::Dimension(format!(
                    "{name} branch shapes do not chain: w1 {}x{}, w2 {}x{}",
                    input, hidden, hidden2, joint
                )));
            }
            Ok((input, hidden, joint))
        };
        let (dim_img, hidden_i, joint_i) = check(&image_branch, "image")?;
        let (dim_txt, hidden_t, joint_t) = check(&text_branch, "text")?;
        if hidden_i != hidden_t || joint_i != joint_t {
            return Err(Error::Dimension(format!(
                "branches disagree: image {}→{}, text {}→{}",
                hidden_i, joint_i, hidden_t, joint_t
            )));
        }
        let config = JeConfig { hidden: hidden_i, joint_dim: joint_i, margin };
        config.validate()?;
        Ok(Self { dim_img, dim_txt, config, image_branch, text_branch })
    }

    pub fn dim_img(&self) -> usize {
        self.dim_img
    }

    pub fn dim_txt(&self) -> usize {
        self.dim_txt
    }

    pub fn joint_dim(&self) -> usize {
        self.config.joint_dim
    }

    pub fn hidden(&self) -> usize {
        self.config.hidden
    }

    pub fn margin(&self) -> f64 {
        self.config.margin
    }

    pub fn config(&self) -> &JeConfig {
        &self.config
    }

    /// Parameter matrices in optimizer order: image w1, b1, w2, b2, then
    /// the text branch likewise.
    pub fn params(&self) -> [&Matrix; PARAM_COUNT] {
        [
            &self.image_branch.w1,
            &self.image_branch.b1,
            &self.image_branch.w2,
            &self.image_branch.b2,
            &self.text_branch.w1,
            &self.text_branch.b1,
            &self.text_branch.w2,
            &self.text_branch.b2,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Matrix; PARAM_COUNT] {
        [
            &mut self.image_branch.w1,
            &mut self.image_branch.b1,
            &mut self.image_branch.w2,
            &mut self.image_branch.b2,
            &mut self.text_branch.w1,
            &mut self.text_branch.b1,
            &mut self.text_branch.w2,
            &mut self.text_branch.b2,
        ]
    }

    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.params().iter().map(|m| m.shape()).collect()
    }

    /// Project image feature rows into the joint space (unit-norm rows).
    pub fn project_image(&self, features: &Matrix) -> Result<Matrix> {
        self.project(features, self.dim_img, &self.image_branch)
    }

    /// Project text feature rows into the joint space (unit-norm rows).
    pub fn project_text(&self, features: &Matrix) -> Result<Matrix> {
        self.project(features, self.dim_txt, &self.text_branch)
    }

    fn project(&self, features: &Matrix, expect_dim: usize, branch: &BranchParams) -> Result<Matrix> {
        if features.cols() != expect_dim {
            return Err(Error::Dimension(format!(
                "branch expects {expect_dim}-dim input, got {}x{}",
                features.rows(),
                features.cols()
            )));
        }
        let mut tape = Tape::new();
        let x = tape.input(features.clone());
        let staged = StagedBranch::stage(&mut tape, branch);
        let out = staged.forward(&mut tape, x)?;
        Ok(tape.value(out).clone())
    }

    /// Look up `keys` in `table` and project them; rows follow key order.
    pub fn embed_images<S: AsRef<str>>(&self, table: &FeatureTable, keys: &[S]) -> Result<Matrix> {
        self.project_image(&table.batch(keys)?)
    }

    pub fn embed_texts<S: AsRef<str>>(&self, table: &FeatureTable, keys: &[S]) -> Result<Matrix> {
        self.project_text(&table.batch(keys)?)
    }
}

/// One branch's parameters registered on a tape.
pub(crate) struct StagedBranch {
    pub w1: ValueId,
    pub b1: ValueId,
    pub w2: ValueId,
    pub b2: ValueId,
}

impl StagedBranch {
    pub fn stage(tape: &mut Tape, branch: &BranchParams) -> Self {
        Self {
            w1: tape.param(branch.w1.clone()),
            b1: tape.param(branch.b1.clone()),
            w2: tape.param(branch.w2.clone()),
            b2: tape.param(branch.b2.clone()),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: ValueId) -> Result<ValueId> {
        let h = tape.affine(x, self.w1, self.b1)?;
        let h = tape.relu(h)?;
        let out = tape.affine(h, self.w2, self.b2)?;
        tape.l2_normalize(out)
    }
}

/// Both branches registered on a tape, for a joint training step.
pub(crate) struct StagedModel {
    pub image: StagedBranch,
    pub text: StagedBranch,
}

impl StagedModel {
    pub fn stage(tape: &mut Tape, model: &JointModel) -> Self {
        Self {
            image: StagedBranch::stage(tape, &model.image_branch),
            text: StagedBranch::stage(tape, &model.text_branch),
        }
    }

    /// Parameter ids in the same order as [`JointModel::params`].
    pub fn param_ids(&self) -> [ValueId; PARAM_COUNT] {
        [
            self.image.w1,
            self.image.b1,
            self.image.w2,
            self.image.b2,
            self.text.w1,
            self.text.b1,
            self.text.w2,
            self.text.b2,
        ]
    }

    /// Collect parameter gradients in optimizer order, using zeros where a
    /// parameter did not influence the loss.
    pub fn collect_grads(&self, grads: &Gradients, model: &JointModel) -> Vec<Matrix> {
        self.param_ids()
            .iter()
            .zip(model.params())
            .map(|(id, p)| grads.get_or_zeros(*id, p.shape()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> JointModel {
        let cfg = JeConfig { hidden: 8, joint_dim: 4, margin: 0.2 };
        JointModel::init(6, 5, cfg, &mut SeededRng::new(7)).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let cfg = JeConfig::default();
        let a = JointModel::init(10, 9, cfg, &mut SeededRng::new(1)).unwrap();
        let b = JointModel::init(10, 9, cfg, &mut SeededRng::new(1)).unwrap();
        let c = JointModel::init(10, 9, cfg, &mut SeededRng::new(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn projections_land_on_the_unit_sphere() {
        let m = model();
        let mut rng = SeededRng::new(3);
        let imgs = Matrix::new(7, 6, (0..42).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap();
        let out = m.project_image(&imgs).unwrap();
        assert_eq!(out.shape(), (7, 4));
        for r in 0..out.rows() {
            let norm: f64 = out.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "row {r} has norm {norm}");
        }
    }

    #[test]
    fn branches_are_independent() {
        let m = model();
        let x = Matrix::new(1, 5, vec![0.3, -1.0, 0.5, 2.0, -0.2]).unwrap();
        let before = m.project_text(&x).unwrap();
        let mut changed = m.clone();
        for v in changed.image_branch.w1.data_mut() {
            *v += 0.5;
        }
        let after = changed.project_text(&x).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn wrong_input_width_is_a_dimension_error() {
        let m = model();
        let x = Matrix::new(1, 5, vec![1.0; 5]).unwrap();
        assert!(matches!(m.project_image(&x), Err(Error::Dimension(_))));
    }

    #[test]
    fn glorot_bounds_hold() {
        let cfg = JeConfig { hidden: 16, joint_dim: 4, margin: 0.2 };
        let m = JointModel::init(8, 8, cfg, &mut SeededRng::new(11)).unwrap();
        let bound = (6.0_f64 / (8.0 + 16.0)).sqrt();
        assert!(m.image_branch.w1.data().iter().all(|v| v.abs() <= bound));
        assert!(m.image_branch.b1.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn from_parts_checks_shape_chains() {
        let m = model();
        let err = JointModel::from_parts(
            BranchParams {
                w1: m.image_branch.w1.clone(),
                b1: m.image_branch.b1.clone(),
                w2: Matrix::zeros(3, 4).unwrap(), // hidden is 8, not 3
                b2: m.image_branch.b2.clone(),
            },
            m.text_branch.clone(),
            0.2,
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
        let ok = JointModel::from_parts(m.image_branch.clone(), m.text_branch.clone(), 0.2);
        assert_eq!(ok.unwrap(), m);
    }
}
