//! Cross-validated end-to-end evaluation.
//!
//! For each fold the entire pipeline is retrained from scratch on the
//! training memes only: joint embedding on that fold's pairs, then the
//! three classifier heads on the fused embeddings. Test memes contribute
//! nothing to pair building or head training — an explicit guard rejects
//! any train pair whose image belongs to the held-out fold.
//!
//! All randomness derives from one master seed: first the fold-split seed,
//! then six seeds per fold (joint-embedding init and training, heads init,
//! and one training seed per task), drawn up front in fold order.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{
    build_pairs_sjm, build_pairs_wjm, content_pos_filter, kfold_split, DatasetBundle, LabelSet,
    PairSet, Regime, SkipReport, SUB_TASKS,
};
use crate::error::{Error, Result};
use crate::eval::metrics::{macro_f1, task_b_score, task_c_score};
use crate::heads::{
    first_sentences, fuse, train_mtl, train_task_a, HeadTrainConfig, MlpConfig, MlpHead,
    MtlConfig, MtlModel, MtlTargets, TaskMode,
};
use crate::je::{train_je, JeConfig, JointModel, TrainConfig};
use crate::numeric::SeededRng;

/// Everything that determines a cross-validated run, apart from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSpec {
    pub regime: Regime,
    pub folds: usize,
    pub seed: u64,
    pub je: JeConfig,
    pub je_train: TrainConfig,
    pub head: MlpConfig,
    pub mtl: MtlConfig,
    pub head_train: HeadTrainConfig,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        Self {
            regime: Regime::Wjm,
            folds: 5,
            seed: 0,
            je: JeConfig::default(),
            je_train: TrainConfig::default(),
            head: MlpConfig::default(),
            mtl: MtlConfig::default(),
            head_train: HeadTrainConfig::default(),
        }
    }
}

impl PipelineSpec {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!(
                "cross-validation needs at least 2 folds, got {}",
                self.folds
            )));
        }
        self.je.validate()?;
        self.je_train.validate()?;
        self.head.validate()?;
        self.mtl.validate()?;
        self.head_train.validate()
    }
}

/// Scores of one held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub task_a: f64,
    pub task_b: f64,
    pub task_b_sub: [f64; SUB_TASKS],
    pub task_c: f64,
    pub task_c_sub: [f64; SUB_TASKS],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    A,
    B,
    C,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::A => "A",
            Task::B => "B",
            Task::C => "C",
        }
    }

    pub fn all() -> [Task; 3] {
        [Task::A, Task::B, Task::C]
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Task::A),
            "B" => Ok(Task::B),
            "C" => Ok(Task::C),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

/// Result of one cross-validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub regime: Regime,
    pub seed: u64,
    pub fold_scores: Vec<FoldScore>,
    /// Words and images the WJM pair builder had to skip; `None` under SJM.
    pub skipped: Option<SkipReport>,
}

impl CvResult {
    pub fn scores(&self, task: Task) -> Vec<f64> {
        self.fold_scores
            .iter()
            .map(|f| match task {
                Task::A => f.task_a,
                Task::B => f.task_b,
                Task::C => f.task_c,
            })
            .collect()
    }

    /// Mean and population standard deviation across folds.
    pub fn summary(&self, task: Task) -> (f64, f64) {
        mean_std(&self.scores(task))
    }
}

/// Mean and population standard deviation. Panics on an empty slice —
/// callers always score at least two folds.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "mean_std needs at least one value");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

struct FoldSeeds {
    je_init: u64,
    je_train: u64,
    heads_init: u64,
    train_a: u64,
    train_b: u64,
    train_c: u64,
}

impl FoldSeeds {
    fn draw(rng: &mut SeededRng) -> Self {
        Self {
            je_init: rng.next_u64(),
            je_train: rng.next_u64(),
            heads_init: rng.next_u64(),
            train_a: rng.next_u64(),
            train_b: rng.next_u64(),
            train_c: rng.next_u64(),
        }
    }
}

fn gold_rows(
    labels: &LabelSet,
    ids: &[String],
) -> Result<(Vec<usize>, Vec<[u8; SUB_TASKS]>, Vec<[usize; SUB_TASKS]>)> {
    let mut task_a = Vec::with_capacity(ids.len());
    let mut task_b = Vec::with_capacity(ids.len());
    let mut task_c = Vec::with_capacity(ids.len());
    for id in ids {
        let l = labels.get(id).ok_or_else(|| Error::UnresolvedKey {
            key: id.clone(),
            context: "meme has no labels".to_string(),
        })?;
        task_a.push(l.task_a);
        task_b.push(l.task_b);
        task_c.push(l.task_c);
    }
    Ok((task_a, task_b, task_c))
}

/// Build the full pair set for `regime` from a bundle.
pub fn pairs_for_regime(
    bundle: &DatasetBundle,
    regime: Regime,
) -> Result<(PairSet, Option<SkipReport>)> {
    match regime {
        Regime::Sjm => Ok((build_pairs_sjm(&bundle.captions, &bundle.sentences)?, None)),
        Regime::Wjm => {
            let (pairs, report) =
                build_pairs_wjm(&bundle.captions, &bundle.words, &content_pos_filter())?;
            Ok((pairs, Some(report)))
        }
    }
}

pub fn cross_validate(bundle: &DatasetBundle, spec: &PipelineSpec) -> Result<CvResult> {
    spec.validate()?;
    bundle.validate()?;
    let ids: Vec<String> = bundle.labels.ids().map(str::to_string).collect();
    let (pairs, skipped) = pairs_for_regime(bundle, spec.regime)?;

    let mut master = SeededRng::new(spec.seed);
    let split_seed = master.next_u64();
    let folds = kfold_split(&ids, spec.folds, split_seed)?;
    let fold_seeds: Vec<FoldSeeds> = (0..spec.folds).map(|_| FoldSeeds::draw(&mut master)).collect();

    let sentence_of = first_sentences(&bundle.captions);
    let schema = *bundle.labels.schema();
    let mut fold_scores = Vec::with_capacity(spec.folds);

    for (f, seeds) in fold_seeds.iter().enumerate() {
        let test_ids = folds.test_ids(f).to_vec();
        let train_ids = folds.train_ids(f);
        let train_set: BTreeSet<&str> = train_ids.iter().map(String::as_str).collect();
        let test_set: BTreeSet<&str> = test_ids.iter().map(String::as_str).collect();

        let train_pairs = pairs.filter_images(|img| train_set.contains(img));
        for (img, _) in train_pairs.iter() {
            if test_set.contains(img) {
                return Err(Error::Contract(format!(
                    "fold {f}: held-out image {img:?} leaked into training pairs"
                )));
            }
        }

        let mut model = JointModel::init(
            bundle.images.dim(),
            bundle.words.dim(),
            spec.je,
            &mut SeededRng::new(seeds.je_init),
        )?;
        let je_cfg = TrainConfig { seed: seeds.je_train, ..spec.je_train.clone() };
        let train_texts = match spec.regime {
            Regime::Sjm => &bundle.sentences,
            Regime::Wjm => &bundle.words,
        };
        train_je(&mut model, &train_pairs, &bundle.images, train_texts, &je_cfg, None)?;

        let x_train = fuse(&model, &bundle.images, &bundle.sentences, &sentence_of, &train_ids)?;
        let x_test = fuse(&model, &bundle.images, &bundle.sentences, &sentence_of, &test_ids)?;
        let (gold_a_train, gold_b_train, gold_c_train) = gold_rows(&bundle.labels, &train_ids)?;
        let (gold_a_test, gold_b_test, gold_c_test) = gold_rows(&bundle.labels, &test_ids)?;

        let mut heads_rng = SeededRng::new(seeds.heads_init);
        let mut head_a =
            MlpHead::init(x_train.cols(), schema.task_a_classes, spec.head, &mut heads_rng)?;
        let mut head_b =
            MtlModel::init(x_train.cols(), TaskMode::B, schema, spec.mtl, &mut heads_rng)?;
        let mut head_c =
            MtlModel::init(x_train.cols(), TaskMode::C, schema, spec.mtl, &mut heads_rng)?;

        let cfg_a = HeadTrainConfig { seed: seeds.train_a, ..spec.head_train.clone() };
        let cfg_b = HeadTrainConfig { seed: seeds.train_b, ..spec.head_train.clone() };
        let cfg_c = HeadTrainConfig { seed: seeds.train_c, ..spec.head_train.clone() };
        train_task_a(&mut head_a, &x_train, &gold_a_train, &cfg_a)?;
        train_mtl(&mut head_b, &x_train, &MtlTargets::Flags(gold_b_train), &cfg_b)?;
        train_mtl(&mut head_c, &x_train, &MtlTargets::Levels(gold_c_train), &cfg_c)?;

        let pred_a = head_a.predict(&x_test)?;
        let pred_b = head_b.predict_flags(&x_test)?;
        let pred_c = head_c.predict_levels(&x_test)?;

        let task_a = macro_f1(&gold_a_test, &pred_a, schema.task_a_classes)?;
        let (task_b, task_b_sub) = task_b_score(&gold_b_test, &pred_b)?;
        let (task_c, task_c_sub) = task_c_score(&gold_c_test, &pred_c, &schema.task_c_cards)?;
        fold_scores.push(FoldScore { fold: f, task_a, task_b, task_b_sub, task_c, task_c_sub });
    }

    Ok(CvResult { regime: spec.regime, seed: spec.seed, fold_scores, skipped })
}

/// Run both regimes on the same bundle and master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeComparison {
    pub sjm: CvResult,
    pub wjm: CvResult,
}

pub fn compare_regimes(bundle: &DatasetBundle, spec: &PipelineSpec) -> Result<RegimeComparison> {
    let sjm = cross_validate(bundle, &PipelineSpec { regime: Regime::Sjm, ..spec.clone() })?;
    let wjm = cross_validate(bundle, &PipelineSpec { regime: Regime::Wjm, ..spec.clone() })?;
    Ok(RegimeComparison { sjm, wjm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SynthConfig};
    use crate::numeric::OptimSpec;

    fn quick_spec() -> PipelineSpec {
        PipelineSpec {
            regime: Regime::Wjm,
            folds: 3,
            seed: 5,
            je: JeConfig { hidden: 8, joint_dim: 4, margin: 0.2 },
            je_train: TrainConfig {
                batch_size: 16,
                epochs: 2,
                optimizer: OptimSpec::adam(0.01),
                ..TrainConfig::default()
            },
            head: MlpConfig { hidden1: 8, hidden2: 4 },
            mtl: MtlConfig { hidden1: 8, hidden2: 4, shared_trunk: false },
            head_train: HeadTrainConfig {
                batch_size: 16,
                epochs: 3,
                optimizer: OptimSpec::adam(0.01),
                seed: 0,
            },
        }
    }

    fn quick_bundle() -> DatasetBundle {
        gen_synthetic(&SynthConfig {
            memes: 45,
            dim_img: 8,
            dim_txt: 6,
            vocab_per_class: 4,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn runs_all_folds_and_scores_in_range() {
        let bundle = quick_bundle();
        let result = cross_validate(&bundle, &quick_spec()).unwrap();
        assert_eq!(result.fold_scores.len(), 3);
        assert_eq!(result.regime, Regime::Wjm);
        assert!(result.skipped.as_ref().unwrap().is_empty());
        for fs in &result.fold_scores {
            for s in [fs.task_a, fs.task_b, fs.task_c] {
                assert!((0.0..=1.0).contains(&s), "score {s} out of range");
            }
            for s in fs.task_b_sub.iter().chain(&fs.task_c_sub) {
                assert!((0.0..=1.0).contains(s));
            }
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let bundle = quick_bundle();
        let a = cross_validate(&bundle, &quick_spec()).unwrap();
        let b = cross_validate(&bundle, &quick_spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sjm_uses_sentence_pairs() {
        let bundle = quick_bundle();
        let spec = PipelineSpec { regime: Regime::Sjm, ..quick_spec() };
        let result = cross_validate(&bundle, &spec).unwrap();
        assert_eq!(result.regime, Regime::Sjm);
        assert!(result.skipped.is_none());
    }

    #[test]
    fn summary_and_mean_std() {
        assert_eq!(mean_std(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (mean, std) = mean_std(&[1.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert_eq!(std, 1.0);
    }

    #[test]
    fn too_few_folds_rejected() {
        let spec = PipelineSpec { folds: 1, ..quick_spec() };
        assert!(spec.validate().is_err());
    }
}
