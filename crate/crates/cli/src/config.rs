//! The TOML run configuration shared by every subcommand.
//!
//! A config file is optional: every field has a default, so e.g.
//! `jemb --seed 42 --out data gen-synth` works without one. Command-line
//! flags override file values. The `seed` is the only mandatory setting —
//! there is deliberately no wall-clock fallback, because an unseeded run
//! would not be reproducible.
//!
//! All per-stage RNG seeds are derived from the single root `seed`; the
//! `seed` keys inside `[je_train]` and `[head_train]` are overwritten by
//! that derivation and need not be set.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use jemb_core::data::bundle::{
    CAPTIONS_FILE, IMAGES_FILE, LABELS_FILE, SENTENCES_FILE, WORDS_FILE,
};
use jemb_core::data::{Regime, SynthConfig};
use jemb_core::eval::PipelineSpec;
use jemb_core::heads::{HeadTrainConfig, MlpConfig, MtlConfig};
use jemb_core::je::{JeConfig, TrainConfig};

/// Where the five corpus files live. Defaults to the standard bundle
/// layout under `data/` — the same layout `gen-synth` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub images: PathBuf,
    pub words: PathBuf,
    pub sentences: PathBuf,
    pub captions: PathBuf,
    pub labels: PathBuf,
}

impl DataPaths {
    /// The standard bundle layout under one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            images: dir.join(IMAGES_FILE),
            words: dir.join(WORDS_FILE),
            sentences: dir.join(SENTENCES_FILE),
            captions: dir.join(CAPTIONS_FILE),
            labels: dir.join(LABELS_FILE),
        }
    }
}

impl Default for DataPaths {
    fn default() -> Self {
        Self::in_dir("data")
    }
}

/// Checkpoint locations; unset paths default to files under the output
/// directory, so a config only needs them to read or write elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckpointPaths {
    pub je: Option<PathBuf>,
    pub heads: Option<PathBuf>,
}

/// Synthetic-generator knobs. The generator seed is the run seed, so this
/// section intentionally has no `seed` key of its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub classes: usize,
    pub memes: usize,
    pub dim_img: usize,
    pub dim_txt: usize,
    pub vocab_per_class: usize,
    pub noise: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        Self {
            classes: d.classes,
            memes: d.memes,
            dim_img: d.dim_img,
            dim_txt: d.dim_txt,
            vocab_per_class: d.vocab_per_class,
            noise: d.noise,
        }
    }
}

impl SynthSection {
    pub fn with_seed(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            classes: self.classes,
            memes: self.memes,
            dim_img: self.dim_img,
            dim_txt: self.dim_txt,
            vocab_per_class: self.vocab_per_class,
            noise: self.noise,
            seed,
        }
    }
}

/// One experiment: corpus paths, pairing regime, architecture and training
/// knobs, fold count and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus tag recorded in evaluation reports.
    pub corpus: String,
    /// Pairing regime: `"SJM"` (sentence–image) or `"WJM"` (word–image).
    pub regime: Regime,
    /// Master seed; every stage seed derives from it. Mandatory: set it
    /// here or pass `--seed`.
    pub seed: Option<u64>,
    /// Cross-validation folds for `eval`.
    pub folds: usize,
    /// Where artifacts go: manifests, checkpoints, loss curves, reports.
    pub out_dir: PathBuf,
    pub paths: DataPaths,
    pub checkpoints: CheckpointPaths,
    pub je: JeConfig,
    pub je_train: TrainConfig,
    pub head: MlpConfig,
    pub mtl: MtlConfig,
    pub head_train: HeadTrainConfig,
    pub synth: SynthSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: "synthetic".to_string(),
            regime: Regime::Wjm,
            seed: None,
            folds: 5,
            out_dir: PathBuf::from("out"),
            paths: DataPaths::default(),
            checkpoints: CheckpointPaths::default(),
            je: JeConfig::default(),
            je_train: TrainConfig::default(),
            head: MlpConfig::default(),
            mtl: MtlConfig::default(),
            head_train: HeadTrainConfig::default(),
            synth: SynthSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Fold command-line values in; flags win over file values.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        if let Some(seed) = seed {
            self.seed = Some(seed);
        }
        if let Some(out) = out {
            self.out_dir = out;
        }
    }

    /// The mandatory master seed.
    pub fn master_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            anyhow::anyhow!("no seed configured; set `seed` in the config file or pass --seed")
        })
    }

    pub fn je_checkpoint(&self) -> PathBuf {
        self.checkpoints.je.clone().unwrap_or_else(|| self.out_dir.join("je.ckpt"))
    }

    pub fn heads_checkpoint(&self) -> PathBuf {
        self.checkpoints.heads.clone().unwrap_or_else(|| self.out_dir.join("heads.ckpt"))
    }

    pub fn pairs_manifest(&self) -> PathBuf {
        self.out_dir.join("pairs.tsv")
    }

    pub fn skip_report_path(&self) -> PathBuf {
        self.out_dir.join("pairs.skipped.txt")
    }

    pub fn loss_curve_path(&self) -> PathBuf {
        self.out_dir.join("je_loss.jsonl")
    }

    /// Assemble and validate the cross-validation spec, pinning the master
    /// seed.
    pub fn pipeline_spec(&self) -> Result<PipelineSpec> {
        let spec = PipelineSpec {
            regime: self.regime,
            folds: self.folds,
            seed: self.master_seed()?,
            je: self.je,
            je_train: self.je_train.clone(),
            head: self.head,
            mtl: self.mtl,
            head_train: self.head_train.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Fail early, by name, if an input file a command needs is missing.
pub fn require_files(files: &[(&str, &Path)]) -> Result<()> {
    for (what, path) in files {
        if !path.is_file() {
            bail!("{what} file not found: {}", path.display());
        }
    }
    Ok(())
}
