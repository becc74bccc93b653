//! `jemb analogy`: solve "a : b :: c : ?" in the learned text space.
//!
//! Word vectors are projected through the checkpoint's text branch; the
//! top ten candidates are printed with their cosine scores.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use jemb_core::data::{load_features, Modality};
use jemb_core::eval::VectorSpace;
use jemb_core::je::load_model;

use crate::config::{require_files, RunConfig};

pub fn run(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    words: Option<&Path>,
    a: &str,
    b: &str,
    c: &str,
) -> Result<()> {
    let ckpt: PathBuf = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| cfg.je_checkpoint());
    let words_path: PathBuf =
        words.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.words.clone());
    require_files(&[
        ("joint-embedding checkpoint", &ckpt),
        ("word features", &words_path),
    ])?;

    let model =
        load_model(&ckpt).with_context(|| format!("loading checkpoint {}", ckpt.display()))?;
    let table = load_features(&words_path, Modality::Text)
        .with_context(|| format!("loading {}", words_path.display()))?;
    let space = VectorSpace::from_projected(&model, &table)
        .context("projecting the vocabulary into the joint space")?;

    let ranked = space.analogy(a, b, c, 10)?;
    println!("{a} : {b} :: {c} : ?");
    for (rank, (key, cosine)) in ranked.iter().enumerate() {
        println!("{:>2}. {cosine:.6}  {key}", rank + 1);
    }
    Ok(())
}
