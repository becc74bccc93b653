//! `jemb train-heads`: fit the three classifiers on frozen embeddings.
//!
//! Inputs are fused image+sentence projections under the joint-embedding
//! checkpoint; the sentiment head and both multi-task models train on every
//! labeled meme and land together in one heads checkpoint.

use std::fs;

use anyhow::{bail, Context, Result};

use jemb_core::data::SUB_TASKS;
use jemb_core::heads::{
    first_sentences, fuse, save_heads, train_mtl, train_task_a, HeadTrainConfig, HeadsBundle,
    MlpHead, MtlModel, MtlTargets, TaskMode,
};
use jemb_core::je::load_model;
use jemb_core::numeric::SeededRng;

use crate::commands::load_bundle;
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.master_seed()?;
    let je_path = cfg.je_checkpoint();
    if !je_path.is_file() {
        bail!(
            "joint-embedding checkpoint not found: {} (run `jemb train-je` first)",
            je_path.display()
        );
    }
    let model = load_model(&je_path)
        .with_context(|| format!("loading checkpoint {}", je_path.display()))?;
    let bundle = load_bundle(cfg)?;
    let ids: Vec<String> = bundle.labels.ids().map(str::to_string).collect();
    if ids.is_empty() {
        bail!("label file {} has no rows; nothing to train on", cfg.paths.labels.display());
    }

    let sentence_of = first_sentences(&bundle.captions);
    let x = fuse(&model, &bundle.images, &bundle.sentences, &sentence_of, &ids)?;

    let mut gold_a = Vec::with_capacity(ids.len());
    let mut flags: Vec<[u8; SUB_TASKS]> = Vec::with_capacity(ids.len());
    let mut levels: Vec<[usize; SUB_TASKS]> = Vec::with_capacity(ids.len());
    for id in &ids {
        let labels = bundle.labels.get(id).expect("ids come from the label set");
        gold_a.push(labels.task_a);
        flags.push(labels.task_b);
        levels.push(labels.task_c);
    }

    // Four stage seeds, drawn in a fixed order from the master seed.
    let mut rng = SeededRng::new(seed);
    let init_seed = rng.next_u64();
    let seed_a = rng.next_u64();
    let seed_b = rng.next_u64();
    let seed_c = rng.next_u64();

    let schema = *bundle.labels.schema();
    let mut heads_rng = SeededRng::new(init_seed);
    let mut task_a = MlpHead::init(x.cols(), schema.task_a_classes, cfg.head, &mut heads_rng)?;
    let mut task_b = MtlModel::init(x.cols(), TaskMode::B, schema, cfg.mtl, &mut heads_rng)?;
    let mut task_c = MtlModel::init(x.cols(), TaskMode::C, schema, cfg.mtl, &mut heads_rng)?;

    let cfg_a = HeadTrainConfig { seed: seed_a, ..cfg.head_train.clone() };
    let cfg_b = HeadTrainConfig { seed: seed_b, ..cfg.head_train.clone() };
    let cfg_c = HeadTrainConfig { seed: seed_c, ..cfg.head_train.clone() };
    let curve_a = train_task_a(&mut task_a, &x, &gold_a, &cfg_a)?;
    let curve_b = train_mtl(&mut task_b, &x, &MtlTargets::Flags(flags), &cfg_b)?;
    let curve_c = train_mtl(&mut task_c, &x, &MtlTargets::Levels(levels), &cfg_c)?;

    let heads = HeadsBundle { task_a, task_b, task_c };
    let out = cfg.heads_checkpoint();
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    save_heads(&heads, &out).with_context(|| format!("writing {}", out.display()))?;

    let final_of = |curve: &[f64]| curve.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained heads on {} memes; final losses A {:.6}, B {:.6}, C {:.6}",
        ids.len(),
        final_of(&curve_a),
        final_of(&curve_b),
        final_of(&curve_c)
    );
    println!("heads checkpoint: {}", out.display());
    Ok(())
}
