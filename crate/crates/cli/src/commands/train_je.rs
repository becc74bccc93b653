//! `jemb train-je`: fit the two-branch joint embedding on the manifest.
//!
//! The loss curve is streamed to disk one JSON line per epoch, so a run
//! that diverges still leaves every completed epoch behind. With
//! `--init-from` the model starts from an existing checkpoint (sequential
//! fine-tuning); architecture and margin then come from that checkpoint,
//! not from the config.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use jemb_core::data::{load_features, Modality, Regime};
use jemb_core::je::{load_model, save_model, train_je_with, JointModel, TrainConfig};
use jemb_core::numeric::SeededRng;

use crate::commands::read_manifest;
use crate::config::{require_files, RunConfig};

pub fn run(cfg: &RunConfig, init_from: Option<&Path>) -> Result<()> {
    let seed = cfg.master_seed()?;
    let manifest = cfg.pairs_manifest();
    if !manifest.is_file() {
        bail!(
            "pair manifest not found: {} (run `jemb build-pairs` first)",
            manifest.display()
        );
    }
    let (text_what, text_path) = match cfg.regime {
        Regime::Sjm => ("sentence features", &cfg.paths.sentences),
        Regime::Wjm => ("word features", &cfg.paths.words),
    };
    require_files(&[("image features", &cfg.paths.images), (text_what, text_path)])?;

    let images = load_features(&cfg.paths.images, Modality::Image)
        .with_context(|| format!("loading {}", cfg.paths.images.display()))?;
    let texts = load_features(text_path, Modality::Text)
        .with_context(|| format!("loading {}", text_path.display()))?;
    let pairs = read_manifest(&manifest, cfg.regime)?;

    // Two stage seeds, drawn in a fixed order from the master seed.
    let mut rng = SeededRng::new(seed);
    let init_seed = rng.next_u64();
    let shuffle_seed = rng.next_u64();

    let mut model = match init_from {
        Some(path) => {
            let model = load_model(path)
                .with_context(|| format!("loading checkpoint {}", path.display()))?;
            if model.dim_img() != images.dim() || model.dim_txt() != texts.dim() {
                bail!(
                    "checkpoint {} projects {}-dim images / {}-dim text, but the feature files \
                     are {}-dim / {}-dim",
                    path.display(),
                    model.dim_img(),
                    model.dim_txt(),
                    images.dim(),
                    texts.dim()
                );
            }
            println!("fine-tuning from {}", path.display());
            model
        }
        None => JointModel::init(images.dim(), texts.dim(), cfg.je, &mut SeededRng::new(init_seed))?,
    };

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let curve_path = cfg.loss_curve_path();
    let file = File::create(&curve_path)
        .with_context(|| format!("creating {}", curve_path.display()))?;
    let mut curve_file = BufWriter::new(file);

    let train_cfg = TrainConfig { seed: shuffle_seed, ..cfg.je_train.clone() };
    let outcome = train_je_with(&mut model, &pairs, &images, &texts, &train_cfg, None, |stats| {
        serde_json::to_writer(&mut curve_file, stats).map_err(io::Error::from)?;
        curve_file.write_all(b"\n")?;
        curve_file.flush()?;
        Ok(())
    });
    let curve = match outcome {
        Ok(curve) => curve,
        Err(err) => {
            // Every completed epoch is already on disk; say so and fail.
            let _ = curve_file.flush();
            return Err(err).with_context(|| {
                format!("training failed; partial loss curve kept at {}", curve_path.display())
            });
        }
    };

    let ckpt = cfg.je_checkpoint();
    if let Some(dir) = ckpt.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    save_model(&model, &ckpt).with_context(|| format!("writing {}", ckpt.display()))?;

    let last = curve.last().expect("validated config trains at least one epoch");
    println!("trained {} epochs on {} pairs; final loss {:.6}", curve.len(), pairs.len(), last.train_loss);
    println!("checkpoint: {}", ckpt.display());
    println!("loss curve: {}", curve_path.display());
    Ok(())
}
