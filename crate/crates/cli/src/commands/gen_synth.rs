//! `jemb gen-synth`: write a synthetic corpus in the standard layout.

use anyhow::{Context, Result};

use jemb_core::data::bundle::{
    CAPTIONS_FILE, IMAGES_FILE, LABELS_FILE, SENTENCES_FILE, WORDS_FILE,
};
use jemb_core::data::gen_synthetic;

use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.master_seed()?;
    let synth = cfg.synth.with_seed(seed);
    let bundle = gen_synthetic(&synth).context("generating the synthetic corpus")?;
    bundle
        .save_to_dir(&cfg.out_dir)
        .with_context(|| format!("writing the corpus under {}", cfg.out_dir.display()))?;

    println!(
        "wrote {} memes ({} classes, seed {}) under {}",
        synth.memes,
        synth.classes,
        synth.seed,
        cfg.out_dir.display()
    );
    for name in [IMAGES_FILE, WORDS_FILE, SENTENCES_FILE, CAPTIONS_FILE, LABELS_FILE] {
        println!("  {}", cfg.out_dir.join(name).display());
    }
    Ok(())
}
