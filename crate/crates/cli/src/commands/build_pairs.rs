//! `jemb build-pairs`: turn captions into a training-pair manifest.
//!
//! Both regimes are counted and printed for comparison; the manifest and
//! the skip report are written for the configured regime only.

use std::fs;

use anyhow::{Context, Result};

use jemb_core::data::{
    build_pairs_sjm, build_pairs_wjm, content_pos_filter, load_captions, load_features, Modality,
    Regime, SkipReport,
};

use crate::commands::write_manifest;
use crate::config::{require_files, RunConfig};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.paths;
    require_files(&[
        ("captions", &p.captions),
        ("word features", &p.words),
        ("sentence features", &p.sentences),
    ])?;
    let captions = load_captions(&p.captions)
        .with_context(|| format!("loading {}", p.captions.display()))?;
    if captions.is_empty() {
        eprintln!(
            "warning: {} contains no captions; the manifest will be empty",
            p.captions.display()
        );
    }
    let words = load_features(&p.words, Modality::Text)
        .with_context(|| format!("loading {}", p.words.display()))?;
    let sentences = load_features(&p.sentences, Modality::Text)
        .with_context(|| format!("loading {}", p.sentences.display()))?;

    // The word regime never hard-fails on vocabulary gaps (it reports them);
    // the sentence regime does, so its count may be unavailable when only
    // the word manifest was asked for.
    let sjm = build_pairs_sjm(&captions, &sentences);
    let (wjm, skipped) = build_pairs_wjm(&captions, &words, &content_pos_filter())?;
    match &sjm {
        Ok(pairs) => println!("SJM pairs: {}", pairs.len()),
        Err(err) => println!("SJM pairs: unavailable ({err})"),
    }
    println!("WJM pairs: {}", wjm.len());

    let (pairs, report) = match cfg.regime {
        Regime::Sjm => (sjm.context("building sentence-image pairs")?, None),
        Regime::Wjm => (wjm, Some(skipped)),
    };

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let manifest = cfg.pairs_manifest();
    write_manifest(&pairs, &manifest)?;
    let report_path = cfg.skip_report_path();
    fs::write(&report_path, render_skip_report(cfg.regime, pairs.len(), report.as_ref()))
        .with_context(|| format!("writing {}", report_path.display()))?;

    println!("manifest: {}", manifest.display());
    println!("skip report: {}", report_path.display());
    Ok(())
}

fn render_skip_report(regime: Regime, written: usize, report: Option<&SkipReport>) -> String {
    let mut out = String::new();
    out.push_str(&format!("regime: {regime}\n"));
    out.push_str(&format!("pairs written: {written}\n"));
    match report {
        None => {
            out.push_str("out-of-vocabulary words skipped: 0 distinct, 0 occurrences\n");
            out.push_str("images left without pairs: 0\n");
        }
        Some(report) => {
            out.push_str(&format!(
                "out-of-vocabulary words skipped: {} distinct, {} occurrences\n",
                report.oov_words.len(),
                report.total_oov_occurrences()
            ));
            for (word, count) in &report.oov_words {
                out.push_str(&format!("  {word} (x{count})\n"));
            }
            out.push_str(&format!(
                "images left without pairs: {}\n",
                report.images_without_pairs.len()
            ));
            for image in &report.images_without_pairs {
                out.push_str(&format!("  {image}\n"));
            }
        }
    }
    out
}
