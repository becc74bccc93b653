//! `jemb eval`: cross-validated macro-F1 over the configured corpus.
//!
//! Writes the per-fold report as JSON lines and the rendered summary table
//! next to it, and prints the table.

use std::fs;

use anyhow::{Context, Result};

use jemb_core::eval::{cross_validate, EvalReport};

use crate::commands::load_bundle;
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.pipeline_spec()?;
    let bundle = load_bundle(cfg)?;
    let result = cross_validate(&bundle, &spec)
        .with_context(|| format!("{}-fold cross-validation ({})", spec.folds, spec.regime))?;
    let report = EvalReport::from_cv(&result, &cfg.corpus);

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let jsonl_path = cfg.out_dir.join("report.jsonl");
    let table_path = cfg.out_dir.join("report.txt");
    report.save(&jsonl_path).with_context(|| format!("writing {}", jsonl_path.display()))?;
    let table = report.render_table();
    fs::write(&table_path, format!("{table}\n"))
        .with_context(|| format!("writing {}", table_path.display()))?;

    println!("{table}");
    println!("report: {}", jsonl_path.display());
    println!("table: {}", table_path.display());
    Ok(())
}
