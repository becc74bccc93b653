//! `jemb`: train and evaluate text-image joint embeddings from the shell.
//!
//! Every run is driven by an optional TOML config plus three global flags
//! (`--config`, `--seed`, `--out`); flags override file values. Commands
//! compose into a pipeline:
//!
//! ```sh
//! jemb --seed 42 --out data gen-synth        # synthetic corpus to play with
//! jemb --config run.toml build-pairs         # captions -> pair manifest
//! jemb --config run.toml train-je            # manifest -> je.ckpt + loss curve
//! jemb --config run.toml train-heads         # je.ckpt  -> heads.ckpt
//! jemb --config run.toml eval                # cross-validated macro-F1 report
//! jemb --config run.toml analogy girl boy woman
//! ```
//!
//! Exit code is 0 exactly when the command succeeded; errors go to stderr
//! with file or key context.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "jemb", version, about = "Text-image joint embeddings: train, evaluate, query")]
struct Cli {
    /// TOML run configuration; omitted means built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the config value. Some seed is mandatory.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts; overrides the config value.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the (image, text) pair manifest for the configured regime.
    BuildPairs,
    /// Train the joint embedding on the pair manifest.
    TrainJe {
        /// Fine-tune from an existing checkpoint instead of a fresh
        /// initialization; architecture and margin come from the checkpoint.
        #[arg(long, value_name = "CHECKPOINT")]
        init_from: Option<PathBuf>,
    },
    /// Train the three classifier heads on the frozen joint embedding.
    TrainHeads,
    /// Cross-validated macro-F1 evaluation; writes JSONL and a table.
    Eval,
    /// Solve "A is to B as C is to ?" over the projected vocabulary.
    Analogy {
        a: String,
        b: String,
        c: String,
        /// Joint-embedding checkpoint (default: the configured path).
        #[arg(long, value_name = "CHECKPOINT")]
        checkpoint: Option<PathBuf>,
        /// Word feature table to project (default: the configured path).
        #[arg(long, value_name = "PATH")]
        words: Option<PathBuf>,
    },
    /// Generate a synthetic corpus into the output directory.
    GenSynth,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(cli.seed, cli.out);

    match &cli.command {
        Command::BuildPairs => commands::build_pairs::run(&cfg),
        Command::TrainJe { init_from } => commands::train_je::run(&cfg, init_from.as_deref()),
        Command::TrainHeads => commands::train_heads::run(&cfg),
        Command::Eval => commands::eval::run(&cfg),
        Command::Analogy { a, b, c, checkpoint, words } => {
            commands::analogy::run(&cfg, checkpoint.as_deref(), words.as_deref(), a, b, c)
        }
        Command::GenSynth => commands::gen_synth::run(&cfg),
    }
}
