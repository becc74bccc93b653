//! Text-image joint embeddings from precomputed features.
//!
//! The crate trains a two-branch projection network with a bidirectional
//! margin-based triplet loss over either sentence-image (SJM) or POS-filtered
//! word-image (WJM) pairs, feeds the learned embeddings to downstream meme
//! classifiers (a 3-class sentiment MLP and two multi-task heads), and scores
//! everything with k-fold cross-validated macro-F1.
//!
//! Modules:
//! - [`numeric`]: matrices, tape autodiff, RNG, optimizers, gradient checks.
//! - [`data`]: feature/caption/label files, pair building, folds, synthetic data.
//! - [`je`]: the joint-embedding model, triplet loss and training loop.
//! - [`heads`]: downstream classifiers on frozen joint embeddings.
//! - [`eval`]: macro-F1, cross-validation, regime comparison, analogy queries.

mod binio;

pub mod data;
pub mod error;
pub mod eval;
pub mod heads;
pub mod je;
pub mod numeric;

pub use error::{Error, Result};
