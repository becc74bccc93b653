//! Corpus handling: feature tables, captions, labels, pair building,
//! fold assignment and the synthetic generator.

pub mod bundle;
pub mod captions;
pub mod features;
pub mod kfold;
pub mod labels;
pub mod pairs;
pub mod synth;

pub use bundle::DatasetBundle;
pub use captions::{load_captions, read_captions, save_captions, write_captions};
pub use captions::{CaptionRecord, PosTag};
pub use features::{load_features, read_features, save_features, write_features};
pub use features::{FeatureTable, Modality};
pub use kfold::{kfold_split, FoldAssignment};
pub use labels::{load_labels, read_labels, save_labels, write_labels};
pub use labels::{LabelSchema, LabelSet, MemeLabels, SUB_TASKS};
pub use pairs::{build_pairs_sjm, build_pairs_wjm, content_pos_filter};
pub use pairs::{PairSet, PosFilter, Regime, SkipReport};
pub use synth::{class_of_word, gen_synthetic, labels_for_class, SynthConfig, STOPWORDS};
