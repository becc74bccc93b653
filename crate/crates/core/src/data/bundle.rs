//! A complete on-disk dataset: features, captions and labels together.

use std::path::Path;

use crate::data::captions::{load_captions, save_captions, CaptionRecord};
use crate::data::features::{load_features, save_features, FeatureTable, Modality};
use crate::data::labels::{load_labels, save_labels, LabelSchema, LabelSet};
use crate::error::{Error, Result};

pub const IMAGES_FILE: &str = "images.feat";
pub const WORDS_FILE: &str = "words.feat";
pub const SENTENCES_FILE: &str = "sentences.feat";
pub const CAPTIONS_FILE: &str = "captions.tsv";
pub const LABELS_FILE: &str = "labels.tsv";

/// Everything needed to train and evaluate on one corpus. Image ids double
/// as meme ids, so every label id must name an image.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub images: FeatureTable,
    pub words: FeatureTable,
    pub sentences: FeatureTable,
    pub captions: Vec<CaptionRecord>,
    pub labels: LabelSet,
}

impl DatasetBundle {
    /// Cross-file consistency: captions point at known images, labels point
    /// at known images, and both text tables share one dimension.
    pub fn validate(&self) -> Result<()> {
        if self.words.dim() != self.sentences.dim() {
            return Err(Error::Dimension(format!(
                "word features are {}-dim but sentence features are {}-dim",
                self.words.dim(),
                self.sentences.dim()
            )));
        }
        for rec in &self.captions {
            if !self.images.contains(&rec.image_id) {
                return Err(Error::UnresolvedKey {
                    key: rec.image_id.clone(),
                    context: "caption references an image with no feature vector".to_string(),
                });
            }
        }
        for id in self.labels.ids() {
            if !self.images.contains(id) {
                return Err(Error::UnresolvedKey {
                    key: id.to_string(),
                    context: "label references an image with no feature vector".to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn save_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        save_features(&self.images, dir.join(IMAGES_FILE))?;
        save_features(&self.words, dir.join(WORDS_FILE))?;
        save_features(&self.sentences, dir.join(SENTENCES_FILE))?;
        save_captions(&self.captions, dir.join(CAPTIONS_FILE))?;
        save_labels(&self.labels, dir.join(LABELS_FILE))?;
        Ok(())
    }

    pub fn load_from_dir(dir: impl AsRef<Path>, schema: LabelSchema) -> Result<Self> {
        let dir = dir.as_ref();
        let bundle = Self {
            images: load_features(dir.join(IMAGES_FILE), Modality::Image)?,
            words: load_features(dir.join(WORDS_FILE), Modality::Text)?,
            sentences: load_features(dir.join(SENTENCES_FILE), Modality::Text)?,
            captions: load_captions(dir.join(CAPTIONS_FILE))?,
            labels: load_labels(dir.join(LABELS_FILE), schema)?,
        };
        bundle.validate()?;
        Ok(bundle)
    }
}
