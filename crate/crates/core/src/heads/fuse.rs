//! Classifier inputs: concatenated image and sentence embeddings.
//!
//! Regardless of the regime the joint embedding was trained under, the
//! classifiers see each meme as `[image embedding ; sentence embedding]`
//! — word-level training changes the text branch weights, not what gets
//! projected downstream.

use std::collections::BTreeMap;

use crate::data::{CaptionRecord, FeatureTable};
use crate::error::{Error, Result};
use crate::je::JointModel;
use crate::numeric::Matrix;

/// Map each meme to the sentence of its first caption, in caption order.
pub fn first_sentences(captions: &[CaptionRecord]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for rec in captions {
        map.entry(rec.image_id.clone()).or_insert_with(|| rec.sentence.clone());
    }
    map
}

/// Fused classifier rows for `ids`, in order: `2 * joint_dim` columns.
pub fn fuse<S: AsRef<str>>(
    model: &JointModel,
    images: &FeatureTable,
    sentences: &FeatureTable,
    sentence_of: &BTreeMap<String, String>,
    ids: &[S],
) -> Result<Matrix> {
    let sentence_keys: Vec<&str> = ids
        .iter()
        .map(|id| {
            let id = id.as_ref();
            sentence_of
                .get(id)
                .map(String::as_str)
                .ok_or_else(|| Error::UnresolvedKey {
                    key: id.to_string(),
                    context: "meme has no caption to embed".to_string(),
                })
        })
        .collect::<Result<_>>()?;
    let img_emb = model.embed_images(images, ids)?;
    let txt_emb = model.embed_texts(sentences, &sentence_keys)?;
    img_emb.hcat(&txt_emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Modality, PosTag};
    use crate::je::JeConfig;
    use crate::numeric::SeededRng;

    #[test]
    fn fused_rows_are_two_unit_blocks() {
        // Wide enough that no ReLU row dies at init (a dead row would make the
        // pre-normalization output exactly the zero bias vector).
        let cfg = JeConfig { hidden: 32, joint_dim: 3, margin: 0.2 };
        let model = JointModel::init(4, 4, cfg, &mut SeededRng::new(8)).unwrap();
        let mut images = FeatureTable::new(Modality::Image, 4).unwrap();
        let mut sentences = FeatureTable::new(Modality::Text, 4).unwrap();
        images.insert("m1", vec![1.0, 0.0, 2.0, -1.0]).unwrap();
        images.insert("m2", vec![0.0, 1.0, -2.0, 0.5]).unwrap();
        sentences.insert("hello there", vec![0.5, 0.5, 0.0, 1.0]).unwrap();
        let captions = vec![
            CaptionRecord::new("m1", "hello there", vec![("hello".into(), PosTag::Other), ("there".into(), PosTag::Other)]).unwrap(),
            CaptionRecord::new("m2", "hello there", vec![("hello".into(), PosTag::Other), ("there".into(), PosTag::Other)]).unwrap(),
        ];
        let sentence_of = first_sentences(&captions);
        let fused = fuse(&model, &images, &sentences, &sentence_of, &["m1", "m2"]).unwrap();
        assert_eq!(fused.shape(), (2, 6));
        for r in 0..2 {
            let row = fused.row(r);
            let img_norm: f64 = row[..3].iter().map(|v| v * v).sum::<f64>();
            let txt_norm: f64 = row[3..].iter().map(|v| v * v).sum::<f64>();
            assert!((img_norm - 1.0).abs() < 1e-12);
            assert!((txt_norm - 1.0).abs() < 1e-12);
        }
        // Same sentence for both memes: identical text halves.
        assert_eq!(&fused.row(0)[3..], &fused.row(1)[3..]);
    }

    #[test]
    fn first_caption_wins() {
        let captions = vec![
            CaptionRecord::new("m1", "first one", vec![("first".into(), PosTag::Adj), ("one".into(), PosTag::Noun)]).unwrap(),
            CaptionRecord::new("m1", "second one", vec![("second".into(), PosTag::Adj), ("one".into(), PosTag::Noun)]).unwrap(),
        ];
        let map = first_sentences(&captions);
        assert_eq!(map.get("m1").map(String::as_str), Some("first one"));
    }

    #[test]
    fn missing_caption_is_an_unresolved_key() {
        let cfg = JeConfig { hidden: 4, joint_dim: 2, margin: 0.2 };
        let model = JointModel::init(3, 3, cfg, &mut SeededRng::new(1)).unwrap();
        let mut images = FeatureTable::new(Modality::Image, 3).unwrap();
        images.insert("m1", vec![1.0, 2.0, 3.0]).unwrap();
        let sentences = FeatureTable::new(Modality::Text, 3).unwrap();
        let err = fuse(&model, &images, &sentences, &BTreeMap::new(), &["m1"]);
        assert!(matches!(err, Err(Error::UnresolvedKey { .. })));
    }
}
