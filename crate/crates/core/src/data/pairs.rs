//! Building (image, text) training pairs from captions.
//!
//! Two regimes:
//!
//! * **SJM** (sentence–image): one pair per caption, the text key being the
//!   sentence itself. Every sentence must already have a feature vector.
//! * **WJM** (word–image): one pair per distinct content word per image,
//!   where "content" means the token's POS tag is in the filter (nouns,
//!   verbs, adjectives and adverbs by default). Words are lowercased before
//!   lookup and de-duplication; words missing from the word feature table
//!   are skipped and reported rather than treated as errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::captions::{CaptionRecord, PosTag};
use crate::data::features::FeatureTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    Sjm,
    Wjm,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Sjm => "SJM",
            Regime::Wjm => "WJM",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SJM" => Ok(Regime::Sjm),
            "WJM" => Ok(Regime::Wjm),
            other => Err(Error::Config(format!("unknown regime {other:?}"))),
        }
    }
}

/// POS categories whose tokens count as content words.
pub type PosFilter = BTreeSet<PosTag>;

/// The default filter: nouns, verbs, adjectives and adverbs.
pub fn content_pos_filter() -> PosFilter {
    PosTag::content_tags().into_iter().collect()
}

/// A set of (image key, text key) pairs under one regime, duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    regime: Regime,
    pairs: Vec<(String, String)>,
}

impl PairSet {
    pub fn new(regime: Regime, pairs: Vec<(String, String)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (img, txt) in &pairs {
            if !seen.insert((img.as_str(), txt.as_str())) {
                return Err(Error::Contract(format!(
                    "duplicate pair ({img:?}, {txt:?})"
                )));
            }
        }
        Ok(Self { regime, pairs })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(i, t)| (i.as_str(), t.as_str()))
    }

    /// Keep only pairs whose image key satisfies `keep`. Used to carve a
    /// cross-validation fold out of a full pair set.
    pub fn filter_images<F: Fn(&str) -> bool>(&self, keep: F) -> PairSet {
        let pairs = self
            .pairs
            .iter()
            .filter(|(img, _)| keep(img))
            .cloned()
            .collect();
        PairSet { regime: self.regime, pairs }
    }

    /// Concatenate pair sets from different corpora under the same regime,
    /// dropping any pair that appears in both.
    pub fn merge(&self, other: &PairSet) -> Result<PairSet> {
        if self.regime != other.regime {
            return Err(Error::Config(format!(
                "cannot merge {} pairs with {} pairs",
                self.regime, other.regime
            )));
        }
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        let mut pairs = Vec::with_capacity(self.pairs.len() + other.pairs.len());
        for pair in self.pairs.iter().chain(other.pairs.iter()) {
            if seen.insert(pair.clone()) {
                pairs.push(pair.clone());
            }
        }
        Ok(PairSet { regime: self.regime, pairs })
    }
}

/// What the WJM builder left out: unknown words (with occurrence counts)
/// and images that ended up contributing no pairs at all.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkipReport {
    pub oov_words: BTreeMap<String, usize>,
    pub images_without_pairs: Vec<String>,
}

impl SkipReport {
    pub fn total_oov_occurrences(&self) -> usize {
        self.oov_words.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.oov_words.is_empty() && self.images_without_pairs.is_empty()
    }
}

/// One pair per caption; the sentence string is the text key.
pub fn build_pairs_sjm(
    captions: &[CaptionRecord],
    sentence_features: &FeatureTable,
) -> Result<PairSet> {
    let mut pairs = Vec::with_capacity(captions.len());
    for rec in captions {
        if rec.sentence.is_empty() {
            return Err(Error::Contract(format!(
                "caption for {:?} has an empty sentence; cannot form a sentence pair",
                rec.image_id
            )));
        }
        if !sentence_features.contains(&rec.sentence) {
            return Err(Error::UnresolvedKey {
                key: rec.sentence.clone(),
                context: "sentence has no feature vector".to_string(),
            });
        }
        pairs.push((rec.image_id.clone(), rec.sentence.clone()));
    }
    PairSet::new(Regime::Sjm, pairs)
}

/// One pair per distinct (image, lowercased content word). Unknown words go
/// into the skip report instead of failing the build.
pub fn build_pairs_wjm(
    captions: &[CaptionRecord],
    word_features: &FeatureTable,
    filter: &PosFilter,
) -> Result<(PairSet, SkipReport)> {
    let mut pairs = Vec::new();
    let mut report = SkipReport::default();
    let mut seen_per_image: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut image_order: Vec<&str> = Vec::new();
    let mut images_with_pairs: BTreeSet<&str> = BTreeSet::new();

    for rec in captions {
        if !seen_per_image.contains_key(rec.image_id.as_str()) {
            image_order.push(&rec.image_id);
        }
        let seen = seen_per_image.entry(&rec.image_id).or_default();
        for (tok, tag) in &rec.tokens {
            if !filter.contains(tag) {
                continue;
            }
            let word = tok.to_lowercase();
            if !word_features.contains(&word) {
                *report.oov_words.entry(word).or_insert(0) += 1;
                continue;
            }
            if seen.insert(word.clone()) {
                images_with_pairs.insert(&rec.image_id);
                pairs.push((rec.image_id.clone(), word));
            }
        }
    }

    report.images_without_pairs = image_order
        .into_iter()
        .filter(|img| !images_with_pairs.contains(img))
        .map(str::to_string)
        .collect();
    let pairs = PairSet::new(Regime::Wjm, pairs)?;
    Ok((pairs, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::features::Modality;

    fn word_table(words: &[&str]) -> FeatureTable {
        let mut t = FeatureTable::new(Modality::Text, 2).unwrap();
        for (i, w) in words.iter().enumerate() {
            t.insert(*w, vec![i as f64, 1.0]).unwrap();
        }
        t
    }

    fn caption(img: &str, toks: &[(&str, PosTag)]) -> CaptionRecord {
        let sentence = toks.iter().map(|(t, _)| *t).collect::<Vec<_>>().join(" ");
        let tokens = toks.iter().map(|(t, g)| (t.to_string(), *g)).collect();
        CaptionRecord::new(img, sentence, tokens).unwrap()
    }

    #[test]
    fn sjm_uses_sentence_as_key() {
        let rec = caption("img1", &[("funny", PosTag::Adj), ("cat", PosTag::Noun)]);
        let mut sentences = FeatureTable::new(Modality::Text, 2).unwrap();
        sentences.insert("funny cat", vec![0.0, 1.0]).unwrap();
        let pairs = build_pairs_sjm(&[rec], &sentences).unwrap();
        assert_eq!(pairs.pairs(), &[("img1".to_string(), "funny cat".to_string())]);
    }

    #[test]
    fn sjm_missing_sentence_vector_is_an_error() {
        let rec = caption("img1", &[("cat", PosTag::Noun)]);
        let sentences = FeatureTable::new(Modality::Text, 2).unwrap();
        assert!(matches!(
            build_pairs_sjm(&[rec], &sentences),
            Err(Error::UnresolvedKey { .. })
        ));
    }

    #[test]
    fn wjm_filters_lowercases_and_dedups() {
        // "Dog" appears twice with different case plus once as a second
        // caption of the same image; only one (img1, dog) pair survives.
        let recs = vec![
            caption(
                "img1",
                &[("Dog", PosTag::Noun), ("runs", PosTag::Verb), ("the", PosTag::Other)],
            ),
            caption("img1", &[("dog", PosTag::Noun), ("fast", PosTag::Adv)]),
            caption("img2", &[("dog", PosTag::Noun)]),
        ];
        let words = word_table(&["dog", "runs", "fast"]);
        let (pairs, report) = build_pairs_wjm(&recs, &words, &content_pos_filter()).unwrap();
        let expect = vec![
            ("img1".to_string(), "dog".to_string()),
            ("img1".to_string(), "runs".to_string()),
            ("img1".to_string(), "fast".to_string()),
            ("img2".to_string(), "dog".to_string()),
        ];
        assert_eq!(pairs.pairs(), expect.as_slice());
        assert!(report.is_empty());
    }

    #[test]
    fn wjm_reports_oov_and_empty_images() {
        let recs = vec![
            caption("img1", &[("zorblax", PosTag::Noun), ("zorblax", PosTag::Noun)]),
            caption("img2", &[("the", PosTag::Other)]),
            caption("img3", &[("dog", PosTag::Noun)]),
        ];
        let words = word_table(&["dog"]);
        let (pairs, report) = build_pairs_wjm(&recs, &words, &content_pos_filter()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(report.oov_words.get("zorblax"), Some(&2));
        assert_eq!(report.images_without_pairs, vec!["img1".to_string(), "img2".to_string()]);
    }

    #[test]
    fn duplicate_pairs_rejected() {
        let pairs = vec![
            ("a".to_string(), "x".to_string()),
            ("a".to_string(), "x".to_string()),
        ];
        assert!(matches!(PairSet::new(Regime::Sjm, pairs), Err(Error::Contract(_))));
    }

    #[test]
    fn merge_drops_cross_corpus_duplicates() {
        let a = PairSet::new(
            Regime::Wjm,
            vec![("i1".into(), "dog".into()), ("i2".into(), "cat".into())],
        )
        .unwrap();
        let b = PairSet::new(
            Regime::Wjm,
            vec![("i2".into(), "cat".into()), ("i3".into(), "owl".into())],
        )
        .unwrap();
        let merged = a.merge(&b).unwrap();
        assert_eq!(merged.len(), 3);
        let sjm = PairSet::new(Regime::Sjm, vec![]).unwrap();
        assert!(a.merge(&sjm).is_err());
    }

    #[test]
    fn filter_images_keeps_regime() {
        let a = PairSet::new(
            Regime::Wjm,
            vec![("i1".into(), "dog".into()), ("i2".into(), "cat".into())],
        )
        .unwrap();
        let kept = a.filter_images(|img| img == "i2");
        assert_eq!(kept.regime(), Regime::Wjm);
        assert_eq!(kept.pairs(), &[("i2".to_string(), "cat".to_string())]);
    }
}
