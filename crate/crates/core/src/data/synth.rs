//! Synthetic meme corpus with known class structure.
//!
//! The generator plants `classes` latent clusters. Each cluster owns an
//! image prototype and a small vocabulary of word prototypes, all drawn
//! from a standard normal. A meme of class `z` gets
//!
//! * an image vector `prototype[z] + noise * N(0, I)`,
//! * a caption of 3–6 distinct class-`z` words (tagged `NOUN`) followed by
//!   two stopwords (tagged `OTHER`) whose vectors are shared across all
//!   classes,
//! * a sentence vector that is the mean of every token's word vector —
//!   stopwords included, so sentence features are diluted relative to the
//!   individual content words.
//!
//! Labels are deterministic in `z` (see [`labels_for_class`]), so every
//! classification task is learnable from the latent class alone. With
//! `noise = 0` all images of a class are bit-identical to the prototype.
//!
//! Key conventions, relied on by downstream tests and tools: images/memes
//! are `m00000, m00001, ...` in generation order; class words are `c<z>w<j>`
//! (see [`class_of_word`]); stopword keys are plain English words.

use serde::{Deserialize, Serialize};

use crate::data::bundle::DatasetBundle;
use crate::data::captions::{CaptionRecord, PosTag};
use crate::data::features::{FeatureTable, Modality};
use crate::data::labels::{LabelSchema, LabelSet, MemeLabels, SUB_TASKS};
use crate::error::{Error, Result};
use crate::numeric::SeededRng;

pub const STOPWORDS: [&str; 6] = ["the", "a", "is", "on", "of", "with"];

/// Most content words a caption may carry; the minimum is three.
const MAX_CONTENT_WORDS: usize = 6;
const MIN_CONTENT_WORDS: usize = 3;
const STOPWORDS_PER_CAPTION: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub memes: usize,
    pub dim_img: usize,
    pub dim_txt: usize,
    pub vocab_per_class: usize,
    /// Standard deviation of the image noise around the class prototype.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 4,
            memes: 400,
            dim_img: 32,
            dim_txt: 16,
            vocab_per_class: 8,
            noise: 0.1,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "synthetic corpus needs at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.memes < self.classes {
            return Err(Error::Config(format!(
                "{} memes cannot cover {} classes",
                self.memes, self.classes
            )));
        }
        if self.dim_img == 0 || self.dim_txt == 0 {
            return Err(Error::Config("feature dimensions must be positive".to_string()));
        }
        if self.vocab_per_class < MIN_CONTENT_WORDS {
            return Err(Error::Config(format!(
                "need at least {MIN_CONTENT_WORDS} words per class, got {}",
                self.vocab_per_class
            )));
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::Config(format!("bad noise level {}", self.noise)));
        }
        Ok(())
    }
}

/// The class that owns word key `c<z>w<j>`, if it follows that convention.
pub fn class_of_word(key: &str) -> Option<usize> {
    let rest = key.strip_prefix('c')?;
    let (class, _) = rest.split_once('w')?;
    class.parse().ok()
}

/// Labels as a fixed function of the latent class, chosen so that no task
/// is constant for any `classes >= 2`:
///
/// * task A sentiment: `z % 3`,
/// * task B flag `t`: `((z + t) % classes) % 2`,
/// * task C levels 0–2: `(z + t) % 4`; level 3 mirrors flag 3 because the
///   motivation sub-task is binary.
pub fn labels_for_class(z: usize, classes: usize) -> MemeLabels {
    let mut task_b = [0u8; SUB_TASKS];
    let mut task_c = [0usize; SUB_TASKS];
    for t in 0..SUB_TASKS {
        task_b[t] = (((z + t) % classes) % 2) as u8;
        task_c[t] = (z + t) % 4;
    }
    task_c[3] = task_b[3] as usize;
    MemeLabels { task_a: z % 3, task_b, task_c }
}

pub fn gen_synthetic(cfg: &SynthConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let mut rng = SeededRng::new(cfg.seed);

    let draw = |rng: &mut SeededRng, dim: usize| -> Vec<f64> {
        (0..dim).map(|_| rng.normal(0.0, 1.0)).collect()
    };

    let image_protos: Vec<Vec<f64>> =
        (0..cfg.classes).map(|_| draw(&mut rng, cfg.dim_img)).collect();

    let mut words = FeatureTable::new(Modality::Text, cfg.dim_txt)?;
    let mut class_words: Vec<Vec<String>> = Vec::with_capacity(cfg.classes);
    for z in 0..cfg.classes {
        let mut vocab = Vec::with_capacity(cfg.vocab_per_class);
        for j in 0..cfg.vocab_per_class {
            let key = format!("c{z}w{j}");
            words.insert(&key, draw(&mut rng, cfg.dim_txt))?;
            vocab.push(key);
        }
        class_words.push(vocab);
    }
    for stop in STOPWORDS {
        words.insert(stop, draw(&mut rng, cfg.dim_txt))?;
    }

    let mut images = FeatureTable::new(Modality::Image, cfg.dim_img)?;
    let mut sentences = FeatureTable::new(Modality::Text, cfg.dim_txt)?;
    let mut captions = Vec::with_capacity(cfg.memes);
    let mut labels = LabelSet::new(LabelSchema::default())?;

    let content_choices = cfg.vocab_per_class.min(MAX_CONTENT_WORDS) - MIN_CONTENT_WORDS + 1;
    for i in 0..cfg.memes {
        let meme_id = format!("m{i:05}");
        // The first `classes` memes take classes 0, 1, ... in turn so that
        // every class is populated even for tiny corpora.
        let z = if i < cfg.classes { i } else { rng.index(cfg.classes) };

        let noise = draw(&mut rng, cfg.dim_img);
        let image: Vec<f64> = image_protos[z]
            .iter()
            .zip(&noise)
            .map(|(p, n)| p + cfg.noise * n)
            .collect();
        images.insert(&meme_id, image)?;

        let n_content = MIN_CONTENT_WORDS + rng.index(content_choices);
        let content_idx = rng.sample_indices(cfg.vocab_per_class, n_content);
        let stop_idx = rng.sample_indices(STOPWORDS.len(), STOPWORDS_PER_CAPTION);

        let mut tokens: Vec<(String, PosTag)> = content_idx
            .iter()
            .map(|&j| (class_words[z][j].clone(), PosTag::Noun))
            .collect();
        tokens.extend(stop_idx.iter().map(|&s| (STOPWORDS[s].to_string(), PosTag::Other)));

        let sentence = tokens
            .iter()
            .map(|(w, _)| w.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let mut mean = vec![0.0; cfg.dim_txt];
        for (w, _) in &tokens {
            let vec = words.get(w).expect("token vectors were just inserted");
            for (m, v) in mean.iter_mut().zip(vec) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= tokens.len() as f64;
        }
        sentences.insert_or_verify(&sentence, mean)?;

        captions.push(CaptionRecord::new(&meme_id, sentence, tokens)?);
        labels.insert(&meme_id, labels_for_class(z, cfg.classes))?;
    }

    let bundle = DatasetBundle { images, words, sentences, captions, labels };
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::pairs::{build_pairs_sjm, build_pairs_wjm, content_pos_filter};

    fn small() -> SynthConfig {
        SynthConfig { memes: 40, dim_img: 8, dim_txt: 6, ..SynthConfig::default() }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = gen_synthetic(&small()).unwrap();
        let b = gen_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(&SynthConfig { seed: 43, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shapes_and_counts_line_up() {
        let cfg = small();
        let d = gen_synthetic(&cfg).unwrap();
        assert_eq!(d.images.len(), cfg.memes);
        assert_eq!(d.captions.len(), cfg.memes);
        assert_eq!(d.labels.len(), cfg.memes);
        assert_eq!(d.words.len(), cfg.classes * cfg.vocab_per_class + STOPWORDS.len());
        assert_eq!(d.images.dim(), cfg.dim_img);
        assert_eq!(d.words.dim(), cfg.dim_txt);
    }

    #[test]
    fn captions_mix_nouns_and_stopwords() {
        let d = gen_synthetic(&small()).unwrap();
        for rec in &d.captions {
            let nouns = rec.tokens.iter().filter(|(_, t)| *t == PosTag::Noun).count();
            let others = rec.tokens.iter().filter(|(_, t)| *t == PosTag::Other).count();
            assert!((MIN_CONTENT_WORDS..=MAX_CONTENT_WORDS).contains(&nouns));
            assert_eq!(others, STOPWORDS_PER_CAPTION);
            let class = class_of_word(&rec.tokens[0].0).unwrap();
            for (w, t) in &rec.tokens {
                match t {
                    PosTag::Noun => assert_eq!(class_of_word(w), Some(class)),
                    _ => assert!(STOPWORDS.contains(&w.as_str())),
                }
            }
        }
    }

    #[test]
    fn zero_noise_collapses_images_onto_prototypes() {
        let cfg = SynthConfig { noise: 0.0, ..small() };
        let d = gen_synthetic(&cfg).unwrap();
        let mut distinct: Vec<&[f64]> = Vec::new();
        for (_, v) in d.images.iter() {
            if !distinct.contains(&v) {
                distinct.push(v);
            }
        }
        assert_eq!(distinct.len(), cfg.classes);
        // Identical images must mean identical labels.
        let ids: Vec<&str> = d.images.keys().collect();
        for a in &ids {
            for b in &ids {
                if d.images.get(a) == d.images.get(b) {
                    assert_eq!(d.labels.get(a), d.labels.get(b));
                }
            }
        }
    }

    #[test]
    fn labels_cover_every_task_value_at_four_classes() {
        let cfg = SynthConfig { memes: 200, ..small() };
        let d = gen_synthetic(&cfg).unwrap();
        let mut task_a = std::collections::BTreeSet::new();
        let mut flag_values = [std::collections::BTreeSet::new(); 0].to_vec();
        flag_values.resize_with(SUB_TASKS, std::collections::BTreeSet::new);
        let mut level_values = vec![std::collections::BTreeSet::new(); SUB_TASKS];
        for (_, l) in d.labels.iter() {
            task_a.insert(l.task_a);
            for t in 0..SUB_TASKS {
                flag_values[t].insert(l.task_b[t]);
                level_values[t].insert(l.task_c[t]);
            }
        }
        assert_eq!(task_a.len(), 3);
        for t in 0..SUB_TASKS {
            assert_eq!(flag_values[t].len(), 2, "flag {t} is constant");
        }
        for (t, &card) in LabelSchema::default().task_c_cards.iter().enumerate() {
            assert_eq!(level_values[t].len(), card, "levels of sub-task {t}");
        }
    }

    #[test]
    fn pair_builders_accept_the_corpus() {
        let d = gen_synthetic(&small()).unwrap();
        let sjm = build_pairs_sjm(&d.captions, &d.sentences).unwrap();
        assert_eq!(sjm.len(), d.captions.len());
        let (wjm, report) = build_pairs_wjm(&d.captions, &d.words, &content_pos_filter()).unwrap();
        assert!(report.is_empty());
        // Each caption has 3-6 distinct content words, so WJM out-counts SJM.
        assert!(wjm.len() >= 3 * sjm.len());
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(gen_synthetic(&SynthConfig { classes: 1, ..small() }).is_err());
        assert!(gen_synthetic(&SynthConfig { memes: 2, ..small() }).is_err());
        assert!(gen_synthetic(&SynthConfig { noise: -0.5, ..small() }).is_err());
        assert!(gen_synthetic(&SynthConfig { vocab_per_class: 2, ..small() }).is_err());
    }

    #[test]
    fn word_key_convention_parses() {
        assert_eq!(class_of_word("c3w12"), Some(3));
        assert_eq!(class_of_word("c10w0"), Some(10));
        assert_eq!(class_of_word("the"), None);
        assert_eq!(class_of_word("cw"), None);
    }
}
