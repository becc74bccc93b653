//! One module per subcommand, plus the file plumbing they share.

pub mod analogy;
pub mod build_pairs;
pub mod eval;
pub mod gen_synth;
pub mod train_heads;
pub mod train_je;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use jemb_core::data::{
    load_captions, load_features, load_labels, DatasetBundle, LabelSchema, Modality, PairSet,
    Regime,
};
use jemb_core::Error;

use crate::config::{require_files, RunConfig};

/// Load and cross-check the five corpus files named by the config.
pub(crate) fn load_bundle(cfg: &RunConfig) -> Result<DatasetBundle> {
    let p = &cfg.paths;
    require_files(&[
        ("image features", &p.images),
        ("word features", &p.words),
        ("sentence features", &p.sentences),
        ("captions", &p.captions),
        ("labels", &p.labels),
    ])?;
    let bundle = DatasetBundle {
        images: load_features(&p.images, Modality::Image)
            .with_context(|| format!("loading {}", p.images.display()))?,
        words: load_features(&p.words, Modality::Text)
            .with_context(|| format!("loading {}", p.words.display()))?,
        sentences: load_features(&p.sentences, Modality::Text)
            .with_context(|| format!("loading {}", p.sentences.display()))?,
        captions: load_captions(&p.captions)
            .with_context(|| format!("loading {}", p.captions.display()))?,
        labels: load_labels(&p.labels, LabelSchema::default())
            .with_context(|| format!("loading {}", p.labels.display()))?,
    };
    bundle.validate().context("cross-checking the corpus files")?;
    Ok(bundle)
}

/// Write the pair manifest: one `<image_id>\t<text_key>` line per pair.
pub(crate) fn write_manifest(pairs: &PairSet, path: &Path) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("creating manifest {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for (img, txt) in pairs.iter() {
        writeln!(w, "{img}\t{txt}")?;
    }
    w.flush()?;
    Ok(())
}

/// Read a manifest back as a pair set under the configured regime.
pub(crate) fn read_manifest(path: &Path, regime: Regime) -> Result<PairSet> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (img, txt) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse {
                line: no + 1,
                message: format!("expected <image_id>\\t<text_key>, got {line:?}"),
            })
            .with_context(|| format!("manifest {}", path.display()))?;
        pairs.push((img.to_string(), txt.to_string()));
    }
    PairSet::new(regime, pairs)
        .with_context(|| format!("manifest {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let pairs = PairSet::new(
            Regime::Wjm,
            vec![
                ("m1".to_string(), "cat".to_string()),
                ("m1".to_string(), "hat".to_string()),
                ("m2".to_string(), "cat".to_string()),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.tsv");
        write_manifest(&pairs, &path).unwrap();
        let back = read_manifest(&path, Regime::Wjm).unwrap();
        assert_eq!(back, pairs);
    }

    #[test]
    fn malformed_manifest_line_is_a_parse_error_with_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("malformed.tsv");
        fs::write(&path, "m1\tcat\nno-tab-here\n").unwrap();
        let err = read_manifest(&path, Regime::Wjm).unwrap_err();
        let root = err.downcast_ref::<Error>().expect("core error");
        assert!(
            matches!(root, Error::Parse { line: 2, .. }),
            "unexpected error: {root}"
        );
    }

    #[test]
    fn empty_manifest_is_an_empty_pair_set() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.tsv");
        fs::write(&path, "").unwrap();
        let pairs = read_manifest(&path, Regime::Sjm).unwrap();
        assert!(pairs.is_empty());
    }
}
