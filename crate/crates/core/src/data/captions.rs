//! Caption records: one sentence per line with POS-tagged tokens.
//!
//! Format, tab-separated:
//!
//! ```text
//! <image_id>\t<sentence>\t<tok1>/<POS1> <tok2>/<POS2> ...
//! ```
//!
//! An image may appear on several lines (multiple captions per image). POS
//! tags come from whatever tagger produced the file; only the five coarse
//! categories below are distinguished.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Coarse part-of-speech category. Anything that is not a noun, verb,
/// adjective or adverb collapses to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl PosTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "NOUN" => Some(PosTag::Noun),
            "VERB" => Some(PosTag::Verb),
            "ADJ" => Some(PosTag::Adj),
            "ADV" => Some(PosTag::Adv),
            "OTHER" => Some(PosTag::Other),
            _ => None,
        }
    }

    /// The content-word categories used by the word–image pairing regime.
    pub fn content_tags() -> [PosTag; 4] {
        [PosTag::Noun, PosTag::Verb, PosTag::Adj, PosTag::Adv]
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionRecord {
    pub image_id: String,
    pub sentence: String,
    pub tokens: Vec<(String, PosTag)>,
}

impl CaptionRecord {
    pub fn new(
        image_id: impl Into<String>,
        sentence: impl Into<String>,
        tokens: Vec<(String, PosTag)>,
    ) -> Result<Self> {
        let image_id = image_id.into();
        let sentence = sentence.into();
        if image_id.is_empty() {
            return Err(Error::Config("caption with empty image id".to_string()));
        }
        if sentence.is_empty() != tokens.is_empty() {
            return Err(Error::Config(format!(
                "caption for {image_id:?}: sentence and token list must be empty together"
            )));
        }
        for field in [&image_id, &sentence] {
            if field.contains('\t') || field.contains('\n') {
                return Err(Error::Config(format!(
                    "caption for {image_id:?} contains a tab or newline"
                )));
            }
        }
        for (tok, _) in &tokens {
            if tok.is_empty() || tok.contains(char::is_whitespace) || tok.contains('/') {
                return Err(Error::Config(format!(
                    "caption for {image_id:?}: bad token {tok:?}"
                )));
            }
        }
        Ok(Self { image_id, sentence, tokens })
    }
}

pub fn read_captions<R: Read>(reader: R) -> Result<Vec<CaptionRecord>> {
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(Error::Io)?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let image_id = fields.next().unwrap_or_default();
        let sentence = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "expected <image_id>\\t<sentence>\\t<tokens>"))?;
        let token_field = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing token field"))?;
        let mut tokens = Vec::new();
        for chunk in token_field.split_whitespace() {
            let (tok, tag) = chunk
                .rsplit_once('/')
                .ok_or_else(|| Error::parse(line_no, format!("token {chunk:?} lacks /POS")))?;
            let tag = PosTag::parse(tag)
                .ok_or_else(|| Error::parse(line_no, format!("unknown POS tag {tag:?}")))?;
            tokens.push((tok.to_string(), tag));
        }
        records.push(
            CaptionRecord::new(image_id, sentence, tokens)
                .map_err(|e| Error::parse(line_no, e.to_string()))?,
        );
    }
    Ok(records)
}

pub fn load_captions(path: impl AsRef<Path>) -> Result<Vec<CaptionRecord>> {
    read_captions(File::open(path)?)
}

pub fn write_captions<W: Write>(records: &[CaptionRecord], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for rec in records {
        write!(w, "{}\t{}\t", rec.image_id, rec.sentence)?;
        for (i, (tok, tag)) in rec.tokens.iter().enumerate() {
            if i > 0 {
                write!(w, " ")?;
            }
            write!(w, "{tok}/{tag}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_captions(records: &[CaptionRecord], path: impl AsRef<Path>) -> Result<()> {
    write_captions(records, File::create(path)?)
}
