//! Precomputed feature vectors, keyed by id.
//!
//! A `FeatureTable` holds the output of some external backbone (an image
//! encoder or a word/sentence encoder); this crate never computes these
//! vectors itself. The on-disk format is line-oriented UTF-8:
//!
//! ```text
//! dim=<D> modality=<image|text> count=<N>
//! <key>\t<v1> <v2> ... <vD>
//! ```
//!
//! Keys may not contain tabs or newlines. Values are decimal floats written
//! with Rust's shortest round-trip formatting, so save/load is bit-exact.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Image => "image",
            Modality::Text => "text",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "image" => Some(Modality::Image),
            "text" => Some(Modality::Text),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fixed-dimension feature vectors with unique, non-empty keys.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    modality: Modality,
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn new(modality: Modality, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("feature dimension must be positive".to_string()));
        }
        Ok(Self { modality, dim, entries: BTreeMap::new() })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let key = key.into();
        Self::validate_key(&key)?;
        if self.entries.contains_key(&key) {
            return Err(Error::Config(format!("duplicate feature key {key:?}")));
        }
        self.validate_vector(&key, &vector)?;
        self.entries.insert(key, vector);
        Ok(())
    }

    /// Insert, or verify that an existing entry carries the identical vector.
    pub fn insert_or_verify(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let key = key.into();
        if let Some(existing) = self.entries.get(&key) {
            if existing != &vector {
                return Err(Error::Config(format!(
                    "conflicting vectors for feature key {key:?}"
                )));
            }
            return Ok(());
        }
        self.insert(key, vector)
    }

    fn validate_key(key: &str) -> Result<()> {
        if key.is_empty() {
            return Err(Error::Config("empty feature key".to_string()));
        }
        if key.contains('\t') || key.contains('\n') {
            return Err(Error::Config(format!(
                "feature key {key:?} contains a tab or newline"
            )));
        }
        Ok(())
    }

    fn validate_vector(&self, key: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "feature {key:?} has {} values, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite value in feature {key:?}")));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Stack the vectors for `keys` into a matrix, one row per key in order.
    pub fn batch<S: AsRef<str>>(&self, keys: &[S]) -> Result<Matrix> {
        if keys.is_empty() {
            return Err(Error::Config("cannot batch zero keys".to_string()));
        }
        let mut data = Vec::with_capacity(keys.len() * self.dim);
        for key in keys {
            let key = key.as_ref();
            let row = self.get(key).ok_or_else(|| Error::UnresolvedKey {
                key: key.to_string(),
                context: format!("not in the {} feature table", self.modality),
            })?;
            data.extend_from_slice(row);
        }
        Matrix::new(keys.len(), self.dim, data)
    }
}

/// Parse a feature file, checking the header against `expected` modality.
pub fn read_features<R: Read>(reader: R, expected: Modality) -> Result<FeatureTable> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header line"))?
        .map_err(Error::Io)?;
    let (dim, modality, count) = parse_header(&header)?;
    if modality != expected {
        return Err(Error::parse(
            1,
            format!("expected modality {expected}, file declares {modality}"),
        ));
    }
    let mut table = FeatureTable::new(modality, dim)
        .map_err(|e| Error::parse(1, e.to_string()))?;
    let mut line_no = 1usize;
    for line in lines {
        line_no += 1;
        let line = line.map_err(Error::Io)?;
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "expected <key>\\t<values>"))?;
        let values = rest
            .split_whitespace()
            .map(|tok| {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad float {tok:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(line_no, format!("non-finite value {tok:?}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                line_no,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        table
            .insert(key, values)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    if table.len() != count {
        return Err(Error::parse(
            line_no,
            format!("header declares count={count} but file has {} entries", table.len()),
        ));
    }
    Ok(table)
}

fn parse_header(header: &str) -> Result<(usize, Modality, usize)> {
    let mut dim = None;
    let mut modality = None;
    let mut count = None;
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("bad header field {field:?}")))?;
        match k {
            "dim" => {
                dim = Some(v.parse::<usize>().map_err(|_| {
                    Error::parse(1, format!("bad dim {v:?}"))
                })?)
            }
            "modality" => {
                modality = Some(Modality::parse(v).ok_or_else(|| {
                    Error::parse(1, format!("unknown modality {v:?}"))
                })?)
            }
            "count" => {
                count = Some(v.parse::<usize>().map_err(|_| {
                    Error::parse(1, format!("bad count {v:?}"))
                })?)
            }
            other => return Err(Error::parse(1, format!("unknown header key {other:?}"))),
        }
    }
    match (dim, modality, count) {
        (Some(d), Some(m), Some(c)) => Ok((d, m, c)),
        _ => Err(Error::parse(1, "header must carry dim=, modality= and count=")),
    }
}

pub fn load_features(path: impl AsRef<Path>, expected: Modality) -> Result<FeatureTable> {
    read_features(File::open(path)?, expected)
}

pub fn write_features<W: Write>(table: &FeatureTable, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(
        w,
        "dim={} modality={} count={}",
        table.dim(),
        table.modality(),
        table.len()
    )?;
    for (key, vector) in table.iter() {
        write!(w, "{key}\t")?;
        for (i, v) in vector.iter().enumerate() {
            if i > 0 {
                write!(w, " ")?;
            }
            write!(w, "{v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_features(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    write_features(table, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_a_small_file() {
        let text = "dim=4 modality=image count=2\na\t1 2 3 4\nb\t0.5 -1 2.25 0\n";
        let table = read_features(text.as_bytes(), Modality::Image).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.dim(), 4);
        assert_eq!(table.get("b").unwrap(), &[0.5, -1.0, 2.25, 0.0]);
    }

    #[test]
    fn wrong_arity_names_the_line() {
        let text = "dim=4 modality=image count=1\na\t1 2 3\n";
        let err = read_features(text.as_bytes(), Modality::Image).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("expected 4"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn nan_value_rejected() {
        let text = "dim=2 modality=text count=1\na\t1 NaN\n";
        assert!(matches!(
            read_features(text.as_bytes(), Modality::Text),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = "dim=1 modality=text count=2\na\t1\na\t2\n";
        let err = read_features(text.as_bytes(), Modality::Text).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn modality_mismatch_rejected() {
        let text = "dim=1 modality=image count=0\n";
        assert!(read_features(text.as_bytes(), Modality::Text).is_err());
    }

    #[test]
    fn count_mismatch_rejected() {
        let text = "dim=1 modality=text count=3\na\t1\n";
        assert!(read_features(text.as_bytes(), Modality::Text).is_err());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut table = FeatureTable::new(Modality::Text, 3).unwrap();
        table.insert("k1", vec![0.1, -2.5e-7, 3.0]).unwrap();
        table.insert("k2", vec![1.0 / 3.0, f64::MIN_POSITIVE, -0.0]).unwrap();
        let mut buf = Vec::new();
        write_features(&table, &mut buf).unwrap();
        let back = read_features(buf.as_slice(), Modality::Text).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn batch_rows_follow_key_order() {
        let mut table = FeatureTable::new(Modality::Text, 2).unwrap();
        table.insert("a", vec![1.0, 2.0]).unwrap();
        table.insert("b", vec![3.0, 4.0]).unwrap();
        let m = table.batch(&["b", "a"]).unwrap();
        assert_eq!(m.row(0), &[3.0, 4.0]);
        assert_eq!(m.row(1), &[1.0, 2.0]);
        assert!(matches!(
            table.batch(&["missing"]),
            Err(Error::UnresolvedKey { .. })
        ));
    }
}
