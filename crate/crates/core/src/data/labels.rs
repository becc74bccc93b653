//! Meme sentiment/emotion labels.
//!
//! Each meme carries three label groups:
//!
//! * task A — one overall sentiment class,
//! * task B — four binary emotion flags (humour, sarcasm, offence, motivation),
//! * task C — an intensity level per emotion.
//!
//! The file format is tab-separated with a schema header:
//!
//! ```text
//! schema=memotion-v1
//! <meme_id>\t<taskA>\t<f1,f2,f3,f4>\t<l1,l2,l3,l4>
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const SCHEMA_LINE: &str = "schema=memotion-v1";

/// Number of emotion sub-tasks in groups B and C.
pub const SUB_TASKS: usize = 4;

/// Class counts for each label group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSchema {
    /// Classes in the overall sentiment task.
    pub task_a_classes: usize,
    /// Intensity levels per emotion; the motivation sub-task is binary.
    pub task_c_cards: [usize; SUB_TASKS],
}

impl Default for LabelSchema {
    fn default() -> Self {
        Self { task_a_classes: 3, task_c_cards: [4, 4, 4, 2] }
    }
}

impl LabelSchema {
    pub fn validate(&self) -> Result<()> {
        if self.task_a_classes < 2 {
            return Err(Error::Config(
                "task A needs at least two classes".to_string(),
            ));
        }
        if self.task_c_cards.iter().any(|&c| c < 2) {
            return Err(Error::Config(
                "every task C sub-task needs at least two levels".to_string(),
            ));
        }
        Ok(())
    }
}

/// Gold labels for one meme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemeLabels {
    pub task_a: usize,
    pub task_b: [u8; SUB_TASKS],
    pub task_c: [usize; SUB_TASKS],
}

impl MemeLabels {
    fn validate(&self, schema: &LabelSchema, id: &str) -> Result<()> {
        if self.task_a >= schema.task_a_classes {
            return Err(Error::Label(format!(
                "meme {id:?}: task A class {} out of range (have {})",
                self.task_a, schema.task_a_classes
            )));
        }
        for (t, &flag) in self.task_b.iter().enumerate() {
            if flag > 1 {
                return Err(Error::Label(format!(
                    "meme {id:?}: task B flag {t} is {flag}, expected 0 or 1"
                )));
            }
        }
        for (t, &level) in self.task_c.iter().enumerate() {
            if level >= schema.task_c_cards[t] {
                return Err(Error::Label(format!(
                    "meme {id:?}: task C level {level} out of range for sub-task {t} (have {})",
                    schema.task_c_cards[t]
                )));
            }
        }
        Ok(())
    }
}

/// Labels for a set of memes, all validated against one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    schema: LabelSchema,
    by_meme: BTreeMap<String, MemeLabels>,
}

impl LabelSet {
    pub fn new(schema: LabelSchema) -> Result<Self> {
        schema.validate()?;
        Ok(Self { schema, by_meme: BTreeMap::new() })
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.by_meme.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_meme.is_empty()
    }

    pub fn insert(&mut self, meme_id: impl Into<String>, labels: MemeLabels) -> Result<()> {
        let meme_id = meme_id.into();
        if meme_id.is_empty() || meme_id.contains('\t') || meme_id.contains('\n') {
            return Err(Error::Config(format!("bad meme id {meme_id:?}")));
        }
        if self.by_meme.contains_key(&meme_id) {
            return Err(Error::Config(format!("duplicate meme id {meme_id:?}")));
        }
        labels.validate(&self.schema, &meme_id)?;
        self.by_meme.insert(meme_id, labels);
        Ok(())
    }

    pub fn get(&self, meme_id: &str) -> Option<&MemeLabels> {
        self.by_meme.get(meme_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.by_meme.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &MemeLabels)> {
        self.by_meme.iter().map(|(k, v)| (k.as_str(), v))
    }
}

fn parse_quad(field: &str, line_no: usize, what: &str) -> Result<[usize; SUB_TASKS]> {
    let parts: Vec<&str> = field.split(',').collect();
    if parts.len() != SUB_TASKS {
        return Err(Error::parse(
            line_no,
            format!("{what} needs {SUB_TASKS} comma-separated values, found {}", parts.len()),
        ));
    }
    let mut out = [0usize; SUB_TASKS];
    for (i, part) in parts.iter().enumerate() {
        out[i] = part
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad {what} value {part:?}")))?;
    }
    Ok(out)
}

pub fn read_labels<R: Read>(reader: R, schema: LabelSchema) -> Result<LabelSet> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing schema header"))?
        .map_err(Error::Io)?;
    if header.trim() != SCHEMA_LINE {
        return Err(Error::Schema(format!(
            "expected {SCHEMA_LINE:?}, found {:?}",
            header.trim()
        )));
    }
    let mut set = LabelSet::new(schema)?;
    let mut line_no = 1usize;
    for line in lines {
        line_no += 1;
        let line = line.map_err(Error::Io)?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let task_a: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad task A class {:?}", fields[1])))?;
        let flags = parse_quad(fields[2], line_no, "task B flag")?;
        let task_c = parse_quad(fields[3], line_no, "task C level")?;
        let mut task_b = [0u8; SUB_TASKS];
        for (t, &f) in flags.iter().enumerate() {
            if f > 1 {
                return Err(Error::parse(
                    line_no,
                    format!("task B flag {t} is {f}, expected 0 or 1"),
                ));
            }
            task_b[t] = f as u8;
        }
        set.insert(fields[0], MemeLabels { task_a, task_b, task_c })
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    Ok(set)
}

pub fn load_labels(path: impl AsRef<Path>, schema: LabelSchema) -> Result<LabelSet> {
    read_labels(File::open(path)?, schema)
}

pub fn write_labels<W: Write>(set: &LabelSet, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{SCHEMA_LINE}")?;
    for (id, labels) in set.iter() {
        let flags: Vec<String> = labels.task_b.iter().map(|f| f.to_string()).collect();
        let levels: Vec<String> = labels.task_c.iter().map(|l| l.to_string()).collect();
        writeln!(w, "{id}\t{}\t{}\t{}", labels.task_a, flags.join(","), levels.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_labels(set: &LabelSet, path: impl AsRef<Path>) -> Result<()> {
    write_labels(set, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> &'static str {
        "schema=memotion-v1\nm1\t2\t1,0,1,0\t3,0,2,0\nm2\t0\t0,1,0,1\t0,1,0,1\n"
    }

    #[test]
    fn parses_all_three_groups() {
        let set = read_labels(sample().as_bytes(), LabelSchema::default()).unwrap();
        assert_eq!(set.len(), 2);
        let m1 = set.get("m1").unwrap();
        assert_eq!(m1.task_a, 2);
        assert_eq!(m1.task_b, [1, 0, 1, 0]);
        assert_eq!(m1.task_c, [3, 0, 2, 0]);
    }

    #[test]
    fn wrong_schema_header_rejected() {
        let text = "schema=memotion-v2\nm1\t0\t0,0,0,0\t0,0,0,0\n";
        assert!(matches!(
            read_labels(text.as_bytes(), LabelSchema::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn out_of_range_values_name_the_line() {
        let text = "schema=memotion-v1\nm1\t3\t0,0,0,0\t0,0,0,0\n";
        match read_labels(text.as_bytes(), LabelSchema::default()) {
            Err(Error::Parse { line: 2, message }) => assert!(message.contains("task A")),
            other => panic!("unexpected {other:?}"),
        }
        // Motivation (sub-task 3) is binary: level 2 is out of range there.
        let text = "schema=memotion-v1\nm1\t0\t0,0,0,0\t0,0,0,2\n";
        assert!(read_labels(text.as_bytes(), LabelSchema::default()).is_err());
        let text = "schema=memotion-v1\nm1\t0\t0,0,2,0\t0,0,0,0\n";
        assert!(read_labels(text.as_bytes(), LabelSchema::default()).is_err());
    }

    #[test]
    fn round_trips() {
        let set = read_labels(sample().as_bytes(), LabelSchema::default()).unwrap();
        let mut buf = Vec::new();
        write_labels(&set, &mut buf).unwrap();
        let back = read_labels(buf.as_slice(), LabelSchema::default()).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn degenerate_schema_rejected() {
        let schema = LabelSchema { task_a_classes: 1, task_c_cards: [4, 4, 4, 2] };
        assert!(LabelSet::new(schema).is_err());
    }
}
