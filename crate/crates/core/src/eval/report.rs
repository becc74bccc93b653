//! Machine-readable evaluation reports.
//!
//! A report is a JSONL stream: one object per (fold, task) score followed
//! by one summary object per task carrying the mean and the population
//! standard deviation across folds. A text table renderer aggregates the
//! fold lines for humans.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::cv::{mean_std, CvResult, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub task: String,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub_scores: Option<Vec<f64>>,
    pub regime: String,
    pub corpus: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub task: String,
    pub mean: f64,
    pub std: f64,
}

/// One line of a report stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportLine {
    Fold(FoldRecord),
    Summary(SummaryRecord),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub lines: Vec<ReportLine>,
}

impl EvalReport {
    /// Fold lines for every task of `result`, then one summary per task.
    pub fn from_cv(result: &CvResult, corpus: &str) -> Self {
        let mut lines = Vec::new();
        for fs in &result.fold_scores {
            for task in Task::all() {
                let (score, sub_scores) = match task {
                    Task::A => (fs.task_a, None),
                    Task::B => (fs.task_b, Some(fs.task_b_sub.to_vec())),
                    Task::C => (fs.task_c, Some(fs.task_c_sub.to_vec())),
                };
                lines.push(ReportLine::Fold(FoldRecord {
                    fold: fs.fold,
                    task: task.as_str().to_string(),
                    score,
                    sub_scores,
                    regime: result.regime.as_str().to_string(),
                    corpus: corpus.to_string(),
                    seed: result.seed,
                }));
            }
        }
        for task in Task::all() {
            let (mean, std) = result.summary(task);
            lines.push(ReportLine::Summary(SummaryRecord {
                task: task.as_str().to_string(),
                mean,
                std,
            }));
        }
        Self { lines }
    }

    /// Append another report's lines (e.g. the other regime's run).
    pub fn extend(&mut self, other: EvalReport) {
        self.lines.extend(other.lines);
    }

    pub fn write_jsonl<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        for line in &self.lines {
            serde_json::to_writer(&mut w, line)
                .map_err(|e| Error::Contract(format!("cannot encode report line: {e}")))?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: Read>(reader: R) -> Result<Self> {
        let mut lines = Vec::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(Error::Io)?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ReportLine = serde_json::from_str(&line)
                .map_err(|e| Error::parse(idx + 1, format!("bad report line: {e}")))?;
            lines.push(parsed);
        }
        Ok(Self { lines })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_jsonl(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_jsonl(File::open(path)?)
    }

    /// Mean score per task for every (regime, corpus) pair seen in the
    /// fold lines, as an aligned text table.
    pub fn render_table(&self) -> String {
        #[derive(Default)]
        struct Cell {
            scores: [Vec<f64>; 3],
        }
        let mut groups: Vec<((String, String), Cell)> = Vec::new();
        for line in &self.lines {
            let ReportLine::Fold(rec) = line else { continue };
            let key = (rec.regime.clone(), rec.corpus.clone());
            let cell = match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, c)) => c,
                None => {
                    groups.push((key, Cell::default()));
                    &mut groups.last_mut().expect("just pushed").1
                }
            };
            let slot = match rec.task.as_str() {
                "A" => 0,
                "B" => 1,
                "C" => 2,
                _ => continue,
            };
            cell.scores[slot].push(rec.score);
        }

        let mut rows = vec![[
            "Regime".to_string(),
            "Corpus".to_string(),
            "TaskA".to_string(),
            "TaskB".to_string(),
            "TaskC".to_string(),
        ]];
        for ((regime, corpus), cell) in &groups {
            let fmt = |scores: &Vec<f64>| {
                if scores.is_empty() {
                    "-".to_string()
                } else {
                    format!("{:.3}", mean_std(scores).0)
                }
            };
            rows.push([
                regime.clone(),
                corpus.clone(),
                fmt(&cell.scores[0]),
                fmt(&cell.scores[1]),
                fmt(&cell.scores[2]),
            ]);
        }

        let mut widths = [0usize; 5];
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        rows.iter()
            .map(|row| {
                row.iter()
                    .zip(widths)
                    .map(|(cell, w)| format!("{cell:<w$}"))
                    .collect::<Vec<_>>()
                    .join(" | ")
                    .trim_end()
                    .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
