//! Macro-averaged F1 and the task-level scores built on it.
//!
//! Per class: precision `tp/(tp+fp)`, recall `tp/(tp+fn)`,
//! `F1 = 2PR/(P+R)`, with every 0/0 collapsing to 0. The macro average
//! runs over *all* `classes` classes, so a class absent from both gold and
//! prediction still contributes a zero — scores are comparable across
//! folds even when a fold misses a class.

use crate::data::SUB_TASKS;
use crate::error::{Error, Result};

/// Per-class true positive / false positive / false negative counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    pub fn_: Vec<usize>,
}

impl ConfusionCounts {
    pub fn tally(golds: &[usize], preds: &[usize], classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
        }
        if golds.len() != preds.len() {
            return Err(Error::Contract(format!(
                "{} golds vs {} predictions",
                golds.len(),
                preds.len()
            )));
        }
        if golds.is_empty() {
            return Err(Error::Contract("cannot score an empty set".to_string()));
        }
        let mut counts = Self {
            tp: vec![0; classes],
            fp: vec![0; classes],
            fn_: vec![0; classes],
        };
        for (&g, &p) in golds.iter().zip(preds) {
            if g >= classes || p >= classes {
                return Err(Error::Label(format!(
                    "label out of range: gold {g}, pred {p}, classes {classes}"
                )));
            }
            if g == p {
                counts.tp[g] += 1;
            } else {
                counts.fp[p] += 1;
                counts.fn_[g] += 1;
            }
        }
        Ok(counts)
    }

    pub fn f1_per_class(&self) -> Vec<f64> {
        (0..self.tp.len())
            .map(|c| {
                let tp = self.tp[c] as f64;
                let precision = safe_div(tp, tp + self.fp[c] as f64);
                let recall = safe_div(tp, tp + self.fn_[c] as f64);
                safe_div(2.0 * precision * recall, precision + recall)
            })
            .collect()
    }
}

fn safe_div(num: f64, denom: f64) -> f64 {
    if denom == 0.0 {
        0.0
    } else {
        num / denom
    }
}

/// Macro-averaged F1 over all `classes` classes.
pub fn macro_f1(golds: &[usize], preds: &[usize], classes: usize) -> Result<f64> {
    let counts = ConfusionCounts::tally(golds, preds, classes)?;
    let per_class = counts.f1_per_class();
    Ok(per_class.iter().sum::<f64>() / classes as f64)
}

/// Task B: mean over the four emotions of the binary macro-F1 between
/// gold and predicted flags. Also returns the per-emotion scores.
pub fn task_b_score(
    golds: &[[u8; SUB_TASKS]],
    preds: &[[u8; SUB_TASKS]],
) -> Result<(f64, [f64; SUB_TASKS])> {
    if golds.len() != preds.len() || golds.is_empty() {
        return Err(Error::Contract(format!(
            "{} gold rows vs {} prediction rows",
            golds.len(),
            preds.len()
        )));
    }
    let mut sub = [0.0; SUB_TASKS];
    for t in 0..SUB_TASKS {
        let g: Vec<usize> = golds.iter().map(|row| row[t] as usize).collect();
        let p: Vec<usize> = preds.iter().map(|row| row[t] as usize).collect();
        sub[t] = macro_f1(&g, &p, 2)?;
    }
    Ok((sub.iter().sum::<f64>() / SUB_TASKS as f64, sub))
}

/// Task C: mean over the four emotions of the macro-F1 across that
/// emotion's intensity levels. Also returns the per-emotion scores.
pub fn task_c_score(
    golds: &[[usize; SUB_TASKS]],
    preds: &[[usize; SUB_TASKS]],
    cards: &[usize; SUB_TASKS],
) -> Result<(f64, [f64; SUB_TASKS])> {
    if golds.len() != preds.len() || golds.is_empty() {
        return Err(Error::Contract(format!(
            "{} gold rows vs {} prediction rows",
            golds.len(),
            preds.len()
        )));
    }
    let mut sub = [0.0; SUB_TASKS];
    for t in 0..SUB_TASKS {
        let g: Vec<usize> = golds.iter().map(|row| row[t]).collect();
        let p: Vec<usize> = preds.iter().map(|row| row[t]).collect();
        sub[t] = macro_f1(&g, &p, cards[t])?;
    }
    Ok((sub.iter().sum::<f64>() / SUB_TASKS as f64, sub))
}
