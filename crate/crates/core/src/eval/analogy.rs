//! Word-analogy and nearest-neighbor queries over a keyed vector set.
//!
//! The analogy rule is additive: for "a is to b as c is to ?", rank every
//! candidate by cosine similarity to the normalized `b - a + c`, leaving
//! the three query words out of the candidate pool. Ties break toward the
//! lexicographically smaller key, so rankings are total and reproducible.

use std::collections::BTreeMap;

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::je::JointModel;
use crate::numeric::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorSpace {
    keys: Vec<String>,
    vectors: Vec<Vec<f64>>,
    index: BTreeMap<String, usize>,
    dim: usize,
}

impl VectorSpace {
    pub fn new(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let dim = match entries.first() {
            Some((_, v)) if !v.is_empty() => v.len(),
            _ => return Err(Error::Config("empty vector space".to_string())),
        };
        let mut keys = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        let mut index = BTreeMap::new();
        for (key, vector) in entries {
            if vector.len() != dim {
                return Err(Error::Dimension(format!(
                    "vector for {key:?} has {} entries, expected {dim}",
                    vector.len()
                )));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Contract(format!("non-finite vector for {key:?}")));
            }
            if index.insert(key.clone(), keys.len()).is_some() {
                return Err(Error::Config(format!("duplicate key {key:?}")));
            }
            keys.push(key);
            vectors.push(vector);
        }
        Ok(Self { keys, vectors, index, dim })
    }

    /// All raw vectors of a feature table.
    pub fn from_table(table: &FeatureTable) -> Result<Self> {
        Self::new(table.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect())
    }

    /// Every key of `table`, projected through the model's text branch.
    pub fn from_projected(model: &JointModel, table: &FeatureTable) -> Result<Self> {
        let keys: Vec<&str> = table.keys().collect();
        let embedded = model.embed_texts(table, &keys)?;
        Self::new(
            keys.iter()
                .zip(embedded.iter_rows())
                .map(|(k, row)| (k.to_string(), row.to_vec()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.index.get(key).map(|&i| self.vectors[i].as_slice())
    }

    fn require(&self, key: &str) -> Result<&[f64]> {
        self.get(key).ok_or_else(|| Error::UnresolvedKey {
            key: key.to_string(),
            context: "not in the vector space".to_string(),
        })
    }

    /// Solve "a : b :: c : ?" and return the top `k` candidates with their
    /// cosine scores, best first. `a`, `b` and `c` never appear in the
    /// result.
    pub fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let va = self.require(a)?;
        let vb = self.require(b)?;
        let vc = self.require(c)?;
        let target: Vec<f64> = vb
            .iter()
            .zip(va)
            .zip(vc)
            .map(|((b, a), c)| b - a + c)
            .collect();
        self.rank_by_cosine(&target, &[a, b, c], k)
    }

    /// The `k` nearest neighbors of `key` by cosine, excluding itself.
    pub fn nearest(&self, key: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let v = self.require(key)?.to_vec();
        self.rank_by_cosine(&v, &[key], k)
    }

    fn rank_by_cosine(
        &self,
        target: &[f64],
        exclude: &[&str],
        k: usize,
    ) -> Result<Vec<(String, f64)>> {
        let target_norm = norm(target);
        if target_norm <= 1e-12 {
            return Err(Error::DegenerateVector { row: 0 });
        }
        let mut scored: Vec<(String, f64)> = Vec::with_capacity(self.len());
        for (key, vector) in self.keys.iter().zip(&self.vectors) {
            if exclude.contains(&key.as_str()) {
                continue;
            }
            let n = norm(vector);
            if n <= 1e-12 {
                return Err(Error::Contract(format!("zero vector for {key:?}")));
            }
            let dot: f64 = vector.iter().zip(target).map(|(x, t)| x * t).sum();
            scored.push((key.clone(), dot / (n * target_norm)));
        }
        scored.sort_by(|(ka, sa), (kb, sb)| sb.total_cmp(sa).then_with(|| ka.cmp(kb)));
        scored.truncate(k);
        Ok(scored)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Convenience matrix view of the space, rows in insertion order.
impl VectorSpace {
    pub fn to_matrix(&self) -> Result<Matrix> {
        Matrix::from_rows(&self.vectors)
    }
}
