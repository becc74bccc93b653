//! Seeded k-fold assignment over id strings.
//!
//! The split is a pure function of the id *set*, `k` and the seed: ids are
//! sorted, shuffled with a seeded generator, then dealt round-robin, so the
//! caller's ordering never leaks into the folds and sizes differ by at most
//! one.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::numeric::SeededRng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    folds: Vec<Vec<String>>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Ids held out as the test set of `fold`.
    pub fn test_ids(&self, fold: usize) -> &[String] {
        &self.folds[fold]
    }

    /// Ids of every other fold, i.e. the training set of `fold`.
    pub fn train_ids(&self, fold: usize) -> Vec<String> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, ids)| ids.iter().cloned())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[String]> {
        self.folds.iter().map(Vec::as_slice)
    }
}

pub fn kfold_split<S: AsRef<str>>(ids: &[S], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if ids.len() < k {
        return Err(Error::Config(format!(
            "cannot split {} ids into {k} folds",
            ids.len()
        )));
    }
    let mut sorted: Vec<String> = ids.iter().map(|s| s.as_ref().to_string()).collect();
    let unique: BTreeSet<&str> = sorted.iter().map(String::as_str).collect();
    if unique.len() != sorted.len() {
        return Err(Error::Contract("duplicate ids in k-fold input".to_string()));
    }
    sorted.sort();
    let mut rng = SeededRng::new(seed);
    rng.shuffle(&mut sorted);
    let mut folds = vec![Vec::new(); k];
    for (i, id) in sorted.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok(FoldAssignment { folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("id{i:03}")).collect()
    }

    #[test]
    fn partitions_without_overlap() {
        let ids = ids(23);
        let folds = kfold_split(&ids, 5, 7).unwrap();
        let mut seen = BTreeSet::new();
        for fold in folds.iter() {
            for id in fold {
                assert!(seen.insert(id.clone()), "{id} appears twice");
            }
        }
        assert_eq!(seen.len(), 23);
    }

    #[test]
    fn sizes_differ_by_at_most_one() {
        let folds = kfold_split(&ids(23), 5, 7).unwrap();
        let sizes: Vec<usize> = folds.iter().map(<[String]>::len).collect();
        let min = *sizes.iter().min().unwrap();
        let max = *sizes.iter().max().unwrap();
        assert!(max - min <= 1, "sizes {sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), 23);
    }

    #[test]
    fn independent_of_input_order() {
        let forward = ids(17);
        let mut backward = forward.clone();
        backward.reverse();
        assert_eq!(
            kfold_split(&forward, 4, 99).unwrap(),
            kfold_split(&backward, 4, 99).unwrap()
        );
    }

    #[test]
    fn seed_changes_the_split() {
        let ids = ids(40);
        let a = kfold_split(&ids, 5, 1).unwrap();
        let b = kfold_split(&ids, 5, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, kfold_split(&ids, 5, 1).unwrap());
    }

    #[test]
    fn train_ids_complement_test_ids() {
        let ids = ids(11);
        let folds = kfold_split(&ids, 3, 0).unwrap();
        for f in 0..folds.k() {
            let train = folds.train_ids(f);
            let test = folds.test_ids(f);
            assert_eq!(train.len() + test.len(), 11);
            for id in test {
                assert!(!train.contains(id));
            }
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(kfold_split(&ids(10), 1, 0).is_err());
        assert!(kfold_split(&ids(3), 5, 0).is_err());
        let dup = vec!["a".to_string(), "a".to_string(), "b".to_string()];
        assert!(kfold_split(&dup, 2, 0).is_err());
    }
}
