//! Stratified k-fold splitting.

use crate::error::{Error, Result};
use crate::nn::rng::Rng;

/// K disjoint test-index sets covering a dataset, with per-fold class counts.
/// `histograms[f][c]` is how many class-`c` examples landed in fold `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub folds: Vec<Vec<usize>>,
    pub histograms: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// All dataset indices outside fold `f`, ascending: the training set when
    /// fold `f` is held out.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Split `labels` (class index per example) into `k` stratified folds.
///
/// Each class's example indices are shuffled with the seeded generator and
/// dealt round-robin across folds, so per-class counts differ by at most one
/// between folds. Classes are processed in ascending class-index order and
/// draw from one generator stream; the result is a pure function of
/// (labels, k, seed). Classes smaller than `k` produce a warning rather than
/// an error and simply leave some folds without that class.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Argument(format!(
            "cannot split {} examples into {k} folds",
            labels.len()
        )));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }

    let mut rng = Rng::new(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut histograms: Vec<Vec<usize>> = vec![vec![0; classes]; k];
    let mut warnings = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            warnings.push(format!("class {c} has no examples"));
            continue;
        }
        if members.len() < k {
            warnings.push(format!(
                "class {c} has {} examples for {k} folds; some folds will miss it",
                members.len()
            ));
        }
        rng.shuffle(members);
        for (j, &idx) in members.iter().enumerate() {
            folds[j % k].push(idx);
            histograms[j % k][c] += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldSplit { folds, histograms, warnings })
}
