//! Seeded train/test splits and cross-validation folds.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::transform::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Each class must keep at least this many training members.
    pub min_train_per_class: usize,
}

impl SplitSpec {
    pub fn stratified(train_count: usize, seed: u64) -> Self {
        Self {
            train_count,
            seed,
            stratified: true,
            min_train_per_class: 1,
        }
    }
}

/// Row indices of both parts, each in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class training quotas by largest-remainder rounding of the
/// proportional allocation. Ties in the remainder go to the smaller class
/// index.
fn quotas(counts: &[usize], train_count: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let mut q: Vec<usize> = counts.iter().map(|&c| c * train_count / total).collect();
    let mut rest: Vec<(usize, usize)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, (c * train_count) % total))
        .collect();
    rest.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut left = train_count - q.iter().sum::<usize>();
    for (i, _) in rest.into_iter().cycle() {
        if left == 0 {
            break;
        }
        if q[i] < counts[i] {
            q[i] += 1;
            left -= 1;
        }
    }
    q
}

pub fn stratified_split(data: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    let n = data.len();
    if spec.train_count == 0 || spec.train_count >= n {
        return Err(Error::InvalidConfig(format!(
            "train count must lie in 1..{n}, got {}",
            spec.train_count
        )));
    }
    let mut train = Vec::with_capacity(spec.train_count);
    if spec.stratified {
        let members = data.class_members();
        let counts: Vec<usize> = members.iter().map(Vec::len).collect();
        let q = quotas(&counts, spec.train_count);
        for (c, (mut idx, take)) in members.into_iter().zip(q).enumerate() {
            idx.shuffle(&mut substream(spec.seed, Purpose::Split, c as u64));
            train.extend_from_slice(&idx[..take]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut substream(spec.seed, Purpose::Split, u64::MAX));
        train.extend_from_slice(&idx[..spec.train_count]);
    }
    train.sort_unstable();
    let mut per_class = vec![0usize; data.n_classes()];
    for &i in &train {
        per_class[data.labels()[i]] += 1;
    }
    if let Some((c, &have)) = per_class.iter().enumerate().find(|(_, &k)| k < spec.min_train_per_class) {
        return Err(Error::InvalidConfig(format!(
            "class {c} keeps only {have} training members, {} required",
            spec.min_train_per_class
        )));
    }
    let mut in_train = vec![false; n];
    train.iter().for_each(|&i| in_train[i] = true);
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok(Split { train, test })
}

/// Validation indices of `k` stratified folds. Classes are shuffled
/// separately and dealt round-robin, continuing across classes.
pub fn stratified_folds(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > data.len() {
        return Err(Error::InvalidConfig(format!(
            "fold count must lie in 2..={}, got {k}",
            data.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (c, mut idx) in data.class_members().into_iter().enumerate() {
        idx.shuffle(&mut substream(seed, Purpose::Folds, c as u64));
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(counts: &[usize]) -> LabeledDataset {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat_n(c, k)).collect();
        let features = (0..labels.len()).map(|i| vec![i as f64]).collect();
        LabeledDataset::new(features, labels, counts.len()).unwrap()
    }

    #[test]
    fn largest_remainder() {
        assert_eq!(quotas(&[50, 30, 20], 10), vec![5, 3, 2]);
        // exact shares 3.33, 3.33, 3.33 -> first class gets the spare
        assert_eq!(quotas(&[10, 10, 10], 10), vec![4, 3, 3]);
        assert_eq!(quotas(&[7, 2, 1], 5), vec![4, 1, 0]);
    }

    #[test]
    fn proportions_within_one() {
        let d = data(&[60, 25, 15]);
        let s = stratified_split(&d, &SplitSpec::stratified(37, 4)).unwrap();
        assert_eq!(s.train.len(), 37);
        assert_eq!(s.train.len() + s.test.len(), 100);
        let mut per = [0usize; 3];
        s.train.iter().for_each(|&i| per[d.labels()[i]] += 1);
        for (c, &k) in per.iter().enumerate() {
            let exact = 37.0 * [60.0, 25.0, 15.0][c] / 100.0;
            assert!((k as f64 - exact).abs() <= 1.0, "{per:?}");
        }
    }

    #[test]
    fn split_is_seeded() {
        let d = data(&[20, 20]);
        let a = stratified_split(&d, &SplitSpec::stratified(10, 1)).unwrap();
        assert_eq!(a, stratified_split(&d, &SplitSpec::stratified(10, 1)).unwrap());
        assert_ne!(a, stratified_split(&d, &SplitSpec::stratified(10, 2)).unwrap());
    }

    #[test]
    fn minimum_per_class_enforced() {
        let d = data(&[90, 10]);
        let spec = SplitSpec {
            min_train_per_class: 3,
            ..SplitSpec::stratified(20, 0)
        };
        assert!(stratified_split(&d, &spec).is_err());
        assert!(stratified_split(&d, &SplitSpec::stratified(100, 0)).is_err());
    }

    #[test]
    fn folds_partition_and_stratify() {
        let d = data(&[23, 11, 6]);
        let folds = stratified_folds(&d, 5, 9).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.len(), 8);
            let c0 = f.iter().filter(|&&i| d.labels()[i] == 0).count();
            assert!((4..=5).contains(&c0));
        }
        assert!(stratified_folds(&d, 1, 0).is_err());
    }
}
