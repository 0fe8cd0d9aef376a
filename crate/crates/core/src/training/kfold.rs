use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `(train_indices, test_indices)`, both ascending.
pub type Split = (Vec<usize>, Vec<usize>);

/// Stratified k-fold partition.
///
/// Indices of each class are shuffled, the classes are laid out one after the
/// other, and position `p` of that sequence goes to test fold `p mod k`. Every
/// index is tested exactly once, per-class test counts differ by at most one
/// between folds, and so do fold sizes.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Split>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k ≥ 2, got {k}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((&class, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(Error::ClassTooSmall {
            class,
            count: members.len(),
            folds: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut pos = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = pos % k;
            pos += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
            (train, test)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_labels() -> Vec<usize> {
        (0..13).flat_map(|c| std::iter::repeat_n(c, 23)).collect()
    }

    #[test]
    fn default_split_sizes() {
        let labels = paper_labels();
        let folds = stratified_kfold(&labels, 5, 7).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.1.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![59, 60, 60, 60, 60]);
        for (_, test) in &folds {
            for c in 0..13 {
                let n = test.iter().filter(|&&i| labels[i] == c).count();
                assert!(n == 4 || n == 5, "class {c}: {n}");
            }
        }
    }

    #[test]
    fn partition_law_and_determinism() {
        let labels = paper_labels();
        let folds = stratified_kfold(&labels, 5, 1).unwrap();
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.1.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (train, test) in &folds {
            assert_eq!(train.len() + test.len(), labels.len());
            assert!(train.iter().all(|i| !test.contains(i)));
        }
        assert_eq!(folds, stratified_kfold(&labels, 5, 1).unwrap());
        assert_ne!(folds, stratified_kfold(&labels, 5, 2).unwrap());
    }

    #[test]
    fn rejects_bad_k() {
        assert!(matches!(stratified_kfold(&[0, 0, 1, 1], 1, 0), Err(Error::Config(_))));
        assert!(matches!(
            stratified_kfold(&[0, 0, 0, 1, 1], 3, 0),
            Err(Error::ClassTooSmall { class: 1, count: 2, folds: 3 })
        ));
    }
}
