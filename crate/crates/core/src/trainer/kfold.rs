use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// `(train indices, validation indices)` for one fold.
pub type Fold = (Vec<usize>, Vec<usize>);

/// Stratified k-fold split of `labels.len()` samples.
///
/// Each class's indices are shuffled and dealt round-robin across folds,
/// continuing where the previous class stopped, so fold sizes differ by at
/// most one and a class with a multiple of `folds` samples is spread evenly.
/// Both index lists of every fold are sorted.
pub fn kfold_split(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = labels.len();
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::invalid(format!("{folds} folds for only {n} samples")));
    }
    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut r = rng::stream(seed, 0x6b_666f_6c64);
    let mut assignment = vec![0usize; n];
    let mut next = 0usize;
    for members in &mut by_class {
        members.shuffle(&mut r);
        for &i in members.iter() {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok((0..folds)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            (train, val)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_samples_five_folds() {
        let splits = kfold_split(&[0; 10], 5, 3).unwrap();
        let mut seen = [0; 10];
        for (train, val) in &splits {
            assert_eq!(val.len(), 2);
            assert_eq!(train.len(), 8);
            for &v in val {
                seen[v] += 1;
                assert!(!train.contains(&v));
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn stratified_balance() {
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        for (_, val) in kfold_split(&labels, 5, 11).unwrap() {
            let mut counts = [0; 4];
            for &v in &val {
                counts[labels[v]] += 1;
            }
            assert_eq!(counts, [2, 2, 2, 2]);
        }
    }

    #[test]
    fn deterministic_and_errors() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        assert_eq!(kfold_split(&labels, 4, 1).unwrap(), kfold_split(&labels, 4, 1).unwrap());
        assert_ne!(kfold_split(&labels, 4, 1).unwrap(), kfold_split(&labels, 4, 2).unwrap());
        assert!(kfold_split(&labels, 1, 1).is_err());
        assert!(kfold_split(&labels[..3], 4, 1).is_err());
    }
}
