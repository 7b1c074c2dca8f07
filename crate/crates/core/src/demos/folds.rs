use rand::seq::SliceRandom;

use crate::rng::derive_rng;
use crate::{Error, Result};

/// Splits trajectory indices `0..n` into `k` disjoint folds whose sizes
/// differ by at most one. Each fold is sorted.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "fold count K={k} must be in 1..={n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derive_rng(seed, "folds", 0));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Complement of `fold` within `0..n`.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in fold {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forty_into_five() {
        let f = kfold_partition(40, 5, 0).unwrap();
        assert!(f.iter().all(|x| x.len() == 8));
    }

    #[test]
    fn single_fold_is_everything() {
        assert_eq!(kfold_partition(7, 1, 3).unwrap(), vec![(0..7).collect::<Vec<_>>()]);
    }

    #[test]
    fn too_many_folds() {
        assert!(kfold_partition(3, 4, 0).is_err());
        assert!(kfold_partition(3, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_laws(n in 1usize..200, k in 1usize..20, seed: u64) {
            prop_assume!(k <= n);
            let folds = kfold_partition(n, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(folds.clone(), kfold_partition(n, k, seed).unwrap());
            for f in &folds {
                let c = complement(n, f);
                prop_assert_eq!(c.len() + f.len(), n);
                prop_assert!(c.iter().all(|i| !f.contains(i)));
            }
        }
    }
}
