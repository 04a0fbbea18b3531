use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Assignment of `n` rows to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index of each row.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.assignment.len()
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle, then contiguous chunks; the first `n mod k` folds get one
/// extra row.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!("{n} rows cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive_str(seed, "folds")));
    let (base, extra) = (n / k, n % k);
    let mut assignment = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &row in &order[pos..pos + size] {
            assignment[row] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan { k, seed, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_split() {
        let p = kfold_split(20, 10, 1).unwrap();
        assert_eq!(p.fold_sizes(), vec![2; 10]);
    }

    #[test]
    fn uneven_split() {
        let p = kfold_split(23, 10, 1).unwrap();
        assert_eq!(p.fold_sizes(), vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn deterministic_partition() {
        let a = kfold_split(57, 10, 9).unwrap();
        assert_eq!(a, kfold_split(57, 10, 9).unwrap());
        assert_ne!(a, kfold_split(57, 10, 10).unwrap());
        let mut seen = vec![0; 57];
        for f in 0..10 {
            for r in a.test_rows(f) {
                seen[r] += 1;
            }
            assert_eq!(a.train_rows(f).len() + a.test_rows(f).len(), 57);
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn too_few_rows() {
        assert!(kfold_split(9, 10, 0).is_err());
    }
}
