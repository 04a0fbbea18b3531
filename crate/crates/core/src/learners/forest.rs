use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{check_inputs, grow, ColumnStore, Tree, TreeParams, TreeTarget};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// Number of trees used when nothing else is asked for.
pub const DEFAULT_TREES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` means `⌊√d⌋`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: DEFAULT_TREES,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

impl ForestParams {
    fn tree_params(&self, d: usize) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            max_features: Some(self.max_features.unwrap_or_else(|| sqrt_features(d))),
        }
    }
}

pub fn sqrt_features(d: usize) -> usize {
    ((d as f64).sqrt().floor() as usize).max(1)
}

/// Bootstrap multiplicities of an `n`-draw sample with replacement.
pub fn bootstrap_weights(n: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut w = vec![0u32; n];
    for _ in 0..n {
        w[rng.gen_range(0..n)] += 1;
    }
    w
}

/// Seed of tree `t` in a forest keyed by `master_seed`.
pub fn tree_seed(master_seed: u64, t: usize) -> u64 {
    seed::derive(master_seed, t as u64)
}

/// One bootstrapped tree. The tree's stream draws the bootstrap first, then
/// the per-node feature subsets.
pub fn fit_bootstrap_tree(
    store: &ColumnStore,
    target: TreeTarget<'_>,
    params: &TreeParams,
    seed: u64,
) -> Tree {
    let mut rng = seed::rng(seed);
    let weights = bootstrap_weights(store.n_rows(), &mut rng);
    grow(store, target, &weights, params, &mut rng)
}

fn fit_trees(
    store: &ColumnStore,
    target: TreeTarget<'_>,
    params: &ForestParams,
    master_seed: u64,
) -> Vec<Tree> {
    let tp = params.tree_params(store.n_features());
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| fit_bootstrap_tree(store, target, &tp, tree_seed(master_seed, t)))
        .collect()
}

/// Random forest classifier; probabilities are vote fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestClassifier {
    trees: Vec<Tree>,
    n_classes: usize,
    n_features: usize,
}

impl ForestClassifier {
    pub fn fit(x: &Matrix, labels: &[u32], n_classes: usize, params: &ForestParams, master_seed: u64) -> Result<Self> {
        let target = TreeTarget::Classification { labels, n_classes };
        check_inputs(x, &target)?;
        Ok(Self::fit_store(&ColumnStore::new(x), labels, n_classes, params, master_seed))
    }

    /// Fits on a prebuilt column store; inputs are assumed validated.
    pub fn fit_store(store: &ColumnStore, labels: &[u32], n_classes: usize, params: &ForestParams, master_seed: u64) -> Self {
        let target = TreeTarget::Classification { labels, n_classes };
        ForestClassifier {
            trees: fit_trees(store, target, params, master_seed),
            n_classes,
            n_features: store.n_features(),
        }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Per-row vote counts for each class.
    fn votes(&self, x: &Matrix) -> Result<Vec<Vec<u32>>> {
        x.check_width(self.n_features)?;
        Ok(x.rows_iter()
            .map(|row| {
                let mut v = vec![0u32; self.n_classes];
                for t in &self.trees {
                    v[t.predict_row(row) as usize] += 1;
                }
                v
            })
            .collect())
    }

    /// Fraction of trees voting each class, row by row (`n × K`).
    pub fn predict_class_proba(&self, x: &Matrix) -> Result<Matrix> {
        let t = self.trees.len() as f64;
        let data = self
            .votes(x)?
            .into_iter()
            .flat_map(|v| v.into_iter().map(move |c| f64::from(c) / t))
            .collect();
        Matrix::from_vec(x.nrows(), self.n_classes, data)
    }

    /// Fraction of trees voting class 1.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if self.n_classes != 2 {
            return Err(Error::InvalidArgument(format!(
                "predict_proba needs a binary forest, this one has {} classes",
                self.n_classes
            )));
        }
        let t = self.trees.len() as f64;
        Ok(self.votes(x)?.into_iter().map(|v| f64::from(v[1]) / t).collect())
    }
}

/// Fits a binary forest classifier on 0/1 labels.
pub fn fit_forest_classifier(x: &Matrix, labels: &[u8], params: &ForestParams, master_seed: u64) -> Result<ForestClassifier> {
    let labels: Vec<u32> = labels.iter().map(|&l| u32::from(l)).collect();
    ForestClassifier::fit(x, &labels, 2, params, master_seed)
}

/// Random forest regressor; predicts the mean of its trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestRegressor {
    trees: Vec<Tree>,
    n_features: usize,
}

impl ForestRegressor {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.n_features)?;
        let t = self.trees.len() as f64;
        Ok(x.rows_iter()
            .map(|row| self.trees.iter().map(|tr| tr.predict_row(row)).sum::<f64>() / t)
            .collect())
    }
}

pub fn fit_forest_regressor(x: &Matrix, y: &[f64], params: &ForestParams, master_seed: u64) -> Result<ForestRegressor> {
    let target = TreeTarget::Regression(y);
    check_inputs(x, &target)?;
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
    }
    let store = ColumnStore::new(x);
    Ok(ForestRegressor {
        trees: fit_trees(&store, target, params, master_seed),
        n_features: x.ncols(),
    })
}
