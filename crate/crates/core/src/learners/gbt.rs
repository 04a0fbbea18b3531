use serde::{Deserialize, Serialize};

use super::tree::{check_inputs, grow, ColumnStore, Tree, TreeParams, TreeTarget};
use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
        }
    }
}

/// Squared-error gradient boosting: `F₀ = mean(y)`, then each stage adds
/// `learning_rate × tree(residuals)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub init: f64,
    pub learning_rate: f64,
    stages: Vec<Tree>,
    n_features: usize,
}

impl GbtModel {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// The same model cut after its first `k` stages.
    pub fn truncated(&self, k: usize) -> GbtModel {
        GbtModel {
            init: self.init,
            learning_rate: self.learning_rate,
            stages: self.stages[..k.min(self.stages.len())].to_vec(),
            n_features: self.n_features,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.n_features)?;
        Ok(x.rows_iter()
            .map(|row| {
                self.stages
                    .iter()
                    .fold(self.init, |acc, t| acc + self.learning_rate * t.predict_row(row))
            })
            .collect())
    }
}

pub fn fit_gbt(x: &Matrix, y: &[f64], params: &GbtParams) -> Result<GbtModel> {
    check_inputs(x, &TreeTarget::Regression(y))?;
    let n = x.nrows();
    let init = y.iter().sum::<f64>() / n as f64;
    let store = ColumnStore::new(x);
    let weights = vec![1u32; n];
    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        min_samples_leaf: 1,
        max_features: None,
    };
    // unused: no feature subsampling
    let mut rng = crate::seed::rng(0);
    let mut fitted = vec![init; n];
    let mut stages = Vec::with_capacity(params.n_stages);
    let mut residuals = vec![0.0; n];
    for _ in 0..params.n_stages {
        for i in 0..n {
            residuals[i] = y[i] - fitted[i];
        }
        let tree = grow(&store, TreeTarget::Regression(&residuals), &weights, &tree_params, &mut rng);
        for (i, row) in x.rows_iter().enumerate() {
            fitted[i] += params.learning_rate * tree.predict_row(row);
        }
        stages.push(tree);
    }
    Ok(GbtModel {
        init,
        learning_rate: params.learning_rate,
        stages,
        n_features: x.ncols(),
    })
}
