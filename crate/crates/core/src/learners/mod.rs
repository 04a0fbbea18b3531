//! Base learners: CART, random forests, OLS, gradient boosting, and the
//! holdout grid search that tunes them.

mod forest;
mod gbt;
mod grid;
mod linear;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::Matrix;

pub use forest::{
    bootstrap_weights, fit_bootstrap_tree, fit_forest_classifier, fit_forest_regressor, sqrt_features, tree_seed,
    ForestClassifier, ForestParams, ForestRegressor, DEFAULT_TREES,
};
pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use grid::{fit_regressor, grid_search_fit, GridSearchOutcome, GridSearchSpec, HyperParams};
pub use linear::{fit_linear, LinearModel};
pub use tree::{fit_tree, ColumnStore, Tree, TreeNode, TreeParams, TreeTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Linear,
    Tree,
    Forest,
    Gbt,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 4] = [
        RegressorKind::Linear,
        RegressorKind::Tree,
        RegressorKind::Forest,
        RegressorKind::Gbt,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegressorKind::Linear => "linear",
            RegressorKind::Tree => "tree",
            RegressorKind::Forest => "forest",
            RegressorKind::Gbt => "gbt",
        }
    }
}

impl std::fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegressorKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        RegressorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown regressor `{s}`")))
    }
}

/// A trained regressor of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedRegressor {
    Linear(LinearModel),
    Tree(Tree),
    Forest(ForestRegressor),
    Gbt(GbtModel),
}

impl FittedRegressor {
    pub fn kind(&self) -> RegressorKind {
        match self {
            FittedRegressor::Linear(_) => RegressorKind::Linear,
            FittedRegressor::Tree(_) => RegressorKind::Tree,
            FittedRegressor::Forest(_) => RegressorKind::Forest,
            FittedRegressor::Gbt(_) => RegressorKind::Gbt,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            FittedRegressor::Linear(m) => m.predict(x),
            FittedRegressor::Tree(t) => t.predict(x),
            FittedRegressor::Forest(f) => f.predict(x),
            FittedRegressor::Gbt(g) => g.predict(x),
        }
    }
}

impl LinearModel {
    pub fn into_regressor(self) -> FittedRegressor {
        FittedRegressor::Linear(self)
    }
}
