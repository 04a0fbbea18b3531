use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::forest::{fit_forest_regressor, ForestParams, DEFAULT_TREES};
use super::gbt::{fit_gbt, GbtModel, GbtParams};
use super::linear::fit_linear;
use super::tree::{fit_tree, TreeParams, TreeTarget};
use super::{FittedRegressor, RegressorKind};
use crate::error::{Error, Result};
use crate::eval::rmse;
use crate::matrix::Matrix;
use crate::seed;

/// Hyperparameter grids searched on a holdout of the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearchSpec {
    /// Tree and forest depth limits; `None` is unlimited.
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
    pub forest_trees: usize,
    pub gbt_stages: Vec<usize>,
    pub gbt_learning_rate: Vec<f64>,
    pub gbt_max_depth: Vec<usize>,
    pub holdout_fraction: f64,
}

impl Default for GridSearchSpec {
    fn default() -> Self {
        GridSearchSpec {
            max_depth: vec![Some(4), Some(6), Some(8), Some(12), None],
            min_samples_leaf: vec![1, 5, 20],
            forest_trees: DEFAULT_TREES,
            gbt_stages: vec![100, 300],
            gbt_learning_rate: vec![0.05, 0.1, 0.3],
            gbt_max_depth: vec![3, 6],
            holdout_fraction: 0.30,
        }
    }
}

/// Minimum number of holdout rows for a meaningful selection.
const MIN_HOLDOUT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HyperParams {
    Linear,
    Tree(TreeParams),
    Forest(ForestParams),
    Gbt(GbtParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    pub model: FittedRegressor,
    pub selected: HyperParams,
    pub holdout_rmse: f64,
}

impl GridSearchSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = self.max_depth.is_empty()
            || self.min_samples_leaf.is_empty()
            || self.gbt_stages.is_empty()
            || self.gbt_learning_rate.is_empty()
            || self.gbt_max_depth.is_empty();
        if empty {
            return Err(Error::InvalidArgument("grid search lists must be nonempty".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "holdout fraction {} outside (0, 1)",
                self.holdout_fraction
            )));
        }
        if self.forest_trees == 0 {
            return Err(Error::InvalidArgument("forest needs at least one tree".into()));
        }
        Ok(())
    }

    /// Grid cells in listed order (outer lists vary slowest).
    pub fn cells(&self, kind: RegressorKind) -> Vec<HyperParams> {
        match kind {
            RegressorKind::Linear => vec![HyperParams::Linear],
            RegressorKind::Tree => self
                .depth_leaf()
                .map(|(max_depth, min_samples_leaf)| {
                    HyperParams::Tree(TreeParams { max_depth, min_samples_leaf, max_features: None })
                })
                .collect(),
            RegressorKind::Forest => self
                .depth_leaf()
                .map(|(max_depth, min_samples_leaf)| {
                    HyperParams::Forest(ForestParams {
                        n_trees: self.forest_trees,
                        max_depth,
                        min_samples_leaf,
                        max_features: None,
                    })
                })
                .collect(),
            RegressorKind::Gbt => {
                let mut out = Vec::new();
                for &n_stages in &self.gbt_stages {
                    for &learning_rate in &self.gbt_learning_rate {
                        for &max_depth in &self.gbt_max_depth {
                            out.push(HyperParams::Gbt(GbtParams { n_stages, learning_rate, max_depth }));
                        }
                    }
                }
                out
            }
        }
    }

    fn depth_leaf(&self) -> impl Iterator<Item = (Option<usize>, usize)> + '_ {
        self.max_depth
            .iter()
            .flat_map(move |&d| self.min_samples_leaf.iter().map(move |&l| (d, l)))
    }
}

fn fit_cell(x: &Matrix, y: &[f64], cell: &HyperParams, seed: u64) -> Result<FittedRegressor> {
    Ok(match cell {
        HyperParams::Linear => FittedRegressor::Linear(fit_linear(x, y)?),
        HyperParams::Tree(p) => FittedRegressor::Tree(fit_tree(x, TreeTarget::Regression(y), p, seed)?),
        HyperParams::Forest(p) => FittedRegressor::Forest(fit_forest_regressor(x, y, p, seed)?),
        HyperParams::Gbt(p) => FittedRegressor::Gbt(fit_gbt(x, y, p)?),
    })
}

/// Splits the rows into (fit, holdout) by a seeded shuffle.
pub(crate) fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let n_hold = (n as f64 * fraction).round() as usize;
    let hold = idx[..n_hold].to_vec();
    let fit = idx[n_hold..].to_vec();
    (fit, hold)
}

/// Selects hyperparameters by holdout RMSE and returns the winner trained on
/// the fit portion only. Ties keep the first-listed cell.
pub fn grid_search_fit(
    x: &Matrix,
    y: &[f64],
    kind: RegressorKind,
    spec: &GridSearchSpec,
    seed: u64,
) -> Result<GridSearchOutcome> {
    spec.validate()?;
    if y.len() != x.nrows() {
        return Err(Error::LengthMismatch { left: x.nrows(), right: y.len() });
    }
    let (fit_idx, hold_idx) = holdout_split(x.nrows(), spec.holdout_fraction, seed::derive_str(seed, "holdout"));
    if hold_idx.len() < MIN_HOLDOUT {
        return Err(Error::InvalidArgument(format!(
            "holdout of {} rows is below the minimum of {MIN_HOLDOUT}",
            hold_idx.len()
        )));
    }
    let x_fit = x.select_rows(&fit_idx);
    let y_fit: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
    let x_hold = x.select_rows(&hold_idx);
    let y_hold: Vec<f64> = hold_idx.iter().map(|&i| y[i]).collect();
    let model_seed = seed::derive_str(seed, "model");

    let cells = spec.cells(kind);
    let mut best: Option<(f64, usize, FittedRegressor)> = None;
    // boosting cells that differ only in stage count share one long fit
    let mut gbt_cache: Vec<(GbtParams, GbtModel)> = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let model = match cell {
            HyperParams::Gbt(p) => {
                let longest = cells
                    .iter()
                    .filter_map(|h| match h {
                        HyperParams::Gbt(q) if q.learning_rate == p.learning_rate && q.max_depth == p.max_depth => {
                            Some(q.n_stages)
                        }
                        _ => None,
                    })
                    .max()
                    .unwrap_or(p.n_stages);
                let key = GbtParams { n_stages: longest, ..*p };
                let full = match gbt_cache.iter().find(|(k, _)| *k == key) {
                    Some((_, m)) => m.clone(),
                    None => {
                        let m = fit_gbt(&x_fit, &y_fit, &key)?;
                        gbt_cache.push((key, m.clone()));
                        m
                    }
                };
                FittedRegressor::Gbt(full.truncated(p.n_stages))
            }
            other => fit_cell(&x_fit, &y_fit, other, model_seed)?,
        };
        let score = rmse(&y_hold, &model.predict(&x_hold)?)?;
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, c, model));
        }
    }
    let (holdout_rmse, c, model) = best.expect("grid has at least one cell");
    Ok(GridSearchOutcome {
        model,
        selected: cells[c],
        holdout_rmse,
    })
}

/// Trains a regressor of `kind` on a training split: OLS directly on all
/// rows, everything else through [`grid_search_fit`].
pub fn fit_regressor(
    x: &Matrix,
    y: &[f64],
    kind: RegressorKind,
    spec: &GridSearchSpec,
    seed: u64,
) -> Result<FittedRegressor> {
    match kind {
        RegressorKind::Linear => Ok(FittedRegressor::Linear(fit_linear(x, y)?)),
        _ => Ok(grid_search_fit(x, y, kind, spec, seed)?.model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn staircase(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        // depth-2 structure: four steps on x1, x2 irrelevant; x1 on a coarse
        // grid so every holdout value also occurs in the fit rows
        let mut rng = crate::seed::rng(seed);
        let rows: Vec<[f64; 2]> =
            (0..n).map(|_| [f64::from(rng.gen_range(0u8..20)) / 20.0, rng.gen()]).collect();
        let y = rows.iter().map(|r| (r[0] * 4.0).floor()).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn single_cell_grid_equals_direct_fit_on_seventy_percent() {
        let (x, y) = staircase(200, 1);
        let p = TreeParams { max_depth: Some(3), min_samples_leaf: 1, max_features: None };
        let spec = GridSearchSpec { max_depth: vec![Some(3)], min_samples_leaf: vec![1], ..Default::default() };
        let out = grid_search_fit(&x, &y, RegressorKind::Tree, &spec, 42).unwrap();
        let (fit_idx, _) = holdout_split(200, 0.3, seed::derive_str(42, "holdout"));
        assert_eq!(fit_idx.len(), 140);
        let yf: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
        let direct = fit_tree(&x.select_rows(&fit_idx), TreeTarget::Regression(&yf), &p, 0).unwrap();
        assert_eq!(out.model.predict(&x).unwrap(), direct.predict(&x).unwrap());
        assert_eq!(out.selected, HyperParams::Tree(p));
    }

    #[test]
    fn selects_the_generating_depth_first() {
        let (x, y) = staircase(400, 2);
        let spec = GridSearchSpec {
            max_depth: vec![Some(1), Some(2), Some(3), Some(6)],
            min_samples_leaf: vec![1],
            ..Default::default()
        };
        let out = grid_search_fit(&x, &y, RegressorKind::Tree, &spec, 3).unwrap();
        // depth 2 is exact; deeper trees tie and lose to the earlier cell
        assert_eq!(out.holdout_rmse, 0.0);
        let HyperParams::Tree(p) = out.selected else { panic!() };
        assert_eq!(p.max_depth, Some(2));
    }

    #[test]
    fn same_seed_same_selection() {
        let (x, y) = staircase(150, 4);
        let spec = GridSearchSpec { gbt_stages: vec![5, 10], ..Default::default() };
        let a = grid_search_fit(&x, &y, RegressorKind::Gbt, &spec, 9).unwrap();
        let b = grid_search_fit(&x, &y, RegressorKind::Gbt, &spec, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn holdout_too_small() {
        let (x, y) = staircase(20, 5);
        assert!(grid_search_fit(&x, &y, RegressorKind::Tree, &GridSearchSpec::default(), 0).is_err());
    }

    #[test]
    fn gbt_cell_shares_long_fit() {
        let (x, y) = staircase(120, 6);
        let spec = GridSearchSpec {
            gbt_stages: vec![3, 8],
            gbt_learning_rate: vec![0.3],
            gbt_max_depth: vec![2],
            ..Default::default()
        };
        let out = grid_search_fit(&x, &y, RegressorKind::Gbt, &spec, 1).unwrap();
        let (fit_idx, _) = holdout_split(120, 0.3, seed::derive_str(1, "holdout"));
        let yf: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
        let HyperParams::Gbt(p) = out.selected else { panic!() };
        let direct = fit_gbt(&x.select_rows(&fit_idx), &yf, &p).unwrap();
        assert_eq!(out.model, FittedRegressor::Gbt(direct));
    }

    #[test]
    fn bad_specs_rejected() {
        let bad = GridSearchSpec { holdout_fraction: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = GridSearchSpec { min_samples_leaf: vec![], ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
