use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::boxcox::{boxcox, fit_boxcox_lambda};
use super::{Cell, ColumnKind, Dataset, FeatureTable};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Smallest value a shifted standardized target may take before Box-Cox.
pub const POSITIVITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalStats {
    pub name: String,
    /// Sorted vocabulary seen in the training split.
    pub vocabulary: Vec<String>,
}

/// Statistics fitted on a training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub input_names: Vec<String>,
    pub input_kinds: Vec<ColumnKind>,
    /// Retained numeric columns, in input order.
    pub numeric: Vec<NumericStats>,
    pub categorical: Vec<CategoricalStats>,
    /// Numeric columns constant on the training split.
    pub dropped_constant: Vec<String>,
    pub target_mean: f64,
    pub target_std: f64,
    pub boxcox_lambda: f64,
    pub boxcox_shift: f64,
}

/// A split after preprocessing: numeric design matrix and transformed target.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    /// Target values whose shifted standardized form was ≤ 0 and got clamped.
    pub clamped_targets: usize,
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than 2 values.
pub(crate) fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

fn numeric_column(table: &FeatureTable, j: usize) -> Result<Vec<f64>> {
    table
        .rows
        .iter()
        .map(|r| match &r[j] {
            Cell::Numeric(v) => Ok(*v),
            other => Err(Error::InvalidArgument(format!(
                "column `{}` expected numeric cells, found {other:?}",
                table.names[j]
            ))),
        })
        .collect()
}

/// Fits every statistic of the preprocessing chain on `train`.
pub fn fit_preprocess(train: &Dataset) -> Result<PreprocessStats> {
    if train.n_rows() == 0 {
        return Err(Error::EmptyDataset(train.name.clone()));
    }
    if train.has_missing() {
        return Err(Error::InvalidArgument(
            "fit_preprocess needs a split without missing cells".into(),
        ));
    }
    let table = &train.features;
    let mut numeric = Vec::new();
    let mut categorical = Vec::new();
    let mut dropped_constant = Vec::new();
    for (j, kind) in table.kinds.iter().enumerate() {
        let name = table.names[j].clone();
        match kind {
            ColumnKind::Numeric => {
                let col = numeric_column(table, j)?;
                if is_constant(&col) {
                    dropped_constant.push(name);
                } else {
                    let m = mean(&col);
                    numeric.push(NumericStats {
                        name,
                        mean: m,
                        std: sample_std(&col, m),
                    });
                }
            }
            ColumnKind::Categorical => {
                let vocab: BTreeSet<&str> = table
                    .rows
                    .iter()
                    .filter_map(|r| match &r[j] {
                        Cell::Category(c) => Some(c.as_str()),
                        _ => None,
                    })
                    .collect();
                categorical.push(CategoricalStats {
                    name,
                    vocabulary: vocab.into_iter().map(str::to_string).collect(),
                });
            }
        }
    }

    let y = &train.target;
    if is_constant(y) {
        return Err(Error::ConstantTarget);
    }
    let target_mean = mean(y);
    let target_std = sample_std(y, target_mean);
    let standardized: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_std).collect();
    let min = standardized.iter().copied().fold(f64::INFINITY, f64::min);
    let boxcox_shift = (POSITIVITY_FLOOR - min).max(0.0);
    let shifted: Vec<f64> = standardized
        .iter()
        .map(|v| (v + boxcox_shift).max(POSITIVITY_FLOOR))
        .collect();
    let boxcox_lambda = fit_boxcox_lambda(&shifted);

    Ok(PreprocessStats {
        input_names: table.names.clone(),
        input_kinds: table.kinds.clone(),
        numeric,
        categorical,
        dropped_constant,
        target_mean,
        target_std,
        boxcox_lambda,
        boxcox_shift,
    })
}

impl PreprocessStats {
    fn check_layout(&self, table: &FeatureTable) -> Result<()> {
        if table.names != self.input_names || table.kinds != self.input_kinds {
            return Err(Error::Schema(format!(
                "columns {:?} do not match the fitted layout {:?}",
                table.names, self.input_names
            )));
        }
        Ok(())
    }

    /// Output column names after encoding, standardization and constant-column removal.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let (mut num, mut cat) = (self.numeric.iter().peekable(), self.categorical.iter());
        for (name, kind) in self.input_names.iter().zip(&self.input_kinds) {
            match kind {
                ColumnKind::Numeric => {
                    if num.peek().is_some_and(|s| &s.name == name) {
                        names.push(num.next().unwrap().name.clone());
                    }
                }
                ColumnKind::Categorical => {
                    let stats = cat.next().expect("categorical stats in input order");
                    names.extend(stats.vocabulary.iter().map(|v| format!("{name}={v}")));
                }
            }
        }
        names
    }

    /// Encodes and standardizes features into a numeric matrix.
    pub fn transform_features(&self, table: &FeatureTable) -> Result<Matrix> {
        let encoded = one_hot_encode(table, self)?;
        let mut data = Vec::with_capacity(encoded.n_rows() * self.feature_names().len());
        // encoded layout: numeric columns in place, dummies in place of categoricals
        let mut plan: Vec<Option<(f64, f64)>> = Vec::with_capacity(encoded.n_cols());
        let mut num = self.numeric.iter().peekable();
        for (name, kind) in table.names.iter().zip(&table.kinds) {
            match kind {
                ColumnKind::Numeric => {
                    if num.peek().is_some_and(|s| &s.name == name) {
                        let s = num.next().unwrap();
                        plan.push(Some((s.mean, s.std)));
                    } else {
                        plan.push(None);
                    }
                }
                ColumnKind::Categorical => {
                    let width = self
                        .categorical
                        .iter()
                        .find(|c| &c.name == name)
                        .map_or(0, |c| c.vocabulary.len());
                    plan.extend(std::iter::repeat_n(Some((0.0, 1.0)), width));
                }
            }
        }
        for row in &encoded.rows {
            for (cell, step) in row.iter().zip(&plan) {
                if let Some((m, s)) = step {
                    let v = match cell {
                        Cell::Numeric(v) => *v,
                        other => {
                            return Err(Error::InvalidArgument(format!(
                                "cannot transform cell {other:?}"
                            )))
                        }
                    };
                    data.push((v - m) / s);
                }
            }
        }
        let width = plan.iter().filter(|p| p.is_some()).count();
        Matrix::from_vec(encoded.n_rows(), width, data)
    }

    /// Shifted standardized target, before the power transform.
    pub fn standardize_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std + self.boxcox_shift
    }

    /// Standardizes, shifts and Box-Cox transforms targets. Returns the
    /// transformed values and how many had to be clamped to the floor.
    pub fn transform_target(&self, y: &[f64]) -> (Vec<f64>, usize) {
        let mut clamped = 0;
        let out = y
            .iter()
            .map(|&v| {
                let mut s = self.standardize_target(v);
                if s <= 0.0 {
                    clamped += 1;
                    s = POSITIVITY_FLOOR;
                }
                boxcox(s, self.boxcox_lambda)
            })
            .collect();
        (out, clamped)
    }
}

/// Replaces each categorical column with one 0/1 column per training
/// category. Categories outside the vocabulary encode as all zeros.
pub fn one_hot_encode(table: &FeatureTable, stats: &PreprocessStats) -> Result<FeatureTable> {
    stats.check_layout(table)?;
    if !table.kinds.contains(&ColumnKind::Categorical) {
        return Ok(table.clone());
    }
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    let mut cat_stats = Vec::new();
    let mut cat = stats.categorical.iter();
    for (name, kind) in table.names.iter().zip(&table.kinds) {
        match kind {
            ColumnKind::Numeric => {
                names.push(name.clone());
                kinds.push(ColumnKind::Numeric);
                cat_stats.push(None);
            }
            ColumnKind::Categorical => {
                let s = cat.next().expect("categorical stats in input order");
                for v in &s.vocabulary {
                    names.push(format!("{name}={v}"));
                    kinds.push(ColumnKind::Numeric);
                }
                cat_stats.push(Some(s));
            }
        }
    }
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let mut out = Vec::with_capacity(names.len());
            for (cell, s) in row.iter().zip(&cat_stats) {
                match s {
                    None => out.push(cell.clone()),
                    Some(s) => {
                        let hit = match cell {
                            Cell::Category(c) => s.vocabulary.binary_search(c).ok(),
                            _ => None,
                        };
                        out.extend((0..s.vocabulary.len()).map(|k| {
                            Cell::Numeric(if Some(k) == hit { 1.0 } else { 0.0 })
                        }));
                    }
                }
            }
            out
        })
        .collect();
    Ok(FeatureTable { names, kinds, rows })
}

/// Applies train-fitted statistics to any split. No inverse transform exists
/// downstream: errors are measured on the transformed target.
pub fn apply_preprocess(ds: &Dataset, stats: &PreprocessStats) -> Result<Prepared> {
    let x = stats.transform_features(&ds.features)?;
    let (y, clamped_targets) = stats.transform_target(&ds.target);
    Ok(Prepared {
        feature_names: stats.feature_names(),
        x,
        y,
        clamped_targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::inverse_boxcox;
    use rand::Rng;

    fn mixed_dataset() -> Dataset {
        let names = vec!["a".to_string(), "color".to_string(), "k".to_string()];
        let kinds = vec![ColumnKind::Numeric, ColumnKind::Categorical, ColumnKind::Numeric];
        let colors = ["red", "green", "blue"];
        let rows = (0..9)
            .map(|i| {
                vec![
                    Cell::Numeric(i as f64 * 1.5 - 2.0),
                    Cell::Category(colors[i % 3].to_string()),
                    Cell::Numeric(4.0),
                ]
            })
            .collect();
        let target = (0..9).map(|i| (i as f64).powi(2) + 1.0).collect();
        Dataset::new("mixed", FeatureTable { names, kinds, rows }, target).unwrap()
    }

    #[test]
    fn target_stats_use_sample_std() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [0.0], [1.0], [2.0]]).unwrap();
        let ds = Dataset::from_matrix("t", &x, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let s = fit_preprocess(&ds).unwrap();
        assert_eq!(s.target_mean, 3.0);
        assert!((s.target_std - 1.581_138_830_084_19).abs() < 1e-12);
    }

    #[test]
    fn shift_lifts_standardized_minimum_to_floor() {
        // {−1, 0, 1} standardizes to itself, so the minimum is −1
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let ds = Dataset::from_matrix("t", &x, vec![-1.0, 0.0, 1.0]).unwrap();
        let s = fit_preprocess(&ds).unwrap();
        assert!((s.boxcox_shift - (1.0 + POSITIVITY_FLOOR)).abs() < 1e-15);

        // targets already positive after standardization never happen, but a
        // standardized minimum of −2.1 must give a shift of 2.1 + 1e-6
        let y = [-2.1_f64, 0.7, 0.7, 0.7];
        let m = mean(&y);
        let sd = sample_std(&y, m);
        let ds = Dataset::from_matrix(
            "t",
            &Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap(),
            y.iter().map(|v| v * sd + m).collect(),
        )
        .unwrap();
        let s = fit_preprocess(&ds).unwrap();
        let std_min = (y[0] * sd + m - s.target_mean) / s.target_std;
        assert!((s.boxcox_shift - (POSITIVITY_FLOOR - std_min)).abs() < 1e-15);
    }

    #[test]
    fn constant_target_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let ds = Dataset::from_matrix("t", &x, vec![2.0, 2.0]).unwrap();
        assert!(matches!(fit_preprocess(&ds), Err(Error::ConstantTarget)));
    }

    #[test]
    fn constant_numeric_column_dropped_by_name() {
        let s = fit_preprocess(&mixed_dataset()).unwrap();
        assert_eq!(s.dropped_constant, vec!["k"]);
        assert!(s.numeric.iter().all(|n| n.std > 0.0));
        assert_eq!(
            s.feature_names(),
            vec!["a", "color=blue", "color=green", "color=red"]
        );
    }

    #[test]
    fn one_hot_known_and_unseen() {
        let ds = mixed_dataset();
        let s = fit_preprocess(&ds).unwrap();
        let mut table = ds.features.select_rows(&[1, 2]);
        table.rows[1][1] = Cell::Category("purple".into());
        let enc = one_hot_encode(&table, &s).unwrap();
        // vocabulary sorted: blue, green, red
        assert_eq!(&enc.rows[0][1..4], &[Cell::Numeric(0.0), Cell::Numeric(1.0), Cell::Numeric(0.0)]);
        assert_eq!(&enc.rows[1][1..4], &[Cell::Numeric(0.0), Cell::Numeric(0.0), Cell::Numeric(0.0)]);
        assert!(enc.kinds.iter().all(|k| *k == ColumnKind::Numeric));
    }

    #[test]
    fn unseen_category_flows_into_a_learner() {
        let ds = mixed_dataset();
        let s = fit_preprocess(&ds).unwrap();
        let train = apply_preprocess(&ds, &s).unwrap();
        let mut test = ds.select_rows(&[0, 4]);
        test.features.rows[0][1] = Cell::Category("purple".into());
        let test = apply_preprocess(&test, &s).unwrap();
        assert_eq!(test.x.row(0)[1..], [0.0, 0.0, 0.0]);
        let model = crate::learners::fit_linear(&train.x, &train.y).unwrap();
        let pred = model.predict(&test.x).unwrap();
        assert!(pred.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn no_categorical_columns_is_identity() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 3.0], [2.0, 2.0]]).unwrap();
        let ds = Dataset::from_matrix("t", &x, vec![1.0, 2.0, 4.0]).unwrap();
        let s = fit_preprocess(&ds).unwrap();
        assert_eq!(one_hot_encode(&ds.features, &s).unwrap(), ds.features);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let s = fit_preprocess(&mixed_dataset()).unwrap();
        let x = Matrix::from_rows(&[[0.0]]).unwrap();
        let other = Dataset::from_matrix("o", &x, vec![1.0]).unwrap();
        assert!(apply_preprocess(&other, &s).is_err());
    }

    fn random_dataset(seed: u64, n: usize) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let rows: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(0.0..100.0), rng.gen::<f64>()])
            .collect();
        let y = rows.iter().map(|r| r[0].exp() + r[2]).collect();
        Dataset::from_matrix("r", &Matrix::from_rows(&rows).unwrap(), y).unwrap()
    }

    #[test]
    fn training_split_is_standardized() {
        let ds = random_dataset(1, 300);
        let s = fit_preprocess(&ds).unwrap();
        let p = apply_preprocess(&ds, &s).unwrap();
        for j in 0..p.x.ncols() {
            let col = p.x.column(j);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(m.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
        assert_eq!(p.clamped_targets, 0);
        // undo the power transform independently and check the standardized form
        let ys: Vec<f64> = p
            .y
            .iter()
            .map(|&t| inverse_boxcox(t, s.boxcox_lambda) - s.boxcox_shift)
            .collect();
        let m = ys.iter().sum::<f64>() / ys.len() as f64;
        let sd = (ys.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (ys.len() - 1) as f64).sqrt();
        assert!(m.abs() < 1e-8, "mean {m}");
        assert!((sd - 1.0).abs() < 1e-8);
        let min = ys.iter().copied().fold(f64::INFINITY, f64::min) + s.boxcox_shift;
        assert!(min >= POSITIVITY_FLOOR * (1.0 - 1e-6));
    }

    #[test]
    fn test_split_clamps_below_floor() {
        let ds = random_dataset(2, 100);
        let s = fit_preprocess(&ds).unwrap();
        let mut test = ds.select_rows(&[0, 1]);
        test.target[0] = -1e6;
        let p = apply_preprocess(&test, &s).unwrap();
        assert_eq!(p.clamped_targets, 1);
        assert!((p.y[0] - boxcox(POSITIVITY_FLOOR, s.boxcox_lambda)).abs() < 1e-12);
    }

    #[test]
    fn apply_is_deterministic() {
        let ds = random_dataset(3, 50);
        let s = fit_preprocess(&ds).unwrap();
        assert_eq!(apply_preprocess(&ds, &s).unwrap(), apply_preprocess(&ds.clone(), &s).unwrap());
    }

    #[test]
    fn lambda_invariant_to_row_order() {
        let ds = random_dataset(4, 200);
        let rev: Vec<usize> = (0..200).rev().collect();
        let a = fit_preprocess(&ds).unwrap();
        let b = fit_preprocess(&ds.select_rows(&rev)).unwrap();
        assert_eq!(a.boxcox_lambda, b.boxcox_lambda);
    }
}
