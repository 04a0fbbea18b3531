//! Reading the probability block as a conditional CDF `F̂(y_i | x)` and
//! predicting by expectation, with no downstream regressor.

use serde::{Deserialize, Serialize};

use crate::augment::AugmentModel;
use crate::discretize::ThresholdSet;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Least-squares projection onto non-decreasing vectors (pool adjacent
/// violators).
pub fn rectify(probs: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(probs.len());
    for &p in probs {
        blocks.push((p, 1));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 <= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, c1 + c2);
        }
    }
    let mut out = Vec::with_capacity(probs.len());
    for (s, c) in blocks {
        out.extend(std::iter::repeat_n(s / c as f64, c));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    #[default]
    Median,
    Mean,
}

/// One training-target summary per interval `(y_k, y_{k+1}]`, `k = 0..=S`,
/// with the outer intervals closed at the observed training extremes.
/// An empty interval falls back to the midpoint of its bounds.
pub fn bin_representatives(train_targets: &[f64], thresholds: &ThresholdSet, rule: Representative) -> Result<Vec<f64>> {
    if train_targets.is_empty() {
        return Err(Error::EmptyDataset("no training targets for interval representatives".into()));
    }
    let t = thresholds.thresholds();
    let lo = train_targets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = train_targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); t.len() + 1];
    for &v in train_targets {
        bins[thresholds.interval_of(v)].push(v);
    }
    Ok(bins
        .into_iter()
        .enumerate()
        .map(|(k, mut vals)| {
            if vals.is_empty() {
                let a = if k == 0 { lo } else { t[k - 1] };
                let b = if k == t.len() { hi } else { t[k] };
                return 0.5 * (a + b);
            }
            match rule {
                Representative::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                Representative::Median => {
                    vals.sort_by(f64::total_cmp);
                    let m = vals.len();
                    if m % 2 == 1 {
                        vals[m / 2]
                    } else {
                        0.5 * (vals[m / 2 - 1] + vals[m / 2])
                    }
                }
            }
        })
        .collect())
}

/// A rectified `S`-point CDF and the `S + 1` interval representatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfEstimate {
    pub values: Vec<f64>,
    pub bin_representatives: Vec<f64>,
}

impl CdfEstimate {
    /// Clamps to `[0, 1]` and rectifies the raw probabilities.
    pub fn new(raw: &[f64], bin_representatives: Vec<f64>) -> Result<Self> {
        if bin_representatives.len() != raw.len() + 1 {
            return Err(Error::LengthMismatch { left: raw.len() + 1, right: bin_representatives.len() });
        }
        let clamped: Vec<f64> = raw.iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(CdfEstimate { values: rectify(&clamped), bin_representatives })
    }

    pub fn expectation(&self) -> f64 {
        expectation_predict(&self.values, &self.bin_representatives)
    }
}

/// `Σ_{k=0}^{S} (F_{k+1} − F_k) · rep_k` with `F_0 = 0` and `F_{S+1} = 1`.
pub fn expectation_predict(values: &[f64], representatives: &[f64]) -> f64 {
    debug_assert_eq!(representatives.len(), values.len() + 1);
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (k, &rep) in representatives.iter().enumerate() {
        let f = values.get(k).copied().unwrap_or(1.0);
        acc += (f - prev) * rep;
        prev = f;
    }
    acc
}

/// Regressor-free predictor: augmenter probabilities read as a CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRegressor {
    pub model: AugmentModel,
    pub bin_representatives: Vec<f64>,
}

impl CdfRegressor {
    pub fn new(model: AugmentModel, train_targets: &[f64], rule: Representative) -> Result<Self> {
        let bin_representatives = bin_representatives(train_targets, model.thresholds(), rule)?;
        Ok(CdfRegressor { model, bin_representatives })
    }

    pub fn estimates(&self, x: &Matrix) -> Result<Vec<CdfEstimate>> {
        let p = self.model.probabilities(x)?;
        p.rows_iter().map(|row| CdfEstimate::new(row, self.bin_representatives.clone())).collect()
    }

    pub fn predict_from_probabilities(&self, probs: &Matrix) -> Result<Vec<f64>> {
        probs.check_width(self.model.s())?;
        Ok(probs
            .rows_iter()
            .map(|row| {
                let f = rectify(&row.iter().map(|p| p.clamp(0.0, 1.0)).collect::<Vec<_>>());
                expectation_predict(&f, &self.bin_representatives)
            })
            .collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.predict_from_probabilities(&self.model.probabilities(x)?)
    }
}

/// Per row: probabilities, rectify, expectation.
pub fn cdf_regressor(model: &AugmentModel, train_targets: &[f64], x_test: &Matrix) -> Result<Vec<f64>> {
    CdfRegressor::new(model.clone(), train_targets, Representative::Median)?.predict(x_test)
}
