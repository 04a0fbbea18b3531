//! Threshold placement on the training target and class-label encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    EqualFrequency,
    EqualWidth,
}

impl std::fmt::Display for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Discretization::EqualFrequency => "equal_frequency",
            Discretization::EqualWidth => "equal_width",
        })
    }
}

/// `S` strictly increasing cut points `y_1 < … < y_S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    thresholds: Vec<f64>,
    method: Discretization,
}

impl ThresholdSet {
    /// Validates ordering; used when thresholds come from outside (model files).
    pub fn new(thresholds: Vec<f64>, method: Discretization) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::Discretization("need at least one threshold".into()));
        }
        if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Discretization(format!(
                "thresholds must be finite and strictly increasing: {thresholds:?}"
            )));
        }
        Ok(ThresholdSet { thresholds, method })
    }

    pub fn fit(y: &[f64], s: usize, method: Discretization) -> Result<Self> {
        match method {
            Discretization::EqualFrequency => equal_frequency_thresholds(y, s),
            Discretization::EqualWidth => equal_width_thresholds(y, s),
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn method(&self) -> Discretization {
        self.method
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Index of the interval `(y_k, y_{k+1}]` holding `v`, in `0..=S`.
    pub fn interval_of(&self, v: f64) -> usize {
        self.thresholds.partition_point(|&t| t < v)
    }
}

/// Linear-interpolation quantile of sorted data at `level ∈ [0, 1]`:
/// position `h = (n − 1)·level`, value `x[⌊h⌋] + (h − ⌊h⌋)(x[⌊h⌋+1] − x[⌊h⌋])`.
pub fn interpolated_quantile(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Thresholds at the `i/(S+1)` empirical quantiles, `i = 1..=S`.
pub fn equal_frequency_thresholds(y: &[f64], s: usize) -> Result<ThresholdSet> {
    if s == 0 {
        return Err(Error::InvalidArgument("S must be at least 1".into()));
    }
    if s >= y.len() {
        return Err(Error::Discretization(format!(
            "S = {s} needs more than {} training targets",
            y.len()
        )));
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < s + 1 {
        return Err(Error::Discretization(format!(
            "S = {s} needs at least {} distinct target values, found {}",
            s + 1,
            distinct.len()
        )));
    }
    let n1 = sorted.len() - 1;
    let thresholds: Vec<f64> = (1..=s)
        .map(|i| {
            // h = (n − 1)·i/(S+1) split exactly into integer and fractional parts
            let (lo, rem) = ((n1 * i) / (s + 1), (n1 * i) % (s + 1));
            if rem == 0 {
                sorted[lo]
            } else {
                let frac = rem as f64 / (s + 1) as f64;
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            }
        })
        .collect();
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Discretization(format!(
            "tied target values collapse thresholds for S = {s}"
        )));
    }
    Ok(ThresholdSet {
        thresholds,
        method: Discretization::EqualFrequency,
    })
}

/// `min + k·(max − min)/(S+1)`, `k = 1..=S`.
pub fn equal_width_thresholds(y: &[f64], s: usize) -> Result<ThresholdSet> {
    if s == 0 {
        return Err(Error::InvalidArgument("S must be at least 1".into()));
    }
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Discretization("target is constant".into()));
    }
    let width = (max - min) / (s + 1) as f64;
    let thresholds = (1..=s).map(|k| min + k as f64 * width).collect();
    ThresholdSet::new(thresholds, Discretization::EqualWidth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelEncoding {
    /// One 0/1 problem per threshold: `1{y ≤ y_i}`.
    BinaryPerThreshold,
    /// One problem with `S + 1` interval classes.
    MulticlassInterval,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassLabels {
    /// `labels[i][r] = 1{y_r ≤ y_{i+1}}`.
    Binary(Vec<Vec<u8>>),
    /// Interval index per row, in `0..=S`.
    Multiclass(Vec<usize>),
}

pub fn encode_labels(y: &[f64], ts: &ThresholdSet, encoding: LabelEncoding) -> ClassLabels {
    match encoding {
        LabelEncoding::BinaryPerThreshold => ClassLabels::Binary(
            ts.thresholds
                .iter()
                .map(|&t| y.iter().map(|&v| u8::from(v <= t)).collect())
                .collect(),
        ),
        LabelEncoding::MulticlassInterval => {
            ClassLabels::Multiclass(y.iter().map(|&v| ts.interval_of(v)).collect())
        }
    }
}
