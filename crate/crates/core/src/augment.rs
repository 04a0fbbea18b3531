//! Augmentation by threshold classifiers.
//!
//! The training target is cut at `S` thresholds `y_1 < … < y_S`; classifier
//! `i` learns `1{y ≤ y_i}` from `X`, and its predicted probability becomes
//! feature `d + i` of the augmented table `X'' = X ∪ X'`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Prepared;
use crate::discretize::{encode_labels, ClassLabels, Discretization, LabelEncoding, ThresholdSet};
use crate::error::{Error, Result};
use crate::eval::rmse;
use crate::learners::{fit_regressor, ColumnStore, ForestClassifier, ForestParams, GridSearchSpec, RegressorKind};
use crate::matrix::Matrix;
use crate::seed;

/// Version written into saved models; loading rejects anything else.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub s: usize,
    pub discretization: Discretization,
    pub encoding: LabelEncoding,
    /// Forest settings shared by every classifier.
    pub forest: ForestParams,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            s: 32,
            discretization: Discretization::EqualFrequency,
            encoding: LabelEncoding::BinaryPerThreshold,
            forest: ForestParams::default(),
        }
    }
}

impl AugmentConfig {
    pub fn with_s(s: usize) -> Self {
        AugmentConfig { s, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifiers {
    /// Classifier `i` predicts `1{y ≤ y_{i+1}}`.
    PerThreshold { forests: Vec<ForestClassifier> },
    /// One forest over the `S + 1` intervals; column `i` sums the
    /// probabilities of intervals `0..=i`.
    Multiclass { forest: ForestClassifier },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentModel {
    thresholds: ThresholdSet,
    classifiers: Classifiers,
    input_dim: usize,
}

/// Seed of classifier `i` under `master_seed`.
pub fn classifier_seed(master_seed: u64, i: usize) -> u64 {
    seed::derive(seed::derive_str(master_seed, "clf"), i as u64)
}

/// Fits thresholds and classifiers on training data only.
pub fn fit_augmenter(x_train: &Matrix, y_train: &[f64], config: &AugmentConfig, master_seed: u64) -> Result<AugmentModel> {
    if x_train.nrows() != y_train.len() {
        return Err(Error::LengthMismatch { left: x_train.nrows(), right: y_train.len() });
    }
    if config.s == 0 {
        return Err(Error::InvalidArgument("S must be at least 1".into()));
    }
    if config.forest.n_trees == 0 {
        return Err(Error::InvalidArgument("classifier forests need at least one tree".into()));
    }
    if y_train.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training target has non-finite values".into()));
    }
    let thresholds = ThresholdSet::fit(y_train, config.s, config.discretization)?;
    let store = ColumnStore::new(x_train);
    let classifiers = match encode_labels(y_train, &thresholds, config.encoding) {
        ClassLabels::Binary(per_threshold) => {
            let forests = per_threshold
                .par_iter()
                .enumerate()
                .map(|(i, labels)| {
                    let labels: Vec<u32> = labels.iter().map(|&l| u32::from(l)).collect();
                    ForestClassifier::fit_store(&store, &labels, 2, &config.forest, classifier_seed(master_seed, i))
                })
                .collect();
            Classifiers::PerThreshold { forests }
        }
        ClassLabels::Multiclass(intervals) => {
            let labels: Vec<u32> = intervals.iter().map(|&k| k as u32).collect();
            let forest = ForestClassifier::fit_store(
                &store,
                &labels,
                config.s + 1,
                &config.forest,
                classifier_seed(master_seed, 0),
            );
            Classifiers::Multiclass { forest }
        }
    };
    Ok(AugmentModel { thresholds, classifiers, input_dim: x_train.ncols() })
}

impl AugmentModel {
    pub fn thresholds(&self) -> &ThresholdSet {
        &self.thresholds
    }

    pub fn classifiers(&self) -> &Classifiers {
        &self.classifiers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn s(&self) -> usize {
        self.thresholds.len()
    }

    pub fn output_dim(&self) -> usize {
        self.input_dim + self.s()
    }

    /// The `n × S` block `X'` of estimated `P(y ≤ y_i | x)`.
    pub fn probabilities(&self, x: &Matrix) -> Result<Matrix> {
        x.check_width(self.input_dim)?;
        let (n, s) = (x.nrows(), self.s());
        let mut out = Matrix::zeros(n, s);
        match &self.classifiers {
            Classifiers::PerThreshold { forests } => {
                let cols: Vec<Vec<f64>> =
                    forests.par_iter().map(|f| f.predict_proba(x)).collect::<Result<_>>()?;
                for (i, col) in cols.iter().enumerate() {
                    for (r, &p) in col.iter().enumerate() {
                        out.set(r, i, p);
                    }
                }
            }
            Classifiers::Multiclass { forest } => {
                let t = forest.trees().len() as f64;
                let proba = forest.predict_class_proba(x)?;
                for r in 0..n {
                    // cumulate integer vote counts so the result stays on the 1/T grid
                    let mut votes = 0.0;
                    for i in 0..s {
                        votes += (proba.get(r, i) * t).round();
                        out.set(r, i, votes / t);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `X'' = X ∪ X'`: the input columns unchanged, then the `S` probability
    /// columns in threshold order.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        x.hstack(&self.probabilities(x)?)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&SavedModel { format_version: MODEL_FORMAT_VERSION, model: self.clone() })
            .map_err(|e| Error::Model(format!("cannot serialize model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let version: VersionProbe =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("unreadable model file: {e}")))?;
        if version.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                version.format_version
            )));
        }
        let saved: SavedModel =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("corrupt model file: {e}")))?;
        let m = saved.model;
        ThresholdSet::new(m.thresholds.thresholds().to_vec(), m.thresholds.method())?;
        let consistent = match &m.classifiers {
            Classifiers::PerThreshold { forests } => {
                forests.len() == m.s() && forests.iter().all(|f| f.n_features() == m.input_dim && f.n_classes() == 2)
            }
            Classifiers::Multiclass { forest } => forest.n_features() == m.input_dim && forest.n_classes() == m.s() + 1,
        };
        if !consistent {
            return Err(Error::Model("classifiers do not match thresholds or input width".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    model: AugmentModel,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

/// Train and test RMSE of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmRmse {
    pub train: f64,
    pub test: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmPair {
    pub native: ArmRmse,
    pub augmented: ArmRmse,
}

/// Seeds for one fold comparison. Both arms fit their regressor from the
/// same `regressor` seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmSeeds {
    pub regressor: u64,
    pub augmenter: u64,
}

impl ArmSeeds {
    pub fn from_master(master: u64) -> Self {
        ArmSeeds {
            regressor: seed::derive_str(master, "regressor"),
            augmenter: seed::derive_str(master, "augmenter"),
        }
    }
}

/// Fits and scores a regressor on `X` alone.
pub fn run_native(train: &Prepared, test: &Prepared, kind: RegressorKind, grid: &GridSearchSpec, seeds: ArmSeeds) -> Result<ArmRmse> {
    let model = fit_regressor(&train.x, &train.y, kind, grid, seeds.regressor)?;
    Ok(ArmRmse {
        train: rmse(&train.y, &model.predict(&train.x)?)?,
        test: rmse(&test.y, &model.predict(&test.x)?)?,
    })
}

/// Fits the augmenter on the training split, transforms both splits, then
/// fits and scores the regressor on `X''`.
pub fn run_augmented(
    train: &Prepared,
    test: &Prepared,
    kind: RegressorKind,
    config: &AugmentConfig,
    grid: &GridSearchSpec,
    seeds: ArmSeeds,
) -> Result<(ArmRmse, AugmentModel)> {
    let am = fit_augmenter(&train.x, &train.y, config, seeds.augmenter)?;
    let xtr = am.transform(&train.x)?;
    let xte = am.transform(&test.x)?;
    let model = fit_regressor(&xtr, &train.y, kind, grid, seeds.regressor)?;
    let arm = ArmRmse {
        train: rmse(&train.y, &model.predict(&xtr)?)?,
        test: rmse(&test.y, &model.predict(&xte)?)?,
    };
    Ok((arm, am))
}

/// RMSE (Box-Cox scale) of the native and augmented arms on one fold.
pub fn run_native_vs_augmented(
    train: &Prepared,
    test: &Prepared,
    kind: RegressorKind,
    config: &AugmentConfig,
    grid: &GridSearchSpec,
    seeds: ArmSeeds,
) -> Result<ArmPair> {
    let native = run_native(train, test, kind, grid, seeds)?;
    let (augmented, _) = run_augmented(train, test, kind, config, grid, seeds)?;
    Ok(ArmPair { native, augmented })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn line_data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = seed::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let y = rows.iter().map(|r| r[0]).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    fn small(s: usize) -> AugmentConfig {
        let mut c = AugmentConfig::with_s(s);
        c.forest.n_trees = 20;
        c
    }

    #[test]
    fn median_split_width() {
        let (x, y) = line_data(100, 1);
        let am = fit_augmenter(&x, &y, &small(1), 7).unwrap();
        assert!(matches!(am.classifiers(), Classifiers::PerThreshold { forests } if forests.len() == 1));
        assert_eq!(am.transform(&x).unwrap().ncols(), 3);
    }

    #[test]
    fn shape_and_passthrough() {
        let (x, y) = line_data(60, 2);
        let am = fit_augmenter(&x, &y, &small(3), 7).unwrap();
        let probe = x.select_rows(&[0, 1, 2, 3]);
        let out = am.transform(&probe).unwrap();
        assert_eq!((out.nrows(), out.ncols()), (4, 5));
        for r in 0..4 {
            assert_eq!(&out.row(r)[..2], probe.row(r));
        }
        assert_eq!(out, am.transform(&probe).unwrap());
    }

    #[test]
    fn determined_target_fits_training_labels_exactly() {
        let (x, y) = line_data(200, 3);
        let am = fit_augmenter(&x, &y, &small(8), 1).unwrap();
        let Classifiers::PerThreshold { forests } = am.classifiers() else { panic!() };
        let ClassLabels::Binary(labels) = encode_labels(&y, am.thresholds(), LabelEncoding::BinaryPerThreshold) else {
            panic!()
        };
        for (f, lab) in forests.iter().zip(&labels) {
            let p = f.predict_proba(&x).unwrap();
            let acc = p.iter().zip(lab).filter(|(p, &l)| (**p >= 0.5) == (l == 1)).count();
            assert_eq!(acc, y.len());
        }
    }

    #[test]
    fn rows_below_every_threshold_get_high_probabilities() {
        let (x, y) = line_data(400, 4);
        let am = fit_augmenter(&x, &y, &small(4), 2).unwrap();
        let probe = Matrix::from_rows(&[[0.0, 0.5], [0.001, 0.2]]).unwrap();
        let p = am.probabilities(&probe).unwrap();
        assert!(p.as_slice().iter().all(|&v| v >= 0.9), "{:?}", p.as_slice());
    }

    #[test]
    fn probabilities_on_vote_grid() {
        let (x, y) = line_data(150, 5);
        for encoding in [LabelEncoding::BinaryPerThreshold, LabelEncoding::MulticlassInterval] {
            let mut c = AugmentConfig::with_s(6);
            c.encoding = encoding;
            let p = fit_augmenter(&x, &y, &c, 3).unwrap().probabilities(&x).unwrap();
            for &v in p.as_slice() {
                assert!((0.0..=1.0).contains(&v));
                assert_eq!((v * 100.0).round() / 100.0, v);
            }
        }
    }

    #[test]
    fn multiclass_columns_are_cumulative() {
        let (x, y) = line_data(150, 6);
        let mut c = small(5);
        c.encoding = LabelEncoding::MulticlassInterval;
        let p = fit_augmenter(&x, &y, &c, 3).unwrap().probabilities(&x).unwrap();
        for r in 0..p.nrows() {
            assert!(p.row(r).windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn width_mismatch() {
        let (x, y) = line_data(50, 7);
        let am = fit_augmenter(&x, &y, &small(2), 3).unwrap();
        assert!(matches!(am.transform(&Matrix::zeros(3, 3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_thresholds_rejected() {
        let (x, y) = line_data(50, 7);
        assert!(fit_augmenter(&x, &y, &small(0), 3).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let (x, y) = line_data(80, 8);
        for encoding in [LabelEncoding::BinaryPerThreshold, LabelEncoding::MulticlassInterval] {
            let mut c = small(4);
            c.encoding = encoding;
            let am = fit_augmenter(&x, &y, &c, 11).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            am.save(&path).unwrap();
            let back = AugmentModel::load(&path).unwrap();
            assert_eq!(back, am);
            assert_eq!(back.transform(&x).unwrap(), am.transform(&x).unwrap());
        }
    }

    #[test]
    fn unknown_format_version_rejected() {
        let (x, y) = line_data(40, 9);
        let text = fit_augmenter(&x, &y, &small(1), 1).unwrap().to_json().unwrap();
        let bumped = text.replacen("\"format_version\":1", "\"format_version\":99", 1);
        assert!(matches!(AugmentModel::from_json(&bumped), Err(Error::Model(_))));
    }

    #[test]
    fn parallel_matches_sequential() {
        let (x, y) = line_data(120, 10);
        let c = small(5);
        let par = fit_augmenter(&x, &y, &c, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let seq = pool.install(|| fit_augmenter(&x, &y, &c, 5).unwrap());
        assert_eq!(par, seq);
    }
}
