//! Regression with classifier-built features.
//!
//! The target is cut into `S` thresholds, one random-forest classifier per
//! threshold estimates `P(y ≤ y_i | x)`, and those probabilities are appended
//! to the inputs of an ordinary regressor. Around that core sit the
//! preprocessing chain, from-scratch learners, the cross-validated comparison
//! protocol with its statistics, and a regressor-free CDF readout.

pub mod augment;
pub mod cdf;
pub mod data;
pub mod discretize;
pub mod error;
pub mod eval;
pub mod learners;
pub mod matrix;
pub mod pipeline;
pub mod seed;
pub mod synth;

pub use augment::{fit_augmenter, run_native_vs_augmented, AugmentConfig, AugmentModel};
pub use cdf::{cdf_regressor, expectation_predict, rectify, CdfEstimate, CdfRegressor};
pub use data::{Dataset, FeatureTable, Prepared, PreprocessStats, Schema};
pub use discretize::{Discretization, LabelEncoding, ThresholdSet};
pub use error::{Error, Result};
pub use eval::{ExperimentReport, FoldPlan};
pub use learners::{FittedRegressor, RegressorKind};
pub use matrix::Matrix;
