use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::files::{matrix_csv, write_atomic};
use crate::augment::{fit_augmenter, AugmentConfig, AugmentModel, MODEL_FORMAT_VERSION};
use crate::data::{
    apply_preprocess, drop_missing_feature_rows, drop_missing_rows, fit_preprocess, load_csv, load_features_csv,
    PreprocessStats, Schema,
};
use crate::error::{Error, Result};

/// Inputs of the standalone augmentation tool. Either `train` (fit a new
/// model) or `model` (load one) must be given.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentRequest {
    pub schema: PathBuf,
    pub train: Option<PathBuf>,
    pub model: Option<PathBuf>,
    /// Rows to transform; defaults to the training CSV.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub save_model: Option<PathBuf>,
    pub config: AugmentConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentSummary {
    pub rows_written: usize,
    pub rows_dropped_missing: usize,
    pub columns: usize,
}

/// Preprocessing statistics plus the fitted augmenter, as saved on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentBundle {
    pub format_version: u32,
    pub stats: PreprocessStats,
    pub model: AugmentModel,
}

impl AugmentBundle {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let b: AugmentBundle = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if b.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "{}: format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                path.display(),
                b.format_version
            )));
        }
        // re-validate the embedded model through its own loader
        AugmentModel::from_json(&b.model.to_json()?)?;
        Ok(b)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_vec(self).map_err(|e| Error::Model(e.to_string()))?;
        write_atomic(path, &json)
    }
}

/// Writes `X''` for the input rows: preprocessed features, then
/// `p_le_1 … p_le_S`. Rows with missing cells are skipped.
pub fn cmd_augment(req: &AugmentRequest) -> Result<AugmentSummary> {
    let schema = Schema::load(&req.schema)?;
    let bundle = match (&req.model, &req.train) {
        (Some(path), _) => {
            let b = AugmentBundle::load(path)?;
            if req.config.s != b.model.s() {
                return Err(Error::InvalidArgument(format!(
                    "--s {} disagrees with the loaded model's S = {}",
                    req.config.s,
                    b.model.s()
                )));
            }
            b
        }
        (None, Some(train)) => {
            let ds = drop_missing_rows(&load_csv(train, &schema)?)?;
            let stats = fit_preprocess(&ds)?;
            let prepared = apply_preprocess(&ds, &stats)?;
            let model = fit_augmenter(&prepared.x, &prepared.y, &req.config, req.seed)?;
            AugmentBundle { format_version: MODEL_FORMAT_VERSION, stats, model }
        }
        (None, None) => return Err(Error::InvalidArgument("either a training CSV or a saved model is required".into())),
    };
    if let Some(path) = &req.save_model {
        bundle.save(path)?;
    }
    let input = req
        .input
        .as_ref()
        .or(req.train.as_ref())
        .ok_or_else(|| Error::InvalidArgument("no input CSV to transform".into()))?;
    let table = load_features_csv(input, &schema)?;
    let kept = drop_missing_feature_rows(&table);
    let x = bundle.stats.transform_features(&kept)?;
    let augmented = bundle.model.transform(&x)?;
    let mut names = bundle.stats.feature_names();
    names.extend((1..=bundle.model.s()).map(|i| format!("p_le_{i}")));
    write_atomic(&req.out, &matrix_csv(&names, &augmented)?)?;
    Ok(AugmentSummary {
        rows_written: augmented.nrows(),
        rows_dropped_missing: table.n_rows() - kept.n_rows(),
        columns: names.len(),
    })
}
