use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::files::{prepared_csv, read_prepared_csv, sha256_hex, write_atomic};
use crate::data::{apply_preprocess, fit_preprocess, Dataset, Prepared, PreprocessStats};
use crate::error::{Error, Result};
use crate::eval::kfold_split;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldManifest {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_sha256: String,
    pub test_sha256: String,
    /// Test targets clamped to the positivity floor before Box-Cox.
    pub clamped_test_targets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset: String,
    pub rows_loaded: usize,
    pub rows_dropped_missing: usize,
    pub folds: usize,
    pub fold_seed: u64,
    pub fold_files: Vec<FoldManifest>,
}

/// Prepared train and test splits of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedFold {
    pub fold: usize,
    pub stats: PreprocessStats,
    pub train: Prepared,
    pub test: Prepared,
}

pub fn fold_seed(experiment_seed: u64, dataset: &str) -> u64 {
    seed::derive_str(experiment_seed, &format!("folds/{dataset}"))
}

/// Splits into folds and fits every preprocessing statistic on the
/// training rows of each fold only.
pub fn prepare_folds(ds: &Dataset, folds: usize, fold_seed: u64) -> Result<Vec<PreparedFold>> {
    let plan = kfold_split(ds.n_rows(), folds, fold_seed)?;
    (0..folds)
        .map(|k| {
            let train = ds.select_rows(&plan.train_rows(k));
            let test = ds.select_rows(&plan.test_rows(k));
            let stats = fit_preprocess(&train)?;
            Ok(PreparedFold {
                fold: k,
                train: apply_preprocess(&train, &stats)?,
                test: apply_preprocess(&test, &stats)?,
                stats,
            })
        })
        .collect()
}

pub fn dataset_prep_dir(cfg: &ExperimentConfig, dataset: &str) -> PathBuf {
    cfg.prep_dir().join(dataset)
}

pub fn fold_dir(cfg: &ExperimentConfig, dataset: &str, fold: usize) -> PathBuf {
    dataset_prep_dir(cfg, dataset).join(format!("fold_{fold}"))
}

fn manifest_path(cfg: &ExperimentConfig, dataset: &str) -> PathBuf {
    dataset_prep_dir(cfg, dataset).join("manifest.json")
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Writes `prep/<dataset>/fold_<k>/{train.csv,test.csv,stats.json}` and
/// `prep/<dataset>/manifest.json` for every configured dataset.
pub fn cmd_prep(cfg: &ExperimentConfig) -> Result<Vec<DatasetManifest>> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut manifests = Vec::new();
    for entry in &cfg.datasets {
        let raw = entry.load_raw(cfg.seed)?;
        let ds = crate::data::drop_missing_rows(&raw)?;
        let fseed = fold_seed(cfg.seed, &entry.name);
        let folds = prepare_folds(&ds, cfg.folds, fseed)?;
        let mut fold_files = Vec::new();
        for f in &folds {
            let dir = fold_dir(cfg, &entry.name, f.fold);
            let train = prepared_csv(&f.train)?;
            let test = prepared_csv(&f.test)?;
            write_atomic(&dir.join("train.csv"), &train)?;
            write_atomic(&dir.join("test.csv"), &test)?;
            write_atomic(&dir.join("stats.json"), &to_json(&f.stats)?)?;
            fold_files.push(FoldManifest {
                fold: f.fold,
                n_train: f.train.y.len(),
                n_test: f.test.y.len(),
                train_sha256: sha256_hex(&train),
                test_sha256: sha256_hex(&test),
                clamped_test_targets: f.test.clamped_targets,
            });
        }
        let manifest = DatasetManifest {
            dataset: entry.name.clone(),
            rows_loaded: raw.n_rows(),
            rows_dropped_missing: raw.n_rows() - ds.n_rows(),
            folds: cfg.folds,
            fold_seed: fseed,
            fold_files,
        };
        write_atomic(&manifest_path(cfg, &entry.name), &to_json(&manifest)?)?;
        manifests.push(manifest);
    }
    Ok(manifests)
}

/// Reads a dataset's manifest, checking it matches the config.
pub fn read_manifest(cfg: &ExperimentConfig, dataset: &str) -> Result<DatasetManifest> {
    let path = manifest_path(cfg, dataset);
    let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::InvalidArgument(format!(
            "no prepared folds for `{dataset}` at {}; run `prep` first",
            path.display()
        )),
        _ => Error::io(&path, e),
    })?;
    let m: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    if m.folds != cfg.folds || m.fold_seed != fold_seed(cfg.seed, dataset) {
        return Err(Error::InvalidArgument(format!(
            "prepared folds for `{dataset}` were made with another fold count or seed; rerun `prep`"
        )));
    }
    Ok(m)
}

/// Loads one prepared fold, verifying file digests against the manifest.
pub fn load_fold(cfg: &ExperimentConfig, manifest: &FoldManifest, dataset: &str) -> Result<(Prepared, Prepared)> {
    let dir = fold_dir(cfg, dataset, manifest.fold);
    let check = |p: &Path, want: &str| -> Result<()> {
        let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
        if sha256_hex(&bytes) != want {
            return Err(Error::InvalidArgument(format!("{} changed since `prep`; rerun it", p.display())));
        }
        Ok(())
    };
    let (tr, te) = (dir.join("train.csv"), dir.join("test.csv"));
    check(&tr, &manifest.train_sha256)?;
    check(&te, &manifest.test_sha256)?;
    Ok((read_prepared_csv(&tr)?, read_prepared_csv(&te)?))
}
