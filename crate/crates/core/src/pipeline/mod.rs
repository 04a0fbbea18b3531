//! File-level orchestration behind the command-line tool: fold preparation,
//! the resumable cell run, reporting, and standalone augmentation.

mod config;
mod files;
mod prep;
mod report;
mod run;
mod tool;

pub use config::{DatasetEntry, ExperimentConfig, SyntheticSpec, OUTPUT_DIR_ENV};
pub use files::{dataset_csv, dataset_schema_toml, matrix_csv, prepared_csv, read_prepared_csv, sha256_hex, PREPARED_TARGET_COLUMN};
pub use prep::{cmd_prep, fold_seed, load_fold, prepare_folds, read_manifest, DatasetManifest, FoldManifest, PreparedFold};
pub use report::{cmd_report, missing_cells, ReportArtifacts};
pub use run::{
    augmenter_seed, cmd_run, cmd_run_observed, regressor_seed, ProbabilityContext, RunObserver, RunOptions, RunSummary,
    Split,
};
pub use tool::{cmd_augment, AugmentBundle, AugmentRequest, AugmentSummary};
