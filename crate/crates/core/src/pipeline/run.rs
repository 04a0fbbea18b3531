use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::files::{sha256_hex, write_atomic};
use super::prep::{load_fold, read_manifest, FoldManifest};
use crate::augment::{fit_augmenter, ArmSeeds};
use crate::data::Prepared;
use crate::error::{Error, Result};
use crate::eval::{rmse, Arm, Cell, CellKey, ExperimentReport};
use crate::learners::{fit_regressor, GridSearchSpec, RegressorKind};
use crate::matrix::Matrix;
use crate::seed;

/// Where a probability block came from, for observers.
#[derive(Debug, Clone, Copy)]
pub struct ProbabilityContext<'a> {
    pub dataset: &'a str,
    pub fold: usize,
    pub s: usize,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Hook called with every probability block the run computes.
pub trait RunObserver: Sync {
    fn probabilities(&self, ctx: ProbabilityContext<'_>, probs: &Matrix);
}

impl<F: Fn(ProbabilityContext<'_>, &Matrix) + Sync> RunObserver for F {
    fn probabilities(&self, ctx: ProbabilityContext<'_>, probs: &Matrix) {
        self(ctx, probs)
    }
}

struct NoObserver;

impl RunObserver for NoObserver {
    fn probabilities(&self, _: ProbabilityContext<'_>, _: &Matrix) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Skip cells already in the store.
    pub resume: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunSummary {
    pub cells: usize,
    pub computed: usize,
    pub reused: usize,
}

/// Everything that determines a cell's value; its digest names the store file.
#[derive(Serialize)]
struct CellFingerprint<'a> {
    dataset: &'a str,
    fold: usize,
    arm: Arm,
    s: usize,
    regressor: RegressorKind,
    regressor_seed: u64,
    augmenter_seed: Option<u64>,
    trees: usize,
    discretization: crate::discretize::Discretization,
    encoding: crate::discretize::LabelEncoding,
    grid: &'a GridSearchSpec,
    train_sha256: &'a str,
    test_sha256: &'a str,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredCell {
    dataset: String,
    regressor: RegressorKind,
    arm: Arm,
    fold: usize,
    s: usize,
    rmse_train: f64,
    rmse_test: f64,
}

pub fn regressor_seed(experiment_seed: u64, dataset: &str, fold: usize, kind: RegressorKind) -> u64 {
    seed::derive_str(experiment_seed, &format!("regressor/{dataset}/{fold}/{kind}"))
}

pub fn augmenter_seed(experiment_seed: u64, dataset: &str, fold: usize, s: usize) -> u64 {
    seed::derive_str(experiment_seed, &format!("augmenter/{dataset}/{fold}/{s}"))
}

/// One unit of work: the native arm of a fold (`s = None`), or the augmented
/// arm at one S, covering every regressor.
#[derive(Debug, Clone)]
struct Job {
    dataset: String,
    fold: FoldManifest,
    s: Option<usize>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    observer: &'a dyn RunObserver,
    resume: bool,
}

impl Ctx<'_> {
    fn cell_path(&self, job: &Job, kind: RegressorKind) -> Result<PathBuf> {
        let fp = CellFingerprint {
            dataset: &job.dataset,
            fold: job.fold.fold,
            arm: if job.s.is_some() { Arm::Augmented } else { Arm::Native },
            s: job.s.unwrap_or(0),
            regressor: kind,
            regressor_seed: regressor_seed(self.cfg.seed, &job.dataset, job.fold.fold, kind),
            augmenter_seed: job.s.map(|s| augmenter_seed(self.cfg.seed, &job.dataset, job.fold.fold, s)),
            trees: self.cfg.trees,
            discretization: self.cfg.discretization,
            encoding: self.cfg.encoding,
            grid: &self.cfg.grid,
            train_sha256: &job.fold.train_sha256,
            test_sha256: &job.fold.test_sha256,
        };
        let json = serde_json::to_vec(&fp).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(self.cfg.cells_dir().join(format!("{}.json", sha256_hex(&json))))
    }

    /// Returns `(computed, reused)` cell counts.
    fn run_job(&self, job: &Job) -> Result<(usize, usize)> {
        let mut todo = Vec::new();
        for &kind in &self.cfg.regressors {
            let path = self.cell_path(job, kind)?;
            if !(self.resume && read_cell(&path).is_ok()) {
                todo.push((kind, path));
            }
        }
        let reused = self.cfg.regressors.len() - todo.len();
        if todo.is_empty() {
            return Ok((0, reused));
        }
        let (train, test) = load_fold(self.cfg, &job.fold, &job.dataset)?;
        let (xtr, xte) = match job.s {
            None => (train.x.clone(), test.x.clone()),
            Some(s) => {
                let seed = augmenter_seed(self.cfg.seed, &job.dataset, job.fold.fold, s);
                let am = fit_augmenter(&train.x, &train.y, &self.cfg.augment_config(s), seed)?;
                let ptr = am.probabilities(&train.x)?;
                let pte = am.probabilities(&test.x)?;
                let ctx = |split| ProbabilityContext { dataset: &job.dataset, fold: job.fold.fold, s, split };
                self.observer.probabilities(ctx(Split::Train), &ptr);
                self.observer.probabilities(ctx(Split::Test), &pte);
                (train.x.hstack(&ptr)?, test.x.hstack(&pte)?)
            }
        };
        for (kind, path) in &todo {
            let seeds = ArmSeeds {
                regressor: regressor_seed(self.cfg.seed, &job.dataset, job.fold.fold, *kind),
                augmenter: 0,
            };
            let (rmse_train, rmse_test) = score(&xtr, &train, &xte, &test, *kind, &self.cfg.grid, seeds)?;
            let cell = StoredCell {
                dataset: job.dataset.clone(),
                regressor: *kind,
                arm: if job.s.is_some() { Arm::Augmented } else { Arm::Native },
                fold: job.fold.fold,
                s: job.s.unwrap_or(0),
                rmse_train,
                rmse_test,
            };
            let json = serde_json::to_vec(&cell).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            write_atomic(path, &json)?;
        }
        Ok((todo.len(), reused))
    }
}

fn score(
    xtr: &Matrix,
    train: &Prepared,
    xte: &Matrix,
    test: &Prepared,
    kind: RegressorKind,
    grid: &GridSearchSpec,
    seeds: ArmSeeds,
) -> Result<(f64, f64)> {
    let model = fit_regressor(xtr, &train.y, kind, grid, seeds.regressor)?;
    Ok((rmse(&train.y, &model.predict(xtr)?)?, rmse(&test.y, &model.predict(xte)?)?))
}

fn read_cell(path: &std::path::Path) -> Result<StoredCell> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Model(format!("{}: {e}", path.display())))
}

pub fn cmd_run(cfg: &ExperimentConfig, options: RunOptions) -> Result<RunSummary> {
    cmd_run_observed(cfg, options, &NoObserver)
}

/// Computes every requested cell, then writes `cells.csv` in canonical
/// order. Native cells are listed once per S.
pub fn cmd_run_observed(cfg: &ExperimentConfig, options: RunOptions, observer: &dyn RunObserver) -> Result<RunSummary> {
    let mut jobs = Vec::new();
    let s_values = cfg.sorted_s_values();
    let mut manifests = Vec::new();
    for entry in &cfg.datasets {
        let m = read_manifest(cfg, &entry.name)?;
        for f in &m.fold_files {
            jobs.push(Job { dataset: entry.name.clone(), fold: f.clone(), s: None });
            for &s in &s_values {
                jobs.push(Job { dataset: entry.name.clone(), fold: f.clone(), s: Some(s) });
            }
        }
        manifests.push(m);
    }
    // larger S first so the slowest jobs start early
    jobs.sort_by_key(|j| std::cmp::Reverse(j.s.unwrap_or(0)));
    std::fs::create_dir_all(cfg.cells_dir()).map_err(|e| Error::io(cfg.cells_dir(), e))?;

    let ctx = Ctx { cfg, observer, resume: options.resume };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(Job, Result<(usize, usize)>)> =
        pool.install(|| jobs.into_par_iter().map(|j| { let r = ctx.run_job(&j); (j, r) }).collect());

    let mut summary = RunSummary::default();
    let mut failures = Vec::new();
    for (job, r) in &results {
        match r {
            Ok((c, u)) => {
                summary.computed += c;
                summary.reused += u;
            }
            Err(e) => failures.push(format!(
                "  {}/fold {}/{}: {e}",
                job.dataset,
                job.fold.fold,
                job.s.map_or("native".to_string(), |s| format!("augmented S={s}"))
            )),
        }
    }
    if !failures.is_empty() {
        failures.sort();
        return Err(Error::CellsFailed { count: failures.len(), details: failures.join("\n") });
    }

    let mut report = ExperimentReport::new();
    for m in &manifests {
        for f in &m.fold_files {
            for &kind in &cfg.regressors {
                let native = read_cell(&ctx.cell_path(&Job { dataset: m.dataset.clone(), fold: f.clone(), s: None }, kind)?)?;
                for &s in &s_values {
                    let aug_job = Job { dataset: m.dataset.clone(), fold: f.clone(), s: Some(s) };
                    let aug = read_cell(&ctx.cell_path(&aug_job, kind)?)?;
                    for (arm, c) in [(Arm::Native, &native), (Arm::Augmented, &aug)] {
                        let key = CellKey { dataset: m.dataset.clone(), regressor: kind, arm, s, fold: f.fold };
                        report.insert(Cell { key, rmse_train: c.rmse_train, rmse_test: c.rmse_test })?;
                    }
                }
            }
        }
    }
    summary.cells = report.len();
    report.write_csv(&cfg.cells_csv())?;
    Ok(summary)
}
