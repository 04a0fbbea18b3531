use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::plot::SCurve;
use super::ranks::{friedman_nemenyi, FriedmanNemenyi};
use super::ttest::{paired_t_test, PairedTTest};
use crate::error::{Error, Result};
use crate::learners::RegressorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Native,
    Augmented,
}

impl Arm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::Native => "native",
            Arm::Augmented => "augmented",
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(Arm::Native),
            "augmented" => Ok(Arm::Augmented),
            other => Err(Error::InvalidArgument(format!("unknown arm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub regressor: RegressorKind,
    pub arm: Arm,
    pub s: usize,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: CellKey,
    pub rmse_train: f64,
    pub rmse_test: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Win,
    Tie,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WinTieLoss {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

impl WinTieLoss {
    pub fn total(&self) -> usize {
        self.wins + self.ties + self.losses
    }
}

impl std::fmt::Display for WinTieLoss {
    /// Losses first, as in the published tables.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} / {} / {}", self.losses, self.ties, self.wins)
    }
}

/// Comparison of both arms on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmComparison {
    pub native_mean: f64,
    pub augmented_mean: f64,
    pub test: PairedTTest,
    pub verdict: Verdict,
}

const CSV_HEADER: &str = "dataset,regressor,arm,S,fold,rmse_train,rmse_test";

/// Raw per-fold RMSE cells and everything derived from them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    cells: BTreeMap<CellKey, (f64, f64)>,
}

impl ExperimentReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cell: Cell) -> Result<()> {
        if !(cell.rmse_train >= 0.0 && cell.rmse_test >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid RMSE in cell {:?}", cell.key)));
        }
        self.cells.insert(cell.key, (cell.rmse_train, cell.rmse_test));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, key: &CellKey) -> Option<Cell> {
        self.cells.get(key).map(|&(rmse_train, rmse_test)| Cell { key: key.clone(), rmse_train, rmse_test })
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells
            .iter()
            .map(|(k, &(rmse_train, rmse_test))| Cell { key: k.clone(), rmse_train, rmse_test })
    }

    pub fn datasets(&self) -> Vec<String> {
        self.cells.keys().map(|k| k.dataset.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn regressors(&self) -> Vec<RegressorKind> {
        self.cells.keys().map(|k| k.regressor).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn s_values(&self) -> Vec<usize> {
        self.cells.keys().map(|k| k.s).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn folds(&self) -> Vec<usize> {
        self.cells.keys().map(|k| k.fold).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Per-fold `(train, test)` RMSEs, ordered by fold; errors if any fold
    /// present elsewhere in the report is missing here.
    pub fn fold_rmses(&self, dataset: &str, regressor: RegressorKind, arm: Arm, s: usize) -> Result<Vec<(f64, f64)>> {
        let folds = self.folds();
        let mut out = Vec::with_capacity(folds.len());
        let mut missing = Vec::new();
        for fold in folds {
            let key = CellKey { dataset: dataset.to_string(), regressor, arm, s, fold };
            match self.cells.get(&key) {
                Some(&v) => out.push(v),
                None => missing.push(format!("{dataset}/{regressor}/{arm}/S={s}/fold={fold}")),
            }
        }
        if !missing.is_empty() || out.is_empty() {
            if missing.is_empty() {
                missing.push(format!("{dataset}/{regressor}/{arm}/S={s}"));
            }
            return Err(Error::MissingCells(missing.join(", ")));
        }
        Ok(out)
    }

    fn test_rmses(&self, dataset: &str, regressor: RegressorKind, arm: Arm, s: usize) -> Result<Vec<f64>> {
        Ok(self.fold_rmses(dataset, regressor, arm, s)?.into_iter().map(|(_, t)| t).collect())
    }

    pub fn mean_test_rmse(&self, dataset: &str, regressor: RegressorKind, arm: Arm, s: usize) -> Result<f64> {
        Ok(mean(&self.test_rmses(dataset, regressor, arm, s)?))
    }

    pub fn compare(&self, dataset: &str, regressor: RegressorKind, s: usize) -> Result<ArmComparison> {
        let native = self.test_rmses(dataset, regressor, Arm::Native, s)?;
        let augmented = self.test_rmses(dataset, regressor, Arm::Augmented, s)?;
        let test = paired_t_test(&augmented, &native)?;
        let (native_mean, augmented_mean) = (mean(&native), mean(&augmented));
        let verdict = if !test.significant_at_5pct() {
            Verdict::Tie
        } else if augmented_mean < native_mean {
            Verdict::Win
        } else if augmented_mean > native_mean {
            Verdict::Loss
        } else {
            Verdict::Tie
        };
        Ok(ArmComparison { native_mean, augmented_mean, test, verdict })
    }

    /// Verdicts of the augmented arm against the native arm over all datasets.
    pub fn win_tie_loss(&self, regressor: RegressorKind, s: usize) -> Result<WinTieLoss> {
        let mut wtl = WinTieLoss::default();
        for d in self.datasets() {
            match self.compare(&d, regressor, s)?.verdict {
                Verdict::Win => wtl.wins += 1,
                Verdict::Tie => wtl.ties += 1,
                Verdict::Loss => wtl.losses += 1,
            }
        }
        Ok(wtl)
    }

    /// Method labels and `D × M` mean test RMSEs with one method per
    /// (regressor, arm) at the given S.
    pub fn method_matrix(&self, s: usize) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
        let regs = self.regressors();
        let mut names = Vec::new();
        for r in &regs {
            for arm in [Arm::Native, Arm::Augmented] {
                names.push(format!("{r}-{arm}"));
            }
        }
        let mut matrix = Vec::new();
        for d in self.datasets() {
            let mut row = Vec::with_capacity(names.len());
            for &r in &regs {
                for arm in [Arm::Native, Arm::Augmented] {
                    row.push(self.mean_test_rmse(&d, r, arm, s)?);
                }
            }
            matrix.push(row);
        }
        Ok((names, matrix))
    }

    pub fn friedman(&self, s: usize) -> Result<(Vec<String>, FriedmanNemenyi)> {
        let (names, matrix) = self.method_matrix(s)?;
        Ok((names, friedman_nemenyi(&matrix)?))
    }

    /// Mean train and test RMSE across S for one dataset and regressor,
    /// with the native arm as baseline.
    pub fn s_curve(&self, dataset: &str, regressor: RegressorKind) -> Result<SCurve> {
        let s_values = self.s_values();
        let mut train = Vec::new();
        let mut test = Vec::new();
        for &s in &s_values {
            let v = self.fold_rmses(dataset, regressor, Arm::Augmented, s)?;
            train.push(mean(&v.iter().map(|p| p.0).collect::<Vec<_>>()));
            test.push(mean(&v.iter().map(|p| p.1).collect::<Vec<_>>()));
        }
        let base_s = *s_values.first().ok_or_else(|| Error::MissingCells("no S values".into()))?;
        let native = self.fold_rmses(dataset, regressor, Arm::Native, base_s)?;
        Ok(SCurve {
            title: format!("{dataset} / {regressor}"),
            s_values,
            train,
            test,
            native_train: mean(&native.iter().map(|p| p.0).collect::<Vec<_>>()),
            native_test: mean(&native.iter().map(|p| p.1).collect::<Vec<_>>()),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (k, (tr, te)) in &self.cells {
            let _ = writeln!(out, "{},{},{},{},{},{:?},{:?}", k.dataset, k.regressor, k.arm, k.s, k.fold, tr, te);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Schema(format!("cell CSV header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::Schema(format!("cell CSV header must be `{CSV_HEADER}`")));
        }
        let mut report = ExperimentReport::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Schema(format!("cell CSV row {}: {e}", line + 2)))?;
            let bad = |what: &str| Error::Schema(format!("cell CSV row {}: bad {what}", line + 2));
            let key = CellKey {
                dataset: rec[0].to_string(),
                regressor: rec[1].parse()?,
                arm: rec[2].parse()?,
                s: rec[3].parse().map_err(|_| bad("S"))?,
                fold: rec[4].parse().map_err(|_| bad("fold"))?,
            };
            report.insert(Cell {
                key,
                rmse_train: rec[5].parse().map_err(|_| bad("rmse_train"))?,
                rmse_test: rec[6].parse().map_err(|_| bad("rmse_test"))?,
            })?;
        }
        Ok(report)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    /// Plain-text summary: per-dataset means and t-tests, win/tie/loss per
    /// regressor, then Friedman/Nemenyi per S.
    pub fn summary(&self) -> Result<String> {
        let mut out = String::new();
        let datasets = self.datasets();
        let _ = writeln!(out, "datasets: {}", datasets.len());
        let _ = writeln!(out, "folds: {}", self.folds().len());
        let _ = writeln!(out, "grid search: rerun independently for each arm");
        let _ = writeln!(out, "rmse: Box-Cox-transformed target scale");
        for s in self.s_values() {
            let _ = writeln!(out, "\n[S = {s}]");
            let _ = writeln!(out, "dataset,regressor,native_mean,augmented_mean,t,p,verdict");
            for d in &datasets {
                for r in self.regressors() {
                    let c = self.compare(d, r, s)?;
                    let _ = writeln!(
                        out,
                        "{d},{r},{:.6},{:.6},{:.4},{:.3e},{:?}",
                        c.native_mean, c.augmented_mean, c.test.t, c.test.p, c.verdict
                    );
                }
            }
            let _ = writeln!(out, "win/tie/loss (losses / ties / wins of augmented vs native):");
            for r in self.regressors() {
                let _ = writeln!(out, "  {r}: {}", self.win_tie_loss(r, s)?);
            }
            if datasets.len() < 2 {
                let _ = writeln!(out, "friedman: skipped, needs at least 2 datasets (have {})", datasets.len());
                continue;
            }
            let (names, fr) = self.friedman(s)?;
            let _ = writeln!(out, "mean ranks:");
            for (n, r) in names.iter().zip(&fr.mean_ranks) {
                let _ = writeln!(out, "  {n}: {r:.4}");
            }
            let _ = writeln!(out, "friedman: chi2 = {:.4}, p = {:.3e}", fr.friedman_stat, fr.p);
            match fr.critical_difference {
                Some(cd) => {
                    let _ = writeln!(out, "nemenyi cd (alpha = 0.05): {cd:.4}");
                }
                None => {
                    let _ = writeln!(out, "nemenyi cd: unavailable for {} methods", names.len());
                }
            }
        }
        Ok(out)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
