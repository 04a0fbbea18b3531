//! Cross-validation protocol and the statistics used to compare arms.

mod folds;
mod plot;
mod ranks;
mod report;
pub mod special;
mod ttest;

pub use folds::{kfold_split, FoldPlan};
pub use plot::{cd_diagram_svg, emit_cd_diagram, emit_s_curve, s_curve_svg, SCurve};
pub use ranks::{friedman_nemenyi, nemenyi_q, rank_rows, FriedmanNemenyi};
pub use report::{Arm, ArmComparison, Cell, CellKey, ExperimentReport, Verdict, WinTieLoss};
pub use ttest::{paired_t_test, PairedTTest};

use crate::error::{Error, Result};

/// Root mean squared error, `√(Σ(yᵢ − ŷᵢ)²/n)`.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: yhat.len() });
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset("rmse of zero values".into()));
    }
    let ss: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((ss / y.len() as f64).sqrt())
}
