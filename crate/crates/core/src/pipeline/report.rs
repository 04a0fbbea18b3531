use std::fmt::Write as _;
use std::path::PathBuf;

use super::config::ExperimentConfig;
use super::files::write_atomic;
use crate::error::{Error, Result};
use crate::eval::{cd_diagram_svg, s_curve_svg, Arm, CellKey, ExperimentReport};

/// Paths of everything `cmd_report` wrote.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportArtifacts {
    pub summary: PathBuf,
    pub win_tie_loss: PathBuf,
    pub cd_diagrams: Vec<PathBuf>,
    pub s_curves: Vec<PathBuf>,
    /// Set when the Friedman test was skipped.
    pub notice: Option<String>,
}

/// Cells the config asks for that the report lacks.
pub fn missing_cells(cfg: &ExperimentConfig, report: &ExperimentReport) -> Vec<String> {
    let mut missing = Vec::new();
    for d in &cfg.datasets {
        for &regressor in &cfg.regressors {
            for s in cfg.sorted_s_values() {
                for fold in 0..cfg.folds {
                    for arm in [Arm::Native, Arm::Augmented] {
                        let key = CellKey { dataset: d.name.clone(), regressor, arm, s, fold };
                        if report.get(&key).is_none() {
                            missing.push(format!("{}/{regressor}/{arm}/S={s}/fold={fold}", d.name));
                        }
                    }
                }
            }
        }
    }
    missing
}

/// Summary text, win/tie/loss table, one CD diagram per S and one S-curve
/// per (dataset, regressor), all under `report/`.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<ReportArtifacts> {
    let path = cfg.cells_csv();
    let full = ExperimentReport::read_csv(&path).map_err(|e| match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::InvalidArgument(format!("{} not found; run `run` first", path.display()))
        }
        other => other,
    })?;
    let missing = missing_cells(cfg, &full);
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(20).map(String::as_str).collect();
        let more = if missing.len() > 20 { format!(" (and {} more)", missing.len() - 20) } else { String::new() };
        return Err(Error::MissingCells(format!("{}{more}", shown.join(", "))));
    }
    // restrict to the configured slice
    let mut report = ExperimentReport::new();
    let names: Vec<&str> = cfg.datasets.iter().map(|d| d.name.as_str()).collect();
    let s_values = cfg.sorted_s_values();
    for c in full.cells() {
        if names.contains(&c.key.dataset.as_str())
            && cfg.regressors.contains(&c.key.regressor)
            && s_values.contains(&c.key.s)
            && c.key.fold < cfg.folds
        {
            report.insert(c)?;
        }
    }

    let dir = cfg.report_dir();
    let mut out = ReportArtifacts { summary: dir.join("summary.txt"), win_tie_loss: dir.join("win_tie_loss.csv"), ..Default::default() };
    write_atomic(&out.summary, report.summary()?.as_bytes())?;

    let mut wtl = String::from("regressor,S,losses,ties,wins\n");
    for r in report.regressors() {
        for &s in &s_values {
            let w = report.win_tie_loss(r, s)?;
            let _ = writeln!(wtl, "{r},{s},{},{},{}", w.losses, w.ties, w.wins);
        }
    }
    write_atomic(&out.win_tie_loss, wtl.as_bytes())?;

    if report.datasets().len() >= 2 {
        for &s in &s_values {
            let (methods, fr) = report.friedman(s)?;
            let path = dir.join(format!("cd_S{s}.svg"));
            write_atomic(&path, cd_diagram_svg(&methods, &fr.mean_ranks, fr.critical_difference)?.as_bytes())?;
            out.cd_diagrams.push(path);
        }
    } else {
        out.notice = Some(format!(
            "Friedman/Nemenyi skipped: needs at least 2 datasets, have {}",
            report.datasets().len()
        ));
    }
    for d in report.datasets() {
        for r in report.regressors() {
            let path = dir.join(format!("s_curve_{d}_{r}.svg"));
            write_atomic(&path, s_curve_svg(&report.s_curve(&d, r)?)?.as_bytes())?;
            out.s_curves.push(path);
        }
    }
    Ok(out)
}
