//! CSV, JSON and plain-text renderings of experiment reports.

use std::fs;
use std::path::Path;

use lsrefit_core::ExperimentReport;
use serde::Serialize;

use crate::error::{AppError, Result};

pub const CSV_HEADER: [&str; 8] =
    ["setting", "estimator", "metric", "mean", "se", "repetitions", "ls_pred_fraction", "ls_est_fraction"];

/// Full-precision scientific notation.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per (setting, estimator, metric).
pub fn report_csv(reports: &[&ExperimentReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for report in reports {
        for row in &report.rows {
            for (metric, stat) in row.metrics() {
                w.write_record([
                    report.setting.clone(),
                    row.estimator.name().to_string(),
                    metric.to_string(),
                    sci(stat.mean),
                    sci(stat.se),
                    row.repetitions.to_string(),
                    sci(row.ls_pred_fraction),
                    sci(row.ls_est_fraction),
                ])?;
            }
        }
    }
    w.into_inner().map_err(|e| AppError::Io { path: "<csv buffer>".into(), source: e.into_error() })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| AppError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_vec_pretty(value).map_err(|source| AppError::Json { path: path.to_path_buf(), source })?;
    write_bytes(path, &text)
}

/// Text table with the usual columns: pred. error, est. error, false neg.,
/// false pos., LS pred./est.
pub fn render_table(reports: &[&ExperimentReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let s = &r.scenario;
        out.push_str(&format!(
            "\nn={}, p={}, sigma={}, s={}, kappa={}  ({} reps, {} excluded)\n",
            s.n,
            s.p,
            s.sigma,
            s.s,
            s.kappa,
            r.repetitions_used,
            r.excluded_repetitions.len()
        ));
        out.push_str(&format!(
            "{:<12} {:>24} {:>24} {:>16} {:>16} {:>14}\n",
            "", "pred. error", "est. error", "false neg.", "false pos.", "LS pred./est."
        ));
        for row in &r.rows {
            let cell = |m: lsrefit_core::metrics::MeanSe| format!("{:.3e} ± {:.1e}", m.mean, m.se);
            out.push_str(&format!(
                "{:<12} {:>24} {:>24} {:>16} {:>16} {:>14}\n",
                row.estimator.name(),
                cell(row.pred_error),
                cell(row.est_error),
                format!("{:.2} ± {:.2}", row.false_neg.mean, row.false_neg.se),
                format!("{:.1} ± {:.1}", row.false_pos.mean, row.false_pos.se),
                format!("{}/{}", row.ls_pred_fraction, row.ls_est_fraction),
            ));
        }
    }
    out
}
