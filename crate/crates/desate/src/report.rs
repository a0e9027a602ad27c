//! Summaries over trial tables: per-noise-family mean metrics, long-format
//! plot data, and the best row per metric.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{read_trial_table, TrialRecord};

/// Concatenate several persisted trial tables.
pub fn read_tables(paths: &[PathBuf]) -> Result<Vec<TrialRecord>> {
    if paths.is_empty() {
        return Err(Error::config("report: no trial tables given"));
    }
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_trial_table(p)?);
    }
    Ok(out)
}

/// Mean metrics for one (noise family, noise level) cell, over successful
/// trials only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub noise_family: String,
    pub nl: f64,
    pub trials: usize,
    pub mean_re: f64,
    pub mean_mae: f64,
    pub mean_rmse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// Best (minimal) successful trial per metric name.
    pub best: BTreeMap<String, TrialRecord>,
    pub failed_trials: usize,
}

pub fn summarize(records: &[TrialRecord]) -> Result<Summary> {
    let ok: Vec<&TrialRecord> =
        records.iter().filter(|r| r.re.is_some() && r.mae.is_some() && r.rmse.is_some()).collect();
    if ok.is_empty() {
        return Err(Error::data("no successful trials to summarize"));
    }
    // group by (family, level); keys ordered by family then level
    let mut groups: BTreeMap<(String, String), Vec<&TrialRecord>> = BTreeMap::new();
    for r in &ok {
        groups.entry((r.noise_family.clone(), format!("{:e}", r.nl))).or_default().push(r);
    }
    let mut rows = Vec::new();
    for ((family, _), trials) in groups {
        let n = trials.len() as f64;
        rows.push(SummaryRow {
            noise_family: family,
            nl: trials[0].nl,
            trials: trials.len(),
            mean_re: trials.iter().map(|r| r.re.unwrap()).sum::<f64>() / n,
            mean_mae: trials.iter().map(|r| r.mae.unwrap()).sum::<f64>() / n,
            mean_rmse: trials.iter().map(|r| r.rmse.unwrap()).sum::<f64>() / n,
        });
    }
    let pick = |f: fn(&TrialRecord) -> f64| -> TrialRecord {
        ok.iter()
            .min_by(|a, b| {
                f(a).partial_cmp(&f(b)).unwrap().then_with(|| a.trial_id.cmp(&b.trial_id))
            })
            .map(|r| (*r).clone())
            .expect("nonempty")
    };
    let mut best = BTreeMap::new();
    best.insert("re".to_string(), pick(|r| r.re.unwrap()));
    best.insert("mae".to_string(), pick(|r| r.mae.unwrap()));
    best.insert("rmse".to_string(), pick(|r| r.rmse.unwrap()));
    Ok(Summary { rows, best, failed_trials: records.len() - ok.len() })
}

/// Per-cell mean table: noise_family, NL, trials, mean_RE, mean_MAE, mean_RMSE.
pub fn write_summary_csv(summary: &Summary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["noise_family", "NL", "trials", "mean_RE", "mean_MAE", "mean_RMSE"])?;
    for r in &summary.rows {
        w.write_record([
            r.noise_family.clone(),
            r.nl.to_string(),
            r.trials.to_string(),
            r.mean_re.to_string(),
            r.mean_mae.to_string(),
            r.mean_rmse.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::data(format!("flushing summary: {e}")))
}

/// Long-format plot data: family, level, metric, value — one row per mean.
pub fn write_plot_data_csv(summary: &Summary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["family", "level", "metric", "value"])?;
    for r in &summary.rows {
        for (metric, value) in
            [("re", r.mean_re), ("mae", r.mean_mae), ("rmse", r.mean_rmse)]
        {
            w.write_record([
                r.noise_family.clone(),
                r.nl.to_string(),
                metric.to_string(),
                value.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::data(format!("flushing plot data: {e}")))
}

/// Best row per metric in trial-table column order.
pub fn write_best_rows_csv(summary: &Summary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "trial_id", "LR", "NoL", "HD", "alpha", "NL", "RE", "MAE", "RMSE"])?;
    for (metric, r) in &summary.best {
        w.write_record([
            metric.clone(),
            r.trial_id.clone(),
            r.lr.to_string(),
            r.nol.to_string(),
            r.hd.to_string(),
            r.alpha.to_string(),
            r.nl.to_string(),
            r.re.unwrap().to_string(),
            r.mae.unwrap().to_string(),
            r.rmse.unwrap().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::data(format!("flushing best rows: {e}")))
}
