use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::metrics::Snapshot;
use super::runner::ReplicationResult;
use crate::error::{invalid, Result};

/// One CSV row: replication means at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub policy: String,
    #[serde(rename = "M")]
    pub num_agents: usize,
    #[serde(rename = "K")]
    pub num_arms: usize,
    /// Mean minimum gap of the instances used.
    pub gap: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub t: u64,
    pub reps: u64,
    pub regret_mean: f64,
    pub regret_stderr: f64,
    pub regret_rank: f64,
    pub regret_exp: f64,
    pub regret_com: f64,
    pub hints_mean: f64,
    pub hints_stderr: f64,
    pub comm_rounds_mean: f64,
    /// Mean first exploitation round over replications that committed.
    pub stop_time_mean: Option<f64>,
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Folds replications, in order, into one row per checkpoint.
pub fn aggregate(cfg: &ExperimentConfig, results: &[ReplicationResult]) -> Result<Vec<MetricsRow>> {
    let first = results.first().ok_or_else(|| invalid("no replications to aggregate"))?;
    let checkpoints: Vec<u64> = first.snapshots.iter().map(|s| s.t).collect();
    if results.iter().any(|r| r.snapshots.len() != checkpoints.len()) {
        return Err(invalid("replications recorded different checkpoints"));
    }
    let gaps: Vec<f64> = results.iter().map(|r| r.summary.min_gap).collect();
    let gap = mean_stderr(&gaps).0;
    let stops: Vec<f64> = results.iter().filter_map(|r| r.stop_time.map(|s| s as f64)).collect();
    let stop_time_mean = (!stops.is_empty()).then(|| mean_stderr(&stops).0);
    let mut rows = Vec::with_capacity(checkpoints.len());
    for (i, &t) in checkpoints.iter().enumerate() {
        let col = |f: &dyn Fn(&Snapshot) -> f64| -> Vec<f64> {
            results.iter().map(|r| f(&r.snapshots[i])).collect()
        };
        let (regret_mean, regret_stderr) = mean_stderr(&col(&|s| s.regret()));
        let (hints_mean, hints_stderr) = mean_stderr(&col(&|s| s.hints as f64));
        rows.push(MetricsRow {
            policy: cfg.policy.name().to_string(),
            num_agents: first.num_agents,
            num_arms: first.num_arms,
            gap,
            horizon: cfg.horizon,
            t,
            reps: results.len() as u64,
            regret_mean,
            regret_stderr,
            regret_rank: mean_stderr(&col(&|s| s.regret_rank)).0,
            regret_exp: mean_stderr(&col(&|s| s.regret_exp)).0,
            regret_com: mean_stderr(&col(&|s| s.regret_com)).0,
            hints_mean,
            hints_stderr,
            comm_rounds_mean: mean_stderr(&col(&|s| s.comm_rounds as f64)).0,
            stop_time_mean,
        });
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[MetricsRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}
