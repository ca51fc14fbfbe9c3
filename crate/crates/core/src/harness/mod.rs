//! Experiment configuration, seeded replications, regret accounting and CSV
//! output.

pub mod config;
pub mod metrics;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, GeneratorParams, InstanceSource, PolicyId};
pub use metrics::{default_checkpoints, diagnostics, Diagnostics, Phase, RegretTracker, Snapshot, TraceRecord, TraceSink};
pub use report::{aggregate, mean_stderr, write_csv, write_csv_file, MetricsRow};
pub use runner::{run_central, run_experiment, run_replication, CentralReport, ReplicationResult};

use crate::error::Result;

/// Runs an experiment and writes its CSV to the configured output (or stdout).
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    let results = run_experiment(cfg)?;
    let rows = aggregate(cfg, &results)?;
    match &cfg.output {
        Some(path) => write_csv_file(&rows, path)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(rows)
}
