//! `tom2 experiment`: a grid of simulated sessions run in parallel.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tom2_core::analysis::{relative_ig_table, RelativeIgTable};
use tom2_core::{run_simulated_session, ConditionKind, SessionMetrics};

use crate::output::{metrics_csv, relig_csv, write_atomic, MetricsRow};
use crate::spec::{ExperimentSpec, Job};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dir: PathBuf,
    pub rows: Vec<MetricsRow>,
    pub table: RelativeIgTable,
}

/// Log file of one session: `{experiment}/{condition}/{seed}.log`.
pub fn log_path(dir: &Path, condition: ConditionKind, seed: u64) -> PathBuf {
    dir.join(condition.name()).join(format!("{seed}.log"))
}

fn run_job(dir: &Path, job: &Job) -> Result<SessionMetrics, CliError> {
    let run = run_simulated_session(&job.config).map_err(|e| CliError::Config(e.to_string()))?;
    let path = log_path(dir, job.condition, job.config.seed);
    write_atomic(&path, run.to_ndjson().as_bytes())
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
    Ok(run.metrics)
}

/// Runs every session of `spec` under `root/{name}`, then writes
/// `metrics.csv` and the aligned relative-IG table `relig.csv` next to the
/// logs. Output is identical for identical specs, whatever the worker count.
pub fn run_experiment(spec: &ExperimentSpec, root: &Path) -> Result<ExperimentReport, CliError> {
    let jobs = spec.jobs().map_err(CliError::Config)?;
    let dir = root.join(&spec.name);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let metrics: Vec<SessionMetrics> = pool.install(|| {
        jobs.par_iter()
            .map(|j| run_job(&dir, j))
            .collect::<Result<_, _>>()
    })?;
    let rows: Vec<MetricsRow> = jobs
        .iter()
        .zip(&metrics)
        .map(|(j, m)| MetricsRow::new(j.condition, j.rule, j.config.seed, m))
        .collect();
    let sessions: Vec<(ConditionKind, SessionMetrics)> =
        jobs.iter().map(|j| j.condition).zip(metrics).collect();
    let table = relative_ig_table(&sessions).map_err(|e| CliError::Runtime(e.to_string()))?;
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
    let io_err =
        |e: std::io::Error| CliError::Runtime(format!("writing under {}: {e}", dir.display()));
    write_atomic(
        &dir.join("metrics.csv"),
        &metrics_csv(&rows).map_err(csv_err)?,
    )
    .map_err(io_err)?;
    write_atomic(&dir.join("relig.csv"), &relig_csv(&table).map_err(csv_err)?).map_err(io_err)?;
    Ok(ExperimentReport { dir, rows, table })
}
