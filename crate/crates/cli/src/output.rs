//! Files and tables the commands write.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tom2_core::analysis::RelativeIgTable;
use tom2_core::{ConditionKind, Rule, SessionMetrics};

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One row of `metrics.csv`. List-valued metrics are space-separated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub condition: ConditionKind,
    pub rule: String,
    pub seed: u64,
    pub m1_cards: u32,
    pub m2_excess_cards: u32,
    pub m3_termination_attempts: u32,
    pub learned_at: Option<u32>,
    pub final_model_marginal: Option<f64>,
    pub outcome: String,
    pub uscs_count: u32,
    pub two_statement_steps: String,
    pub mean_relative_ig: f64,
    pub m6_relative_ig: String,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

impl MetricsRow {
    pub fn new(condition: ConditionKind, rule: Rule, seed: u64, m: &SessionMetrics) -> MetricsRow {
        let rel = &m.m6_relative_ig;
        MetricsRow {
            condition,
            rule: rule.to_string(),
            seed,
            m1_cards: m.m1_cards,
            m2_excess_cards: m.m2_excess_cards,
            m3_termination_attempts: m.m3_termination_attempts,
            learned_at: m.learned_at,
            final_model_marginal: m.final_model_marginal,
            outcome: m.outcome.map(|o| o.to_string()).unwrap_or_default(),
            uscs_count: m.uscs_count,
            two_statement_steps: join(&m.two_statement_steps),
            mean_relative_ig: if rel.is_empty() {
                0.0
            } else {
                rel.iter().sum::<f64>() / rel.len() as f64
            },
            m6_relative_ig: join(rel),
        }
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn relig_text(table: &RelativeIgTable) -> String {
    let mut out = format!(
        "relative IG of the next placement (two-statement alignment step {})\n",
        table.alignment_step
    );
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>18}",
        "condition", "after one", "after two", "sessions with two"
    );
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>12} / {:<3}",
            r.condition.name(),
            cell(r.after_one),
            cell(r.after_two),
            r.sessions_with_two,
            r.sessions
        );
    }
    out
}

pub fn relig_csv(table: &RelativeIgTable) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "condition",
        "after_one",
        "after_two",
        "sessions_with_two",
        "sessions",
        "alignment_step",
    ])?;
    for r in &table.rows {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.condition.name().to_string(),
            opt(r.after_one),
            opt(r.after_two),
            r.sessions_with_two.to_string(),
            r.sessions.to_string(),
            table.alignment_step.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}
