//! `tom2 analyze`: recompute metrics from raw logs and compare them with the
//! values stored when the sessions ran.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tom2_core::{recompute_metrics, replay, ConditionKind, SessionMetrics, Transcript};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub path: PathBuf,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeReport {
    pub files: usize,
    /// Sessions without a metrics record (still open when logged).
    pub open: usize,
    pub mismatches: Vec<Mismatch>,
    /// Recomputed metrics of the finished sessions, for summary tables.
    pub sessions: Vec<(ConditionKind, SessionMetrics)>,
}

/// Every `*.log` under `dir`, sorted.
pub fn find_logs(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "log") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Field-by-field differences, each as `field: stored …, recomputed …`.
pub fn diff_metrics(stored: &SessionMetrics, fresh: &SessionMetrics) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |name: &str, equal: bool, a: String, b: String| {
        if !equal {
            out.push(format!("{name}: stored {a}, recomputed {b}"));
        }
    };
    check(
        "m1_cards",
        stored.m1_cards == fresh.m1_cards,
        stored.m1_cards.to_string(),
        fresh.m1_cards.to_string(),
    );
    check(
        "m2_excess_cards",
        stored.m2_excess_cards == fresh.m2_excess_cards,
        stored.m2_excess_cards.to_string(),
        fresh.m2_excess_cards.to_string(),
    );
    check(
        "m3_termination_attempts",
        stored.m3_termination_attempts == fresh.m3_termination_attempts,
        stored.m3_termination_attempts.to_string(),
        fresh.m3_termination_attempts.to_string(),
    );
    let rel_equal = stored.m6_relative_ig.len() == fresh.m6_relative_ig.len()
        && stored
            .m6_relative_ig
            .iter()
            .zip(&fresh.m6_relative_ig)
            .all(|(a, b)| same(*a, *b));
    check(
        "m6_relative_ig",
        rel_equal,
        format!("{:?}", stored.m6_relative_ig),
        format!("{:?}", fresh.m6_relative_ig),
    );
    check(
        "learned_at",
        stored.learned_at == fresh.learned_at,
        format!("{:?}", stored.learned_at),
        format!("{:?}", fresh.learned_at),
    );
    let fm_equal = match (stored.final_model_marginal, fresh.final_model_marginal) {
        (Some(a), Some(b)) => same(a, b),
        (a, b) => a == b,
    };
    check(
        "final_model_marginal",
        fm_equal,
        format!("{:?}", stored.final_model_marginal),
        format!("{:?}", fresh.final_model_marginal),
    );
    check(
        "outcome",
        stored.outcome == fresh.outcome,
        format!("{:?}", stored.outcome),
        format!("{:?}", fresh.outcome),
    );
    check(
        "uscs_count",
        stored.uscs_count == fresh.uscs_count,
        stored.uscs_count.to_string(),
        fresh.uscs_count.to_string(),
    );
    check(
        "two_statement_steps",
        stored.two_statement_steps == fresh.two_statement_steps,
        format!("{:?}", stored.two_statement_steps),
        format!("{:?}", fresh.two_statement_steps),
    );
    out
}

enum FileResult {
    Checked(ConditionKind, SessionMetrics, Vec<String>),
    Open(Vec<String>),
    Unreadable(String),
}

fn check_file(path: &Path, with_replay: bool) -> FileResult {
    let transcript = match File::open(path)
        .map(BufReader::new)
        .map_err(|e| e.to_string())
        .and_then(|r| Transcript::read(r).map_err(|e| e.to_string()))
    {
        Ok(t) => t,
        Err(e) => return FileResult::Unreadable(e),
    };
    let fresh = recompute_metrics(&transcript);
    let mut problems = Vec::new();
    if with_replay {
        match replay(&transcript) {
            Ok(None) => {}
            Ok(Some(m)) => problems.push(format!(
                "replay differs at event {}: logged {}, replayed {}",
                m.seq, m.found, m.expected
            )),
            Err(e) => problems.push(format!("replay failed: {e}")),
        }
    }
    match &transcript.metrics {
        Some(stored) => {
            problems.extend(diff_metrics(stored, &fresh));
            FileResult::Checked(transcript.config.condition.kind, fresh, problems)
        }
        None => FileResult::Open(problems),
    }
}

/// Checks every log under `dir`; with `with_replay` each session is also
/// re-driven through the engine and its events compared.
pub fn analyze(dir: &Path, with_replay: bool) -> Result<AnalyzeReport, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let logs =
        find_logs(dir).map_err(|e| CliError::Runtime(format!("reading {}: {e}", dir.display())))?;
    let results: Vec<FileResult> = logs
        .par_iter()
        .map(|p| check_file(p, with_replay))
        .collect();
    let mut report = AnalyzeReport {
        files: logs.len(),
        ..AnalyzeReport::default()
    };
    for (path, result) in logs.into_iter().zip(results) {
        let problems = match result {
            FileResult::Checked(kind, metrics, problems) => {
                report.sessions.push((kind, metrics));
                problems
            }
            FileResult::Open(problems) => {
                report.open += 1;
                problems
            }
            FileResult::Unreadable(e) => vec![e],
        };
        report
            .mismatches
            .extend(problems.into_iter().map(|detail| Mismatch {
                path: path.clone(),
                detail,
            }));
    }
    Ok(report)
}
