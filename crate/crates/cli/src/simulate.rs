//! `tom2 simulate`: one session, printed step by step.

use std::fmt::Write as _;
use std::path::Path;

use tom2_core::{run_simulated_session, EventPayload, SessionConfig, SessionRun};

use crate::output::write_atomic;
use crate::CliError;

/// Step-by-step table of a finished run: each placement with the learner's
/// reply, its belief in the true rule and in the teacher's true biases.
pub fn transcript_table(cfg: &SessionConfig, run: &SessionRun) -> String {
    let truth = cfg.ground_truth_model();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3}  {:<30} {:>7} {:>8}  feedback",
        "t", "action", "P(rule)", "P(model)"
    );
    for e in run.events() {
        let snap = e.belief_snapshot.as_ref();
        let p_rule = snap.map_or_else(String::new, |s| {
            format!("{:.3}", s.rule_marginal.probs()[cfg.rule.index()])
        });
        let p_model = match (snap, truth) {
            (Some(s), Some(i)) => format!("{:.3}", s.model_marginal[i]),
            _ => String::new(),
        };
        match &e.payload {
            EventPayload::Placement {
                placement,
                diagnostic,
            } => {
                let note = diagnostic.map(|d| format!(" [{d:?}]")).unwrap_or_default();
                let _ = write!(
                    out,
                    "{:>3}  {:<30} {:>7} {:>8}{note}",
                    e.t,
                    placement.to_string(),
                    p_rule,
                    p_model
                );
            }
            EventPayload::Feedback { decision } => {
                let _ = writeln!(out, "  {}", decision.rendered().join(" "));
            }
            EventPayload::TerminateAttempt { success } => {
                let what = if *success {
                    "terminate (accepted)"
                } else {
                    "terminate (refused)"
                };
                let _ = writeln!(out, "{:>3}  {:<30} {:>7} {:>8}", e.t, what, p_rule, p_model);
            }
            EventPayload::SessionEnd { reason } => {
                // A contradiction ends the session before any feedback.
                if !out.ends_with('\n') {
                    out.push('\n');
                }
                let _ = writeln!(out, "{:>3}  session end: {reason}", e.t);
            }
            EventPayload::LikertResponse { .. } => {}
        }
    }
    let m = &run.metrics;
    let _ = writeln!(
        out,
        "cards {}  excess {}  failed attempts {}  explanations {}  final P(teacher model) {}",
        m.m1_cards,
        m.m2_excess_cards,
        m.m3_termination_attempts,
        m.uscs_count,
        m.final_model_marginal
            .map_or_else(|| "-".into(), |x| format!("{x:.3}"))
    );
    out
}

/// Runs the session, writes its log to `log_path` and returns the printed
/// table.
pub fn simulate(cfg: &SessionConfig, log_path: &Path) -> Result<String, CliError> {
    let run = run_simulated_session(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    write_atomic(log_path, run.to_ndjson().as_bytes())
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", log_path.display())))?;
    let teacher = cfg
        .teacher_params
        .map(|t| t.to_string())
        .unwrap_or_default();
    let mut out = format!(
        "rule {}  teacher {}  condition {}  seed {}\n",
        cfg.rule, teacher, cfg.condition.kind, cfg.seed
    );
    out.push_str(&transcript_table(cfg, &run));
    let _ = writeln!(out, "log {}", log_path.display());
    Ok(out)
}
