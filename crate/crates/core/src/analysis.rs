//! Cross-session analysis: aligning the conditions' two-statement feedback
//! and the relative information gain of the placements that follow it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::ConditionKind;
use crate::session::SessionMetrics;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("no sessions to align")]
    EmptyInput,
}

/// Ceiling of the mean step at which the shadow-timed and second-order
/// learners first gave two-statement feedback; 1 when none ever did.
pub fn align_two_statement_steps(first_steps: &[Option<u32>]) -> Result<u32, AlignError> {
    if first_steps.is_empty() {
        return Err(AlignError::EmptyInput);
    }
    let seen: Vec<u32> = first_steps.iter().flatten().copied().collect();
    if seen.is_empty() {
        return Ok(1);
    }
    let mean = seen.iter().map(|&s| f64::from(s)).sum::<f64>() / seen.len() as f64;
    Ok(mean.ceil() as u32)
}

/// Mean relative IG of the placements following one- and two-statement
/// feedback in one session, counting only feedback given at or after
/// `from_step`.
pub fn session_relative_ig_after_feedback(
    m: &SessionMetrics,
    from_step: u32,
) -> (Option<f64>, Option<f64>) {
    let mut one = Vec::new();
    let mut two = Vec::new();
    // Feedback at step t precedes placement t + 1, whose ratio sits at index t.
    for t in from_step.max(1)..m.m1_cards {
        let next = m.m6_relative_ig[t as usize];
        if m.two_statement_steps.contains(&t) {
            two.push(next);
        } else {
            one.push(next);
        }
    }
    (mean(&one), mean(&two))
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeIgRow {
    pub condition: ConditionKind,
    /// Mean over sessions of each session's mean after one-statement feedback.
    pub after_one: Option<f64>,
    pub after_two: Option<f64>,
    pub sessions_with_two: usize,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeIgTable {
    pub alignment_step: u32,
    pub rows: Vec<RelativeIgRow>,
}

impl RelativeIgTable {
    pub fn row(&self, c: ConditionKind) -> Option<&RelativeIgRow> {
        self.rows.iter().find(|r| r.condition == c)
    }
}

/// Per-condition relative IG after one- and two-statement feedback. The
/// random-timed condition only counts feedback from the alignment step on,
/// since the other two conditions cannot produce two statements earlier.
pub fn relative_ig_table(
    sessions: &[(ConditionKind, SessionMetrics)],
) -> Result<RelativeIgTable, AlignError> {
    if sessions.is_empty() {
        return Err(AlignError::EmptyInput);
    }
    let firsts: Vec<Option<u32>> = sessions
        .iter()
        .filter(|(c, _)| *c != ConditionKind::Tom0Random)
        .map(|(_, m)| m.first_two_statement_step())
        .collect();
    let alignment_step = if firsts.is_empty() {
        1
    } else {
        align_two_statement_steps(&firsts)?
    };
    let mut rows = Vec::new();
    for c in ConditionKind::ALL {
        let from = if c == ConditionKind::Tom0Random {
            alignment_step
        } else {
            1
        };
        let per: Vec<(Option<f64>, Option<f64>)> = sessions
            .iter()
            .filter(|(k, _)| *k == c)
            .map(|(_, m)| session_relative_ig_after_feedback(m, from))
            .collect();
        if per.is_empty() {
            continue;
        }
        let ones: Vec<f64> = per.iter().filter_map(|p| p.0).collect();
        let twos: Vec<f64> = per.iter().filter_map(|p| p.1).collect();
        rows.push(RelativeIgRow {
            condition: c,
            after_one: mean(&ones),
            after_two: mean(&twos),
            sessions_with_two: twos.len(),
            sessions: per.len(),
        });
    }
    Ok(RelativeIgTable {
        alignment_step,
        rows,
    })
}
