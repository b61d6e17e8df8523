//! Second-order theory-of-mind learner for a card-sorting teaching task.
//!
//! A teacher sorts cards into two bins according to a hidden rule; the
//! learner watches, infers the rule, and models how the teacher models the
//! learner so that it can say when the teacher seems to be pushing an idea
//! the learner does not share.

pub mod analysis;
pub mod belief;
pub mod domain;
pub mod feedback;
pub mod human;
pub mod learner;
pub mod session;
pub mod statement;

pub use belief::{BeliefError, BeliefVector};
pub use domain::{Bin, Card, FeatureClass, FeatureExpression, FeatureValue, Placement, Rule};
pub use feedback::{decide_feedback, FeedbackDecision, FeedbackSettings, Trigger};
pub use human::{CbhParams, HumanModel, InterpretationConfig, ModelGrid, TeacherPrediction};
pub use learner::{
    ConditionKind, Diagnostic, DiscrepancyReport, InteractiveBelief, LearnerCondition,
    LearnerSettings,
};
pub use session::{
    recompute_metrics, replay, resume, run_simulated_session, Actor, EndReason, EventPayload,
    LearnerSession, LikertPrompt, LogRecord, SessionConfig, SessionError, SessionEvent,
    SessionMetrics, SessionRun, Thresholds, Transcript, TranscriptError,
};
pub use statement::{Statement, StatementKind, Tier, TierThresholds};
