//! Request and response bodies. Cards, rules and placements travel in their
//! canonical string forms.

use serde::{Deserialize, Serialize};
use tom2_core::learner::Diagnostic;
use tom2_core::{Card, EndReason, LikertPrompt, Placement, Rule, SessionMetrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    /// `tom0`, `tom0random` or `tom2`.
    pub condition: String,
    /// Hidden rule; drawn from the seed when absent.
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// What a teacher needs to start: never the rule, never the learner's state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub id: String,
    pub cards: Vec<Card>,
    pub bins: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub id: String,
    pub t: u32,
    pub lockout: bool,
    pub ended: Option<EndReason>,
    /// Revealed once the session has ended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<SessionMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRequest {
    pub placement: Placement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPayload {
    pub t: u32,
    /// Rendered learner statements; an explanation renders as one string.
    pub statements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
    /// Set when the placement ran past the step limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ended: Option<EndReason>,
}

/// Data of a `feedback` server-sent event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPush {
    pub t: u32,
    pub statements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminateResponse {
    pub ended: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<SessionMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertRequest {
    pub prompt: LikertPrompt,
    pub score: u8,
}
