//! Turn-based teaching sessions: the state machine shared by simulated and
//! live sessions, the simulated teacher loop, transcripts and replay.

use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefVector, NORMALIZATION_TOLERANCE};
use crate::domain::{enumerate_placements, Placement, Rule};
use crate::feedback::{decide_feedback, FeedbackDecision, FeedbackSettings};
use crate::human::{CbhParams, HumanModel, InterpretationConfig, ModelGrid, TeacherPrediction};
use crate::learner::{
    ConditionKind, DetectionMode, Diagnostic, ExpressionDiscrepancy, InteractiveBelief,
    LearnerCondition, LearnerSettings,
};
use crate::statement::TierThresholds;

pub const TRANSCRIPT_VERSION: u32 = 1;
pub const DEFAULT_MAX_STEPS: u32 = 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid session config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("session has ended ({0})")]
    Ended(EndReason),
    #[error("terminate is locked out for one placement after a failed attempt")]
    Locked,
    #[error("Likert score must be between 1 and 5, got {0}")]
    InvalidScore(u8),
}

/// Tunable thresholds of a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub tau_us: f64,
    pub theta_term: f64,
    pub tiers: TierThresholds,
    pub q: f64,
    pub possible_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let fb = FeedbackSettings::default();
        let interp = InterpretationConfig::default();
        Thresholds {
            tau_us: fb.tau_us,
            theta_term: LearnerSettings::default().theta_term,
            tiers: fb.tiers,
            q: fb.q,
            possible_floor: interp.possible_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub rule: Rule,
    pub condition: LearnerCondition,
    /// Ground-truth biases of a simulated teacher; absent for live sessions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher_params: Option<CbhParams>,
    pub grid: ModelGrid,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub detection: DetectionMode,
    pub seed: u64,
    pub max_steps: u32,
    /// Restart the learner instead of ending the session when a placement
    /// contradicts everything it believes. Live teachers can misclick.
    #[serde(default)]
    pub recover_contradictions: bool,
}

impl SessionConfig {
    pub fn simulated(
        rule: Rule,
        kind: ConditionKind,
        teacher: CbhParams,
        seed: u64,
    ) -> SessionConfig {
        SessionConfig {
            rule,
            condition: LearnerCondition {
                kind,
                rng_seed: seed,
            },
            teacher_params: Some(teacher),
            grid: ModelGrid::default(),
            thresholds: Thresholds::default(),
            detection: DetectionMode::default(),
            seed,
            max_steps: DEFAULT_MAX_STEPS,
            recover_contradictions: false,
        }
    }

    pub fn live(rule: Rule, kind: ConditionKind, seed: u64) -> SessionConfig {
        SessionConfig {
            teacher_params: None,
            recover_contradictions: true,
            ..SessionConfig::simulated(rule, kind, CbhParams::unbiased(f64::INFINITY), seed)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if let Some(t) = &self.teacher_params {
            t.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let th = &self.thresholds;
        self.feedback_settings()
            .validate()
            .map_err(ConfigError::Invalid)?;
        self.learner_settings()
            .interpretation
            .validate()
            .map_err(ConfigError::Invalid)?;
        if !(th.theta_term > 0.0 && th.theta_term <= 1.0) {
            return bad(format!(
                "theta_term must lie in (0, 1], got {}",
                th.theta_term
            ));
        }
        Ok(())
    }

    pub fn learner_settings(&self) -> LearnerSettings {
        LearnerSettings {
            detection: self.detection,
            theta_term: self.thresholds.theta_term,
            interpretation: InterpretationConfig {
                tiers: self.thresholds.tiers,
                possible_floor: self.thresholds.possible_floor,
            },
        }
    }

    pub fn feedback_settings(&self) -> FeedbackSettings {
        FeedbackSettings {
            tiers: self.thresholds.tiers,
            tau_us: self.thresholds.tau_us,
            q: self.thresholds.q,
        }
    }

    /// Index of the grid member matching the simulated teacher's biases.
    pub fn ground_truth_model(&self) -> Option<usize> {
        let truth = self.teacher_params?;
        self.grid
            .models()
            .iter()
            .position(|m| m.same_biases(&truth))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Actor {
    Teacher,
    Learner,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndReason {
    Success,
    Timeout,
    Contradiction,
}

impl std::fmt::Display for EndReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EndReason::Success => "success",
            EndReason::Timeout => "timeout",
            EndReason::Contradiction => "contradiction",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LikertPrompt {
    ConfidenceFromFeedback,
    TerminationConfidence,
    FeedbackRelevance,
    AgentUnderstanding,
    Pleasantness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventPayload {
    Placement {
        placement: Placement,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diagnostic: Option<Diagnostic>,
    },
    TerminateAttempt {
        success: bool,
    },
    Feedback {
        decision: FeedbackDecision,
    },
    LikertResponse {
        prompt: LikertPrompt,
        score: u8,
    },
    SessionEnd {
        reason: EndReason,
    },
}

/// Learner state after a placement, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub tom0: BeliefVector,
    pub rule_marginal: BeliefVector,
    pub model_marginal: Vec<f64>,
    pub top_discrepancies: Vec<ExpressionDiscrepancy>,
}

impl BeliefSnapshot {
    pub fn capture(ib: &InteractiveBelief, tau_us: f64) -> BeliefSnapshot {
        BeliefSnapshot {
            tom0: *ib.tom0(),
            rule_marginal: ib.rule_marginal(),
            model_marginal: ib.model_marginal(),
            top_discrepancies: ib.compute_discrepancy(tau_us).top(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub t: u32,
    pub seq: u32,
    pub actor: Actor,
    pub payload: EventPayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief_snapshot: Option<BeliefSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<String>,
}

impl SessionEvent {
    /// The event with learner state removed, for teachers still teaching.
    pub fn redacted(&self) -> SessionEvent {
        SessionEvent {
            belief_snapshot: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    /// Cards placed.
    pub m1_cards: u32,
    /// Cards placed after the learner already knew the rule.
    pub m2_excess_cards: u32,
    /// Failed attempts to end the session.
    pub m3_termination_attempts: u32,
    /// Per placement: its information gain relative to the best placement
    /// available at that step.
    pub m6_relative_ig: Vec<f64>,
    pub learned_at: Option<u32>,
    /// Learner's final mass on the grid member matching the teacher.
    pub final_model_marginal: Option<f64>,
    pub outcome: Option<EndReason>,
    pub uscs_count: u32,
    /// Steps whose feedback had two clauses.
    pub two_statement_steps: Vec<u32>,
}

impl SessionMetrics {
    pub fn first_two_statement_step(&self) -> Option<u32> {
        self.two_statement_steps.first().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub version: u32,
    pub config: SessionConfig,
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)] // one header per file
pub enum LogRecord {
    Header(SessionHeader),
    Event(SessionEvent),
    Metrics(SessionMetrics),
}

/// IG of `p` relative to the best placement available under `b`. When
/// nothing is left to learn every placement is as good as any other.
pub fn relative_ig(b: &BeliefVector, p: Placement) -> f64 {
    let best = b.max_information_gain();
    if best <= NORMALIZATION_TOLERANCE {
        return 1.0;
    }
    b.information_gain(p)
        .map_or(0.0, |ig| (ig / best).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementOutcome {
    pub t: u32,
    pub feedback: Option<FeedbackDecision>,
    pub diagnostic: Option<Diagnostic>,
    pub ended: Option<EndReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminateOutcome {
    pub success: bool,
}

/// The learner side of one session. Simulated teachers, live teachers and
/// transcript replay all drive this same state machine.
#[derive(Debug, Clone)]
pub struct LearnerSession {
    config: SessionConfig,
    learner: LearnerSettings,
    feedback: FeedbackSettings,
    belief: InteractiveBelief,
    t: u32,
    lockout: bool,
    ended: Option<EndReason>,
    events: Vec<SessionEvent>,
    failed_terminations: u32,
    learned_at: Option<u32>,
    relative_ig: Vec<f64>,
    uscs_count: u32,
    two_statement_steps: Vec<u32>,
}

impl LearnerSession {
    pub fn new(config: SessionConfig) -> Result<LearnerSession, ConfigError> {
        config.validate()?;
        Ok(LearnerSession {
            learner: config.learner_settings(),
            feedback: config.feedback_settings(),
            belief: InteractiveBelief::new(config.grid.clone()),
            config,
            t: 0,
            lockout: false,
            ended: None,
            events: Vec::new(),
            failed_terminations: 0,
            learned_at: None,
            relative_ig: Vec::new(),
            uscs_count: 0,
            two_statement_steps: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn belief(&self) -> &InteractiveBelief {
        &self.belief
    }

    pub fn step(&self) -> u32 {
        self.t
    }

    pub fn lockout(&self) -> bool {
        self.lockout
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.ended
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn header(&self) -> LogRecord {
        LogRecord::Header(SessionHeader {
            version: TRANSCRIPT_VERSION,
            config: self.config.clone(),
        })
    }

    fn push(
        &mut self,
        actor: Actor,
        payload: EventPayload,
        snapshot: Option<BeliefSnapshot>,
        wall_clock: Option<String>,
    ) {
        let seq = self.events.len() as u32;
        self.events.push(SessionEvent {
            t: self.t,
            seq,
            actor,
            payload,
            belief_snapshot: snapshot,
            wall_clock,
        });
    }

    fn end(&mut self, reason: EndReason, wall_clock: Option<String>) {
        self.ended = Some(reason);
        self.push(
            Actor::System,
            EventPayload::SessionEnd { reason },
            None,
            wall_clock,
        );
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        match self.ended {
            Some(reason) => Err(SessionError::Ended(reason)),
            None => Ok(()),
        }
    }

    /// The teacher places a card; the learner updates and responds. Once
    /// `max_steps` cards are down, a further placement ends the session.
    pub fn place(
        &mut self,
        p: Placement,
        wall_clock: Option<String>,
    ) -> Result<PlacementOutcome, SessionError> {
        self.ensure_open()?;
        if self.t >= self.config.max_steps {
            self.end(EndReason::Timeout, wall_clock);
            return Ok(PlacementOutcome {
                t: self.t,
                feedback: None,
                diagnostic: None,
                ended: self.ended,
            });
        }
        let can_terminate = !self.lockout;
        self.t += 1;
        self.lockout = false;
        self.relative_ig.push(relative_ig(self.belief.tom0(), p));
        let update = if self.config.recover_contradictions {
            Ok(self
                .belief
                .update_on_placement_or_recover(p, can_terminate, &self.learner))
        } else {
            self.belief
                .update_on_placement(p, can_terminate, &self.learner)
        };
        let update = match update {
            Ok(u) => u,
            Err(_) => {
                self.push(
                    Actor::Teacher,
                    EventPayload::Placement {
                        placement: p,
                        diagnostic: None,
                    },
                    None,
                    wall_clock.clone(),
                );
                self.end(EndReason::Contradiction, wall_clock);
                return Ok(PlacementOutcome {
                    t: self.t,
                    feedback: None,
                    diagnostic: None,
                    ended: self.ended,
                });
            }
        };
        self.belief = update.belief;
        if self.learned_at.is_none() && self.belief.knows_rule(self.config.rule) {
            self.learned_at = Some(self.t);
        }
        let snapshot = BeliefSnapshot::capture(&self.belief, self.feedback.tau_us);
        self.push(
            Actor::Teacher,
            EventPayload::Placement {
                placement: p,
                diagnostic: update.diagnostic,
            },
            Some(snapshot),
            wall_clock.clone(),
        );
        let decision =
            decide_feedback(&self.belief, &self.config.condition, self.t, &self.feedback);
        for st in &decision.statements {
            self.belief = self.belief.update_on_feedback(st, &self.learner);
        }
        if decision.has_understanding() {
            self.uscs_count += 1;
        }
        if decision.is_two_statement() {
            self.two_statement_steps.push(self.t);
        }
        self.push(
            Actor::Learner,
            EventPayload::Feedback {
                decision: decision.clone(),
            },
            None,
            wall_clock,
        );
        Ok(PlacementOutcome {
            t: self.t,
            feedback: Some(decision),
            diagnostic: update.diagnostic,
            ended: None,
        })
    }

    /// The teacher tries to end the session; it ends iff the learner knows
    /// the rule. A failed attempt locks terminate out until the next card.
    pub fn terminate(
        &mut self,
        wall_clock: Option<String>,
    ) -> Result<TerminateOutcome, SessionError> {
        self.ensure_open()?;
        if self.lockout {
            return Err(SessionError::Locked);
        }
        let success = self.belief.knows_rule(self.config.rule);
        self.belief = self.belief.update_on_terminate(&self.learner).belief;
        let snapshot = BeliefSnapshot::capture(&self.belief, self.feedback.tau_us);
        self.push(
            Actor::Teacher,
            EventPayload::TerminateAttempt { success },
            Some(snapshot),
            wall_clock.clone(),
        );
        if success {
            self.end(EndReason::Success, wall_clock);
        } else {
            self.failed_terminations += 1;
            self.lockout = true;
        }
        Ok(TerminateOutcome { success })
    }

    /// Records a questionnaire answer; allowed after the session ends.
    pub fn likert(
        &mut self,
        prompt: LikertPrompt,
        score: u8,
        wall_clock: Option<String>,
    ) -> Result<(), SessionError> {
        if !(1..=5).contains(&score) {
            return Err(SessionError::InvalidScore(score));
        }
        self.push(
            Actor::Teacher,
            EventPayload::LikertResponse { prompt, score },
            None,
            wall_clock,
        );
        Ok(())
    }

    pub fn metrics(&self) -> SessionMetrics {
        let m1 = self.t;
        SessionMetrics {
            m1_cards: m1,
            m2_excess_cards: self.learned_at.map_or(0, |l| m1 - l),
            m3_termination_attempts: self.failed_terminations,
            m6_relative_ig: self.relative_ig.clone(),
            learned_at: self.learned_at,
            final_model_marginal: self
                .config
                .ground_truth_model()
                .map(|i| self.belief.model_marginal()[i]),
            outcome: self.ended,
            uscs_count: self.uscs_count,
            two_statement_steps: self.two_statement_steps.clone(),
        }
    }

    /// Header, events and, once the session has ended, the metrics record.
    pub fn records(&self) -> Vec<LogRecord> {
        let mut out = vec![self.header()];
        out.extend(self.events.iter().cloned().map(LogRecord::Event));
        if self.ended.is_some() {
            out.push(LogRecord::Metrics(self.metrics()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRun {
    pub records: Vec<LogRecord>,
    pub metrics: SessionMetrics,
}

impl SessionRun {
    pub fn events(&self) -> impl Iterator<Item = &SessionEvent> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Event(e) => Some(e),
            _ => None,
        })
    }

    pub fn to_ndjson(&self) -> String {
        to_ndjson(&self.records)
    }
}

fn sample_action(prediction: &TeacherPrediction, rng: &mut ChaCha8Rng) -> Option<Placement> {
    match prediction {
        TeacherPrediction::Terminate => None,
        TeacherPrediction::Place(probs) => {
            let dist =
                WeightedIndex::new(probs.iter()).expect("teacher has a consistent placement");
            Some(Placement::from_index(dist.sample(rng)))
        }
    }
}

/// Runs a session against a simulated teacher that acts on its own model of
/// the learner, built from the configured ground-truth biases.
pub fn run_simulated_session(cfg: &SessionConfig) -> Result<SessionRun, ConfigError> {
    let params = cfg
        .teacher_params
        .ok_or_else(|| ConfigError::Invalid("a simulated session needs teacher_params".into()))?;
    let mut session = LearnerSession::new(cfg.clone())?;
    let interpretation = session.learner.interpretation;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut teacher = HumanModel::new(params);
    while session.ended().is_none() {
        let prediction =
            teacher.predict_teacher_action(cfg.rule, !session.lockout(), cfg.thresholds.theta_term);
        match sample_action(&prediction, &mut rng) {
            None => {
                session
                    .terminate(None)
                    .expect("teacher only terminates when allowed");
            }
            Some(p) => {
                let outcome = session.place(p, None).expect("session is open");
                if outcome.ended.is_some() {
                    break;
                }
                teacher = match teacher.update_on_placement(p) {
                    Ok(t) => t,
                    Err(_) => {
                        session.end(EndReason::Contradiction, None);
                        break;
                    }
                };
                for st in outcome.feedback.iter().flat_map(|d| d.statements.iter()) {
                    teacher = teacher.interpret_feedback(st, &interpretation);
                }
            }
        }
    }
    Ok(SessionRun {
        records: session.records(),
        metrics: session.metrics(),
    })
}

/// Draws a rule uniformly from a seed, for sessions whose rule is hidden.
pub fn random_rule(seed: u64) -> Rule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Rule::from_index(rng.random_range(0..crate::domain::RULE_COUNT))
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("transcript does not start with a header record")]
    MissingHeader,
    #[error("unsupported transcript version {0}")]
    Version(u32),
    #[error("invalid transcript: {0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub fn to_ndjson(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_record(w: &mut impl Write, record: &LogRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")
}

pub fn read_transcript(r: impl BufRead) -> Result<Vec<LogRecord>, TranscriptError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| TranscriptError::Json {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

/// A parsed transcript split into its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub config: SessionConfig,
    pub events: Vec<SessionEvent>,
    pub metrics: Option<SessionMetrics>,
}

impl Transcript {
    pub fn from_records(records: &[LogRecord]) -> Result<Transcript, TranscriptError> {
        let mut it = records.iter();
        let config = match it.next() {
            Some(LogRecord::Header(h)) if h.version == TRANSCRIPT_VERSION => h.config.clone(),
            Some(LogRecord::Header(h)) => return Err(TranscriptError::Version(h.version)),
            _ => return Err(TranscriptError::MissingHeader),
        };
        let mut events = Vec::new();
        let mut metrics = None;
        for r in it {
            match r {
                LogRecord::Header(_) => {
                    return Err(TranscriptError::Invalid("second header record".into()))
                }
                // Questionnaire answers may follow the end of a live session.
                LogRecord::Event(e)
                    if metrics.is_none()
                        || matches!(e.payload, EventPayload::LikertResponse { .. }) =>
                {
                    events.push(e.clone())
                }
                LogRecord::Event(_) => {
                    return Err(TranscriptError::Invalid(
                        "event after metrics record".into(),
                    ))
                }
                LogRecord::Metrics(m) => metrics = Some(m.clone()),
            }
        }
        Ok(Transcript {
            config,
            events,
            metrics,
        })
    }

    pub fn read(r: impl BufRead) -> Result<Transcript, TranscriptError> {
        Transcript::from_records(&read_transcript(r)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayMismatch {
    pub seq: u32,
    pub expected: String,
    pub found: String,
}

/// Rebuilds a session by feeding a transcript's teacher actions back through
/// a fresh learner. Learner and system events are regenerated, not copied.
pub fn resume(transcript: &Transcript) -> Result<LearnerSession, TranscriptError> {
    let mut session = LearnerSession::new(transcript.config.clone())?;
    for e in &transcript.events {
        if e.actor != Actor::Teacher {
            continue;
        }
        let clock = e.wall_clock.clone();
        let result = match &e.payload {
            EventPayload::Placement { placement, .. } => {
                session.place(*placement, clock).map(|_| ())
            }
            EventPayload::TerminateAttempt { .. } => session.terminate(clock).map(|_| ()),
            EventPayload::LikertResponse { prompt, score } => {
                session.likert(*prompt, *score, clock)
            }
            other => {
                return Err(TranscriptError::Invalid(format!(
                    "teacher event with payload {other:?}"
                )))
            }
        };
        result.map_err(|err| TranscriptError::Invalid(format!("event {}: {err}", e.seq)))?;
    }
    Ok(session)
}

/// Replays a transcript and returns the first event whose regenerated form
/// differs from the log.
pub fn replay(transcript: &Transcript) -> Result<Option<ReplayMismatch>, TranscriptError> {
    let session = resume(transcript)?;
    let regenerated = session.events();
    let len = regenerated.len().max(transcript.events.len());
    for i in 0..len {
        let expected = regenerated
            .get(i)
            .map(|e| serde_json::to_string(e).expect("serialize"));
        let found = transcript
            .events
            .get(i)
            .map(|e| serde_json::to_string(e).expect("serialize"));
        if expected != found {
            return Ok(Some(ReplayMismatch {
                seq: i as u32,
                expected: expected.unwrap_or_else(|| "<none>".into()),
                found: found.unwrap_or_else(|| "<none>".into()),
            }));
        }
    }
    Ok(None)
}

/// Recomputes a session's metrics from its events alone, with a literal
/// filter of its own rather than the session engine's bookkeeping.
pub fn recompute_metrics(transcript: &Transcript) -> SessionMetrics {
    let cfg = &transcript.config;
    let mut b = BeliefVector::uniform();
    let mut m = SessionMetrics {
        m1_cards: 0,
        m2_excess_cards: 0,
        m3_termination_attempts: 0,
        m6_relative_ig: Vec::new(),
        learned_at: None,
        final_model_marginal: None,
        outcome: None,
        uscs_count: 0,
        two_statement_steps: Vec::new(),
    };
    let truth = cfg.ground_truth_model();
    for e in &transcript.events {
        if let (Some(i), Some(snap)) = (truth, &e.belief_snapshot) {
            m.final_model_marginal = snap.model_marginal.get(i).copied();
        }
        match &e.payload {
            EventPayload::Placement { placement, .. } => {
                m.m1_cards += 1;
                m.m6_relative_ig.push(relative_ig(&b, *placement));
                b = match b.literal_update(*placement) {
                    Ok(next) => next,
                    Err(_) if cfg.recover_contradictions => BeliefVector::uniform()
                        .literal_update(*placement)
                        .expect("consistent with some rule"),
                    Err(_) => continue,
                };
                if m.learned_at.is_none() && b.is_singleton_on(cfg.rule) {
                    m.learned_at = Some(m.m1_cards);
                }
            }
            EventPayload::TerminateAttempt { success: false } => m.m3_termination_attempts += 1,
            EventPayload::Feedback { decision } => {
                if decision.has_understanding() {
                    m.uscs_count += 1;
                }
                if decision.is_two_statement() {
                    m.two_statement_steps.push(e.t);
                }
            }
            EventPayload::SessionEnd { reason } => m.outcome = Some(*reason),
            _ => {}
        }
    }
    m.m2_excess_cards = m.learned_at.map_or(0, |l| m.m1_cards - l);
    m
}

/// Greedy placement for `rule` under belief `b`: the consistent placement
/// with the largest information gain, first in canonical order on ties.
pub fn greedy_placement(b: &BeliefVector, rule: Rule) -> Placement {
    let mut best: Option<(f64, Placement)> = None;
    for p in enumerate_placements() {
        if !crate::domain::is_consistent(p, rule) {
            continue;
        }
        let ig = b.information_gain(p).unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|(bi, _)| ig > bi) {
            best = Some((ig, p));
        }
    }
    best.expect("every rule allows placements").1
}
