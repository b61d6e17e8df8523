//! The second-order learner: a joint belief over (rule, teacher model),
//! the teacher models' nested estimates of the learner's belief, and the
//! learner's own literal belief over rules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, BeliefVector, NORMALIZATION_TOLERANCE};
use crate::domain::{
    all_expressions, consistent_by_index, holds_by_index, FeatureExpression, Placement, Rule,
    EXPRESSION_COUNT, RULE_COUNT,
};
use crate::human::{CbhParams, HumanModel, InterpretationConfig, ModelGrid, TeacherPrediction};
use crate::statement::Statement;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    /// Literal learner that grants two confidence statements whenever the
    /// second-order learner would have explained itself.
    Tom0,
    /// Literal learner that grants two confidence statements at random steps.
    Tom0Random,
    Tom2,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 3] = [
        ConditionKind::Tom0,
        ConditionKind::Tom0Random,
        ConditionKind::Tom2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionKind::Tom0 => "tom0",
            ConditionKind::Tom0Random => "tom0random",
            ConditionKind::Tom2 => "tom2",
        }
    }
}

impl std::fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ConditionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConditionKind::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown condition `{s}` (expected tom0, tom0random or tom2)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerCondition {
    pub kind: ConditionKind,
    pub rng_seed: u64,
}

/// How the joint belief weighs an observed placement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMode {
    /// Multiply by each model's predicted probability of the placement.
    #[default]
    Soft,
    /// Keep only models whose most likely placements include it.
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerSettings {
    pub detection: DetectionMode,
    pub theta_term: f64,
    pub interpretation: InterpretationConfig,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        LearnerSettings {
            detection: DetectionMode::Soft,
            theta_term: 0.99,
            interpretation: InterpretationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// Every (rule, model) pair gave the placement zero probability; the
    /// joint was reset to uniform over consistent pairs.
    JointCollapsed,
    /// The placement contradicted every rule the learner still held; the
    /// learner restarted from that placement alone.
    ContradictionRecovered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementUpdate {
    pub belief: InteractiveBelief,
    pub diagnostic: Option<Diagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpressionDiscrepancy {
    pub expression: FeatureExpression,
    /// Expected distance between the learner's marginal and the teacher
    /// models' estimate of it.
    pub error: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    /// One entry per expression in canonical order.
    pub entries: Vec<ExpressionDiscrepancy>,
    pub best: FeatureExpression,
    pub best_reward: f64,
    pub crosses_threshold: bool,
}

impl DiscrepancyReport {
    pub fn entry(&self, e: FeatureExpression) -> &ExpressionDiscrepancy {
        &self.entries[e.index()]
    }

    /// Highest-reward entries, ties in canonical order.
    pub fn top(&self, k: usize) -> Vec<ExpressionDiscrepancy> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| {
            b.reward
                .total_cmp(&a.reward)
                .then(a.expression.index().cmp(&b.expression.index()))
        });
        v.truncate(k);
        v
    }
}

/// Joint belief over (rule, teacher model) plus the learner's own belief.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractiveBelief {
    grid: ModelGrid,
    models: Vec<HumanModel>,
    /// Rule-major: `joint[s * grid.len() + m]`.
    joint: Vec<f64>,
    tom0: BeliefVector,
}

impl InteractiveBelief {
    pub fn new(grid: ModelGrid) -> InteractiveBelief {
        let n = RULE_COUNT * grid.len();
        let models = grid.models().iter().map(|&p| HumanModel::new(p)).collect();
        InteractiveBelief {
            grid,
            models,
            joint: vec![1.0 / n as f64; n],
            tom0: BeliefVector::uniform(),
        }
    }

    pub fn grid(&self) -> &ModelGrid {
        &self.grid
    }

    pub fn models(&self) -> &[HumanModel] {
        &self.models
    }

    pub fn tom0(&self) -> &BeliefVector {
        &self.tom0
    }

    pub fn joint(&self, s: Rule, m: usize) -> f64 {
        self.joint[s.index() * self.grid.len() + m]
    }

    pub fn rule_marginal(&self) -> BeliefVector {
        let m = self.grid.len();
        let w = std::array::from_fn(|s| self.joint[s * m..(s + 1) * m].iter().sum());
        BeliefVector::from_weights(w).expect("joint has mass")
    }

    pub fn model_marginal(&self) -> Vec<f64> {
        let m = self.grid.len();
        (0..m)
            .map(|j| (0..RULE_COUNT).map(|s| self.joint[s * m + j]).sum())
            .collect()
    }

    /// Marginal mass on the grid member with the given biases.
    pub fn model_mass(&self, params: &CbhParams) -> Option<f64> {
        self.grid.position(params).map(|i| self.model_marginal()[i])
    }

    /// The learner knows `r` once its own belief is a singleton on it.
    pub fn knows_rule(&self, r: Rule) -> bool {
        self.tom0.is_singleton_on(r)
    }

    /// Mode of the joint's rule marginal, first in canonical order on ties.
    pub fn most_likely_rule(&self) -> Rule {
        let rm = self.rule_marginal();
        let best =
            (0..RULE_COUNT).fold(0, |b, s| if rm.probs()[s] > rm.probs()[b] { s } else { b });
        Rule::from_index(best)
    }

    /// Learner's probability that expression `e` is part of the rule, under
    /// the joint belief.
    pub fn joint_expression_marginal(&self, e: FeatureExpression) -> f64 {
        let m = self.grid.len();
        let ei = e.index();
        (0..RULE_COUNT)
            .filter(|&s| holds_by_index(ei, s))
            .map(|s| self.joint[s * m..(s + 1) * m].iter().sum::<f64>())
            .sum()
    }

    /// Teacher models' expected estimate of the learner's marginal on `e`.
    pub fn nested_expression_marginal(&self, e: FeatureExpression) -> f64 {
        let m = self.grid.len();
        let mut total = 0.0;
        for s in 0..RULE_COUNT {
            for (j, model) in self.models.iter().enumerate() {
                let w = self.joint[s * m + j];
                if w > 0.0 {
                    total += w * model.nested_beliefs()[s].expression_marginal(e);
                }
            }
        }
        total
    }

    fn placement_likelihood(
        &self,
        prediction: &TeacherPrediction,
        p: Placement,
        mode: DetectionMode,
    ) -> f64 {
        match mode {
            DetectionMode::Soft => prediction.placement_probability(p),
            DetectionMode::Indicator => {
                if prediction.argmax_placements().contains(&p) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Observes a teacher placement.
    ///
    /// The learner's own belief is filtered literally; each (rule, model)
    /// pair is weighted by how likely that model, teaching that rule, was
    /// to make the placement; then every model's nested beliefs advance.
    pub fn update_on_placement(
        &self,
        p: Placement,
        can_terminate: bool,
        settings: &LearnerSettings,
    ) -> Result<PlacementUpdate, LearnerError> {
        let tom0 = self.tom0.literal_update(p)?;
        let m = self.grid.len();
        let pi = p.index();
        let mut joint = vec![0.0; self.joint.len()];
        for s in 0..RULE_COUNT {
            if !consistent_by_index(pi, s) {
                continue;
            }
            let rule = Rule::from_index(s);
            for (j, model) in self.models.iter().enumerate() {
                let prior = self.joint[s * m + j];
                if prior > 0.0 {
                    let prediction =
                        model.predict_teacher_action(rule, can_terminate, settings.theta_term);
                    joint[s * m + j] =
                        prior * self.placement_likelihood(&prediction, p, settings.detection);
                }
            }
        }
        let mut diagnostic = None;
        if !normalize(&mut joint) {
            diagnostic = Some(Diagnostic::JointCollapsed);
            joint = uniform_consistent_joint(&tom0, m);
        }
        let models = self
            .models
            .iter()
            .map(|model| model.update_on_placement(p))
            .collect::<Result<_, _>>()?;
        Ok(PlacementUpdate {
            belief: InteractiveBelief {
                grid: self.grid.clone(),
                models,
                joint,
                tom0,
            },
            diagnostic,
        })
    }

    /// Like [`InteractiveBelief::update_on_placement`], but a placement that
    /// contradicts everything the learner holds restarts the learner from
    /// that placement instead of failing.
    pub fn update_on_placement_or_recover(
        &self,
        p: Placement,
        can_terminate: bool,
        settings: &LearnerSettings,
    ) -> PlacementUpdate {
        match self.update_on_placement(p, can_terminate, settings) {
            Ok(update) => update,
            Err(_) => {
                let fresh = InteractiveBelief::new(self.grid.clone());
                let mut update = fresh
                    .update_on_placement(p, can_terminate, settings)
                    .expect("every placement is consistent with some rule");
                update.diagnostic = Some(Diagnostic::ContradictionRecovered);
                update
            }
        }
    }

    /// Observes a termination attempt: pairs whose model would not have
    /// tried to end the session lose their mass. If no pair predicted it the
    /// joint is kept as it was.
    pub fn update_on_terminate(&self, settings: &LearnerSettings) -> PlacementUpdate {
        let m = self.grid.len();
        let mut joint = self.joint.clone();
        for s in 0..RULE_COUNT {
            let rule = Rule::from_index(s);
            for (j, model) in self.models.iter().enumerate() {
                let w = &mut joint[s * m + j];
                if *w > 0.0 {
                    *w *= model
                        .predict_teacher_action(rule, true, settings.theta_term)
                        .terminate_probability();
                }
            }
        }
        if normalize(&mut joint) {
            PlacementUpdate {
                belief: InteractiveBelief {
                    joint,
                    ..self.clone()
                },
                diagnostic: None,
            }
        } else {
            PlacementUpdate {
                belief: self.clone(),
                diagnostic: Some(Diagnostic::JointCollapsed),
            }
        }
    }

    /// Every teacher model reads the learner's own statement. The
    /// statement carries no information about the rule, so the joint and
    /// the learner's belief stay put.
    pub fn update_on_feedback(
        &self,
        st: &Statement,
        settings: &LearnerSettings,
    ) -> InteractiveBelief {
        InteractiveBelief {
            grid: self.grid.clone(),
            models: self
                .models
                .iter()
                .map(|m| m.interpret_feedback(st, &settings.interpretation))
                .collect(),
            joint: self.joint.clone(),
            tom0: self.tom0,
        }
    }

    /// Per-expression discrepancy between the learner's belief and the
    /// teacher models' estimates of it, and the reward for explaining it.
    ///
    /// For expression `e`, model `m` and hypothesis `s`, the error is
    /// `|b0(e) - n_sm(e)|` with `b0` the learner's own belief and `n_sm`
    /// the nested estimate. The reward is
    /// `b2(e) * sum_{s,m} joint(s,m) * n_sm(e) * error_sm(e)` where `b2(e)`
    /// is the joint belief's marginal on `e`.
    pub fn compute_discrepancy(&self, tau_us: f64) -> DiscrepancyReport {
        let m = self.grid.len();
        let own: Vec<f64> = all_expressions()
            .iter()
            .map(|&e| self.tom0.expression_marginal(e))
            .collect();
        let mut error = [0.0; EXPRESSION_COUNT];
        let mut weighted = [0.0; EXPRESSION_COUNT];
        for s in 0..RULE_COUNT {
            for (j, model) in self.models.iter().enumerate() {
                let w = self.joint[s * m + j];
                if w <= 0.0 {
                    continue;
                }
                let nested = &model.nested_beliefs()[s];
                for (ei, &e) in all_expressions().iter().enumerate() {
                    let n = nested.expression_marginal(e);
                    let d = (own[ei] - n).abs();
                    error[ei] += w * d;
                    weighted[ei] += w * n * d;
                }
            }
        }
        let entries: Vec<ExpressionDiscrepancy> = all_expressions()
            .iter()
            .enumerate()
            .map(|(ei, &e)| ExpressionDiscrepancy {
                expression: e,
                error: error[ei],
                reward: self.joint_expression_marginal(e) * weighted[ei],
            })
            .collect();
        // Only a component of the rule the teacher most likely teaches,
        // which the teacher overestimates and the learner is still unsure
        // of, can be explained.
        let likely = self.most_likely_rule();
        let nested_marginal: Vec<f64> = all_expressions()
            .iter()
            .map(|&e| self.nested_expression_marginal(e))
            .collect();
        let explainable = |ei: usize| {
            FeatureExpression::from_index(ei).designates(likely)
                && own[ei] < 1.0 - NORMALIZATION_TOLERANCE
                && nested_marginal[ei] > own[ei] + NORMALIZATION_TOLERANCE
        };
        let best = entries
            .iter()
            .filter(|x| explainable(x.expression.index()))
            .fold(None, |acc: Option<ExpressionDiscrepancy>, x| match acc {
                Some(a) if a.reward >= x.reward => Some(a),
                _ => Some(*x),
            })
            .unwrap_or(entries[0]);
        let crosses_threshold = best.reward > tau_us && explainable(best.expression.index());
        DiscrepancyReport {
            best: best.expression,
            best_reward: best.reward,
            crosses_threshold,
            entries,
        }
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let total: f64 = v.iter().sum();
    if total.is_nan() || total <= 0.0 || total.is_infinite() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
    debug_assert!((v.iter().sum::<f64>() - 1.0).abs() < NORMALIZATION_TOLERANCE);
    true
}

fn uniform_consistent_joint(tom0: &BeliefVector, models: usize) -> Vec<f64> {
    let mut joint = vec![0.0; RULE_COUNT * models];
    for r in tom0.support() {
        for j in 0..models {
            joint[r.index() * models + j] = 1.0;
        }
    }
    normalize(&mut joint);
    joint
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{enumerate_placements, is_consistent};
    use crate::statement::{Tier, TierThresholds};

    fn rule(s: &str) -> Rule {
        s.parse().unwrap()
    }

    fn placement(s: &str) -> Placement {
        s.parse().unwrap()
    }

    fn settings() -> LearnerSettings {
        LearnerSettings::default()
    }

    fn observe(ib: &InteractiveBelief, p: &str) -> InteractiveBelief {
        ib.update_on_placement(placement(p), true, &settings())
            .unwrap()
            .belief
    }

    #[test]
    fn fresh_belief_is_uniform_and_silent() {
        let ib = InteractiveBelief::new(ModelGrid::default());
        assert!((ib.joint.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let report = ib.compute_discrepancy(0.05);
        assert!(report
            .entries
            .iter()
            .all(|e| e.error == 0.0 && e.reward == 0.0));
        assert!(!report.crosses_threshold);
        assert!(!ib.knows_rule(rule("Color:Red|Blue")));
    }

    #[test]
    fn single_unbiased_model_has_no_discrepancy() {
        let mut ib = InteractiveBelief::new(ModelGrid::unbiased_only());
        let th = TierThresholds::default();
        for p in [
            "Red-Solid-One-Oval→1",
            "Green-Empty-Two-Diamond→2",
            "Blue-Striped-Three-Oval→2",
        ] {
            ib = observe(&ib, p);
            assert_eq!(ib.rule_marginal().support_size(), ib.tom0().support_size());
            let e = FeatureExpression::Class(crate::domain::FeatureClass::Color);
            let st = Statement::confidence(th.tier(ib.tom0().expression_marginal(e)), e);
            ib = ib.update_on_feedback(&st, &settings());
            for b in ib.models()[0].nested_beliefs() {
                assert!(b.max_abs_diff(ib.tom0()) < 1e-12);
            }
            let report = ib.compute_discrepancy(0.05);
            assert!(report
                .entries
                .iter()
                .all(|e| e.error < 1e-12 && e.reward < 1e-12));
        }
    }

    #[test]
    fn joint_support_follows_literal_support() {
        let mut ib = InteractiveBelief::new(ModelGrid::default());
        for p in ["Red-Solid-One-Oval→1", "Blue-Solid-Two-Diamond→2"] {
            ib = observe(&ib, p);
            let rm = ib.rule_marginal();
            for r in crate::domain::enumerate_rules() {
                if ib.tom0().prob(r) == 0.0 {
                    assert_eq!(rm.prob(r), 0.0);
                }
            }
            assert!((ib.model_marginal().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn uninformative_evidence_keeps_model_marginal() {
        // All models share the same (uniform) nested beliefs at t = 0 and
        // beta only matters through card similarity, so two models with the
        // same beta are indistinguishable on the first placement.
        let grid = ModelGrid::new(vec![
            CbhParams::new(0.0, 0.0, 4.0).unwrap(),
            CbhParams::new(0.0, 2.0, 4.0).unwrap(),
        ])
        .unwrap();
        let ib = InteractiveBelief::new(grid);
        let next = observe(&ib, "Green-Striped-Three-Squiggle→2");
        let mm = next.model_marginal();
        assert!((mm[0] - 0.5).abs() < 1e-12 && (mm[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_support_propagates_and_recovery_restarts() {
        let mut ib = InteractiveBelief::new(ModelGrid::default());
        let r = rule("Color:Red|Blue");
        // Drive the learner to the singleton with greedy placements.
        while !ib.knows_rule(r) {
            let p = enumerate_placements()
                .into_iter()
                .filter(|&p| is_consistent(p, r))
                .max_by(|&a, &b| {
                    ib.tom0()
                        .information_gain(a)
                        .unwrap_or(f64::NEG_INFINITY)
                        .total_cmp(&ib.tom0().information_gain(b).unwrap_or(f64::NEG_INFINITY))
                })
                .unwrap();
            ib = ib.update_on_placement(p, true, &settings()).unwrap().belief;
        }
        assert!(ib.knows_rule(r));
        let bad = enumerate_placements()
            .into_iter()
            .find(|&p| !is_consistent(p, r))
            .unwrap();
        assert!(matches!(
            ib.update_on_placement(bad, true, &settings()),
            Err(LearnerError::Belief(BeliefError::ZeroSupport(_)))
        ));
        let rec = ib.update_on_placement_or_recover(bad, true, &settings());
        assert_eq!(rec.diagnostic, Some(Diagnostic::ContradictionRecovered));
        assert_eq!(rec.belief.tom0().support_size(), 16);
    }

    #[test]
    fn feedback_leaves_joint_and_own_belief() {
        let ib = observe(
            &InteractiveBelief::new(ModelGrid::default()),
            "Red-Solid-One-Oval→1",
        );
        let st = Statement::confidence(
            Tier::IThink,
            FeatureExpression::Class(crate::domain::FeatureClass::Fill),
        );
        let after = ib.update_on_feedback(&st, &settings());
        assert_eq!(after.joint, ib.joint);
        assert_eq!(after.tom0, ib.tom0);
    }

    #[test]
    fn indicator_mode_rewards_matching_model() {
        let truth = CbhParams::new(5.0, 0.0, f64::INFINITY).unwrap();
        let grid = ModelGrid::new(vec![
            CbhParams::unbiased(4.0),
            CbhParams::new(5.0, 0.0, 4.0).unwrap(),
        ])
        .unwrap();
        let s = rule("Shape:Diamond|Oval");
        let mut teacher = HumanModel::new(truth);
        let mut ib = InteractiveBelief::new(grid);
        let st = LearnerSettings {
            detection: DetectionMode::Indicator,
            ..settings()
        };
        for _ in 0..4 {
            let p = teacher
                .predict_teacher_action(s, false, 0.99)
                .argmax_placements()[0];
            ib = ib.update_on_placement(p, false, &st).unwrap().belief;
            teacher = teacher.update_on_placement(p).unwrap();
        }
        let mass = ib.model_marginal()[1];
        assert!(mass > 0.5, "biased model mass {mass}");
    }
}
