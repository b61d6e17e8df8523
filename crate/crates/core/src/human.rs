//! Bias-parameterized teacher models.
//!
//! A [`HumanModel`] is a first-order model of a teacher: for every rule the
//! teacher might be teaching it tracks the teacher's estimate of what the
//! learner currently believes. Two distortions shape that estimate:
//!
//! * local thinking (`beta`): placements are read through a likelihood
//!   tilted toward rules that share feature values with the card;
//! * confirmation bias (`gamma`): learner statements that would lower the
//!   teacher's estimate of the learner's belief in the taught rule are
//!   discounted.
//!
//! The teacher's next action is a softmax over placements scored by how much
//! the teacher expects each one to convince the learner of the taught rule.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, BeliefVector, LITERAL_LIKELIHOOD};
use crate::domain::{
    consistent_by_index, cosine_by_index, holds_by_index, FeatureExpression, Placement, Rule,
    PLACEMENT_COUNT, RULE_COUNT,
};
use crate::statement::{Statement, TierThresholds};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid bias parameters: {0}")]
    InvalidParams(String),
    #[error("invalid model grid: {0}")]
    InvalidGrid(String),
}

/// Bias strengths and action-selection rationality of a teacher model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbhParams {
    /// Local-thinking (representativeness) strength.
    pub beta: f64,
    /// Confirmation-bias strength.
    pub gamma: f64,
    /// Inverse temperature of the teacher's action softmax. Infinite means
    /// the teacher always picks a best-scoring placement.
    #[serde(with = "lambda_serde")]
    pub lambda: f64,
}

pub const DEFAULT_LAMBDA: f64 = 4.0;

impl CbhParams {
    pub fn new(beta: f64, gamma: f64, lambda: f64) -> Result<CbhParams, ModelError> {
        let p = CbhParams {
            beta,
            gamma,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn unbiased(lambda: f64) -> CbhParams {
        CbhParams {
            beta: 0.0,
            gamma: 0.0,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn is_unbiased(&self) -> bool {
        self.beta == 0.0 && self.gamma == 0.0
    }

    /// Same biases, ignoring rationality.
    pub fn same_biases(&self, other: &CbhParams) -> bool {
        self.beta == other.beta && self.gamma == other.gamma
    }
}

impl fmt::Display for CbhParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "beta={},gamma={},lambda={}",
            self.beta, self.gamma, self.lambda
        )
    }
}

impl FromStr for CbhParams {
    type Err = ModelError;

    /// Parses `beta=5,gamma=2[,lambda=4]`; omitted keys default to 0 for
    /// the biases and [`DEFAULT_LAMBDA`] for lambda.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = CbhParams::unbiased(DEFAULT_LAMBDA);
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                ModelError::InvalidParams(format!("expected key=value, got `{part}`"))
            })?;
            let value: f64 = match value.trim() {
                "inf" | "infinity" => f64::INFINITY,
                v => v
                    .parse()
                    .map_err(|_| ModelError::InvalidParams(format!("`{v}` is not a number")))?,
            };
            match key.trim() {
                "beta" => p.beta = value,
                "gamma" => p.gamma = value,
                "lambda" => p.lambda = value,
                k => return Err(ModelError::InvalidParams(format!("unknown key `{k}`"))),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

mod lambda_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid lambda `{s}`"))),
        }
    }
}

/// The finite set of teacher models the learner reasons over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CbhParams>", into = "Vec<CbhParams>")]
pub struct ModelGrid {
    models: Vec<CbhParams>,
}

impl ModelGrid {
    pub fn new(models: Vec<CbhParams>) -> Result<ModelGrid, ModelError> {
        if models.is_empty() {
            return Err(ModelError::InvalidGrid("grid is empty".into()));
        }
        for m in &models {
            m.validate()?;
        }
        let unbiased = models.iter().filter(|m| m.is_unbiased()).count();
        if unbiased != 1 {
            return Err(ModelError::InvalidGrid(format!(
                "grid must contain the unbiased model exactly once, found {unbiased}"
            )));
        }
        for (i, a) in models.iter().enumerate() {
            if models[..i].iter().any(|b| b == a) {
                return Err(ModelError::InvalidGrid(format!("duplicate grid entry {a}")));
            }
        }
        Ok(ModelGrid { models })
    }

    /// Only the unbiased model.
    pub fn unbiased_only() -> ModelGrid {
        ModelGrid {
            models: vec![CbhParams::unbiased(DEFAULT_LAMBDA)],
        }
    }

    pub fn models(&self) -> &[CbhParams] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Index of the first member with the same biases.
    pub fn position(&self, params: &CbhParams) -> Option<usize> {
        self.models.iter().position(|m| m.same_biases(params))
    }
}

impl Default for ModelGrid {
    /// (beta, gamma) in {(0,0), (5,0), (0,2), (5,2)} at the default lambda.
    fn default() -> Self {
        let models = [(0.0, 0.0), (5.0, 0.0), (0.0, 2.0), (5.0, 2.0)]
            .into_iter()
            .map(|(beta, gamma)| CbhParams {
                beta,
                gamma,
                lambda: DEFAULT_LAMBDA,
            })
            .collect();
        ModelGrid { models }
    }
}

impl TryFrom<Vec<CbhParams>> for ModelGrid {
    type Error = ModelError;

    fn try_from(v: Vec<CbhParams>) -> Result<Self, Self::Error> {
        ModelGrid::new(v)
    }
}

impl From<ModelGrid> for Vec<CbhParams> {
    fn from(g: ModelGrid) -> Self {
        g.models
    }
}

/// Tilted observation likelihood: the literal likelihood scaled by
/// `exp(beta * cos(rule, card))`, zero for inconsistent placements.
pub fn biased_likelihood(r: Rule, p: Placement, beta: f64) -> f64 {
    biased_likelihood_by_index(r.index(), p.index(), beta)
}

fn biased_likelihood_by_index(rule: usize, placement: usize, beta: f64) -> f64 {
    if !consistent_by_index(placement, rule) {
        return 0.0;
    }
    if beta == 0.0 {
        return LITERAL_LIKELIHOOD;
    }
    LITERAL_LIKELIHOOD * (beta * cosine_by_index(placement / 2, rule)).exp()
}

/// How a listener reads learner statements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpretationConfig {
    pub tiers: TierThresholds,
    /// Least probability a listener assigns to an alternative the learner
    /// says "still could be" the case.
    pub possible_floor: f64,
}

impl Default for InterpretationConfig {
    fn default() -> Self {
        InterpretationConfig {
            tiers: TierThresholds::default(),
            possible_floor: 0.5,
        }
    }
}

impl InterpretationConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.tiers.validate()?;
        if !(0.0 < self.possible_floor && self.possible_floor <= 0.5) {
            return Err(format!(
                "possible_floor must lie in (0, 0.5], got {}",
                self.possible_floor
            ));
        }
        Ok(())
    }

    /// The probability bands a statement asserts, one per clause.
    pub fn constraints(&self, st: &Statement) -> Vec<(FeatureExpression, (f64, f64))> {
        match st.us_expression() {
            None => vec![(st.cs_expression(), self.tiers.band(st.cs_tier()))],
            Some(us) => vec![
                (us, (0.0, 1.0 - self.possible_floor)),
                (st.cs_expression(), (self.possible_floor, 1.0)),
            ],
        }
    }
}

/// Moves `b` toward the nearest belief whose marginal on `e` lies in
/// `band`. The move is a Jeffrey update whose factors are raised to
/// `weight`: with weight 1 the marginal lands on the band edge, with weight 0
/// nothing changes, and a belief already inside the band is left untouched.
pub fn project_onto_band(
    b: &BeliefVector,
    e: FeatureExpression,
    band: (f64, f64),
    weight: f64,
) -> BeliefVector {
    let current = b.expression_marginal(e);
    let target = current.clamp(band.0, band.1);
    if target == current || current <= 0.0 || current >= 1.0 {
        return *b;
    }
    let inside = (target / current).powf(weight);
    let outside = ((1.0 - target) / (1.0 - current)).powf(weight);
    let ei = e.index();
    b.reweight(|r| {
        if holds_by_index(ei, r) {
            inside
        } else {
            outside
        }
    })
    .unwrap_or(*b)
}

/// Predicted teacher behaviour at one step.
#[derive(Debug, Clone, PartialEq)]
pub enum TeacherPrediction {
    Terminate,
    Place(Box<[f64; PLACEMENT_COUNT]>),
}

impl TeacherPrediction {
    pub fn placement_probability(&self, p: Placement) -> f64 {
        match self {
            TeacherPrediction::Terminate => 0.0,
            TeacherPrediction::Place(dist) => dist[p.index()],
        }
    }

    pub fn terminate_probability(&self) -> f64 {
        match self {
            TeacherPrediction::Terminate => 1.0,
            TeacherPrediction::Place(_) => 0.0,
        }
    }

    /// Placements sharing the highest probability.
    pub fn argmax_placements(&self) -> Vec<Placement> {
        match self {
            TeacherPrediction::Terminate => Vec::new(),
            TeacherPrediction::Place(dist) => {
                let best = dist.iter().copied().fold(0.0, f64::max);
                (0..PLACEMENT_COUNT)
                    .filter(|&i| best > 0.0 && dist[i] >= best * (1.0 - 1e-12))
                    .map(Placement::from_index)
                    .collect()
            }
        }
    }
}

/// A teacher model: bias parameters plus, for every rule the teacher might
/// be teaching, the teacher's estimate of the learner's belief.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanModel {
    params: CbhParams,
    nested: Vec<BeliefVector>,
    likelihood: LikelihoodTable,
}

/// Tilted likelihoods for every (placement, rule) pair at one `beta`.
#[derive(Clone)]
struct LikelihoodTable(Arc<[f64]>);

impl LikelihoodTable {
    fn new(beta: f64) -> LikelihoodTable {
        let mut v = Vec::with_capacity(PLACEMENT_COUNT * RULE_COUNT);
        for pi in 0..PLACEMENT_COUNT {
            for r in 0..RULE_COUNT {
                v.push(biased_likelihood_by_index(r, pi, beta));
            }
        }
        LikelihoodTable(v.into())
    }

    fn row(&self, placement: usize) -> &[f64] {
        &self.0[placement * RULE_COUNT..(placement + 1) * RULE_COUNT]
    }
}

impl PartialEq for LikelihoodTable {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Debug for LikelihoodTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LikelihoodTable")
    }
}

impl HumanModel {
    /// Fresh model: every nested belief starts uniform.
    pub fn new(params: CbhParams) -> HumanModel {
        HumanModel {
            params,
            nested: vec![BeliefVector::uniform(); RULE_COUNT],
            likelihood: LikelihoodTable::new(params.beta),
        }
    }

    pub fn params(&self) -> &CbhParams {
        &self.params
    }

    /// The teacher-teaching-`s` estimate of the learner's belief.
    pub fn nested_belief(&self, s: Rule) -> &BeliefVector {
        &self.nested[s.index()]
    }

    pub fn nested_beliefs(&self) -> &[BeliefVector] {
        &self.nested
    }

    fn tilted(&self, b: &BeliefVector, p: Placement) -> Result<BeliefVector, BeliefError> {
        let row = self.likelihood.row(p.index());
        b.reweight(|r| row[r])
            .map_err(|_| BeliefError::ZeroSupport(p))
    }

    /// Advances every nested belief through the tilted likelihood. The
    /// tilt depends only on candidate rules and the card, so each
    /// hypothesis's vector is updated the same way.
    pub fn update_on_placement(&self, p: Placement) -> Result<HumanModel, BeliefError> {
        let nested = self
            .nested
            .iter()
            .map(|b| self.tilted(b, p))
            .collect::<Result<_, _>>()?;
        Ok(HumanModel {
            params: self.params,
            nested,
            likelihood: self.likelihood.clone(),
        })
    }

    /// Interpretation weight of one clause for a teacher teaching `s` whose
    /// estimate of the learner is `b`. The understanding clause, which names
    /// what the teacher is after, is taken at face value, as is any clause
    /// that, read in full, would not lower the estimated mass on `s`.
    /// Disconfirming clauses are damped by `1 / (1 + gamma)`.
    pub fn clause_weight(
        &self,
        s: Rule,
        b: &BeliefVector,
        st: &Statement,
        e: FeatureExpression,
        band: (f64, f64),
    ) -> f64 {
        if st.us_expression() == Some(e) || self.params.gamma == 0.0 {
            return 1.0;
        }
        let full = project_onto_band(b, e, band, 1.0);
        if full.prob(s) >= b.prob(s) {
            1.0
        } else {
            1.0 / (1.0 + self.params.gamma)
        }
    }

    /// Reads a learner statement into every nested belief.
    ///
    /// Each clause asserts a probability band for one expression; the
    /// nested belief is projected toward that band with the clause weight as
    /// exponent. A nested belief that already matches the learner's belief
    /// is left unchanged, since every statement is a function of that
    /// belief.
    pub fn interpret_feedback(&self, st: &Statement, cfg: &InterpretationConfig) -> HumanModel {
        let constraints = cfg.constraints(st);
        let nested = self
            .nested
            .iter()
            .enumerate()
            .map(|(si, b)| {
                let s = Rule::from_index(si);
                constraints.iter().fold(*b, |acc, &(e, band)| {
                    let w = self.clause_weight(s, &acc, st, e, band);
                    project_onto_band(&acc, e, band, w)
                })
            })
            .collect();
        HumanModel {
            params: self.params,
            nested,
            likelihood: self.likelihood.clone(),
        }
    }

    /// Mass on `s` after the teacher's own reading of placement `p`.
    fn placement_score(&self, b: &BeliefVector, s: Rule, pi: usize) -> f64 {
        let row = self.likelihood.row(pi);
        let z: f64 = b.probs().iter().zip(row).map(|(x, l)| x * l).sum();
        if z <= 0.0 {
            return 0.0;
        }
        b.prob(s) * row[s.index()] / z
    }

    /// Scores of every placement for a teacher teaching `s`; `None` marks
    /// placements outside the teacher's action space.
    pub fn placement_scores(&self, s: Rule) -> [Option<f64>; PLACEMENT_COUNT] {
        let b = &self.nested[s.index()];
        let si = s.index();
        std::array::from_fn(|pi| {
            consistent_by_index(pi, si).then(|| self.placement_score(b, s, pi))
        })
    }

    /// Distribution over the teacher's next action when teaching `s`.
    ///
    /// The teacher terminates once its estimate of the learner's mass on `s`
    /// reaches `theta_term` (if allowed). Otherwise placements consistent
    /// with `s` are drawn from a softmax with inverse temperature `lambda`
    /// over their scores, measured in bits of the post-update mass on `s`.
    pub fn predict_teacher_action(
        &self,
        s: Rule,
        can_terminate: bool,
        theta_term: f64,
    ) -> TeacherPrediction {
        if can_terminate && self.nested[s.index()].prob(s) >= theta_term {
            return TeacherPrediction::Terminate;
        }
        let scores = self.placement_scores(s);
        let bits = scores.map(|x| x.map(|v| if v > 0.0 { v.log2() } else { f64::NEG_INFINITY }));
        let best = bits
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lambda = self.params.lambda;
        let mut dist = [0.0; PLACEMENT_COUNT];
        for (d, x) in dist.iter_mut().zip(&bits) {
            if let Some(v) = x {
                *d = if lambda.is_infinite() {
                    if *v >= best - 1e-12 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (lambda * (v - best)).exp()
                };
            }
        }
        let total: f64 = dist.iter().sum();
        for d in dist.iter_mut() {
            *d /= total;
        }
        TeacherPrediction::Place(Box::new(dist))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        enumerate_placements, enumerate_rules, is_consistent, FeatureClass, FeatureValue,
    };
    use crate::statement::Tier;

    fn rule(s: &str) -> Rule {
        s.parse().unwrap()
    }

    fn placement(s: &str) -> Placement {
        s.parse().unwrap()
    }

    fn params(beta: f64, gamma: f64) -> CbhParams {
        CbhParams::new(beta, gamma, DEFAULT_LAMBDA).unwrap()
    }

    #[test]
    fn biased_likelihood_values() {
        let r = rule("Color:Red|Blue");
        let p = placement("Red-Striped-Two-Oval→1");
        assert_eq!(biased_likelihood(r, p, 0.0), 1.0 / 108.0);
        let expected = (1.0 / 108.0) * (5.0 * (1.0 / (2f64.sqrt() * 2.0))).exp();
        assert!((biased_likelihood(r, p, 5.0) - expected).abs() < 1e-15);
        let bad = placement("Red-Striped-Two-Oval→2");
        for beta in [0.0, 1.0, 5.0, 50.0] {
            assert_eq!(biased_likelihood(r, bad, beta), 0.0);
        }
    }

    #[test]
    fn unbiased_placement_update_is_literal() {
        let m = HumanModel::new(params(0.0, 0.0));
        let p = placement("Green-Solid-Three-Diamond→2");
        let next = m.update_on_placement(p).unwrap();
        let literal = BeliefVector::uniform().literal_update(p).unwrap();
        for b in next.nested_beliefs() {
            assert!(b.max_abs_diff(&literal) < 1e-15);
        }
    }

    #[test]
    fn local_thinking_inflates_similar_rules() {
        let s = rule("Color:Red|Blue");
        let p = placement("Red-Striped-Two-Oval→1");
        let literal = BeliefVector::uniform().literal_update(p).unwrap();
        let tilted = HumanModel::new(params(5.0, 0.0))
            .update_on_placement(p)
            .unwrap();
        let nested = tilted.nested_belief(s);
        let has_red =
            |r: Rule| r.bin1_value() == FeatureValue::Red || r.bin2_value() == FeatureValue::Red;
        let mass = |b: &BeliefVector| {
            enumerate_rules()
                .into_iter()
                .filter(|&r| has_red(r))
                .map(|r| b.prob(r))
                .sum::<f64>()
        };
        assert!(mass(nested) > mass(&literal));
        // support is untouched
        assert_eq!(nested.support_size(), literal.support_size());
    }

    #[test]
    fn repeated_placement_keeps_support() {
        let p = placement("Blue-Empty-One-Oval→2");
        let m = HumanModel::new(params(5.0, 0.0))
            .update_on_placement(p)
            .unwrap();
        let m2 = m.update_on_placement(p).unwrap();
        for (a, b) in m.nested_beliefs().iter().zip(m2.nested_beliefs()) {
            assert_eq!(a.support_size(), b.support_size());
        }
    }

    #[test]
    fn interpretation_weights() {
        let s = rule("Shape:Diamond|Oval");
        let th = TierThresholds::default();
        // A teacher who believes the learner is fairly sure of Shape.
        let b = BeliefVector::from_weights(std::array::from_fn(|r| {
            if r == s.index() {
                40.0
            } else {
                1.0
            }
        }))
        .unwrap();
        let shape = FeatureExpression::Class(FeatureClass::Shape);
        let color = FeatureExpression::Class(FeatureClass::Color);
        let doubt = Statement::confidence(Tier::Unsure, shape);
        let confirm = Statement::confidence(Tier::IKnow, shape);
        let us =
            Statement::understanding(shape, FeatureExpression::Class(FeatureClass::Fill)).unwrap();
        let unbiased = HumanModel::new(params(0.0, 0.0));
        let cb = HumanModel::new(params(0.0, 2.0));
        for st in [&doubt, &confirm, &us] {
            let e = st.cs_expression();
            assert_eq!(
                unbiased.clause_weight(s, &b, st, e, th.band(st.cs_tier())),
                1.0
            );
        }
        let w = cb.clause_weight(s, &b, &doubt, shape, th.band(Tier::Unsure));
        assert!((w - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            cb.clause_weight(s, &b, &confirm, shape, th.band(Tier::IKnow)),
            1.0
        );
        assert_eq!(cb.clause_weight(s, &b, &us, shape, (0.0, 0.75)), 1.0);
        // Raising belief in another class takes mass from Shape.
        let other = Statement::confidence(Tier::IThink, color);
        assert!(cb.clause_weight(s, &b, &other, color, th.band(Tier::IThink)) < 1.0);
    }

    #[test]
    fn statement_matching_the_belief_changes_nothing() {
        let th = TierThresholds::default();
        let cfg = InterpretationConfig::default();
        let mut m = HumanModel::new(params(0.0, 0.0));
        for p in ["Red-Solid-One-Oval→1", "Blue-Empty-Three-Diamond→2"] {
            m = m.update_on_placement(placement(p)).unwrap();
        }
        let b = *m.nested_belief(rule("Color:Red|Blue"));
        for e in crate::domain::enumerate_expressions() {
            let st = Statement::confidence(th.tier(b.expression_marginal(e)), e);
            let after = m.interpret_feedback(&st, &cfg);
            for nb in after.nested_beliefs() {
                assert_eq!(*nb, b);
            }
        }
    }

    #[test]
    fn damped_reading_lies_between_prior_and_full_reading() {
        // gamma = 2 with a statement about a class the teacher is not
        // teaching: every rule's log-odds move by one third of the full move.
        let s = rule("Shape:Diamond|Oval");
        let e = FeatureExpression::Class(FeatureClass::Color);
        let prior = BeliefVector::from_weights(std::array::from_fn(|i| 1.0 + i as f64)).unwrap();
        let band = TierThresholds::default().band(Tier::IThink);
        let full = project_onto_band(&prior, e, band, 1.0);
        let damped = project_onto_band(&prior, e, band, 1.0 / 3.0);
        assert!((full.expression_marginal(e) - 0.5).abs() < 1e-12);
        let logit = |p: f64| (p / (1.0 - p)).ln();
        for r in enumerate_rules() {
            let (a, b, c) = (
                logit(prior.prob(r)),
                logit(damped.prob(r)),
                logit(full.prob(r)),
            );
            assert!(
                (a.min(c) - 1e-12..=a.max(c) + 1e-12).contains(&b),
                "{r}: {a} {b} {c}"
            );
        }
        let cb = HumanModel {
            nested: vec![prior; RULE_COUNT],
            ..HumanModel::new(params(0.0, 2.0))
        };
        let st = Statement::confidence(Tier::IThink, e);
        let read = cb.interpret_feedback(&st, &InterpretationConfig::default());
        assert!(read.nested_belief(s).max_abs_diff(&damped) < 1e-15);
    }

    #[test]
    fn terminate_when_nested_belief_is_certain() {
        let s = rule("Number:One|Two");
        let m = HumanModel {
            nested: vec![BeliefVector::singleton(s); RULE_COUNT],
            ..HumanModel::new(params(0.0, 0.0))
        };
        assert_eq!(
            m.predict_teacher_action(s, true, 0.99),
            TeacherPrediction::Terminate
        );
        let locked = m.predict_teacher_action(s, false, 0.99);
        assert!((locked.terminate_probability()).abs() < 1e-15);
    }

    #[test]
    fn prediction_is_a_distribution_over_consistent_placements() {
        let s = rule("Fill:Solid|Empty");
        let mut m = HumanModel::new(params(5.0, 2.0));
        for p in [
            "Red-Solid-One-Oval→1",
            "Blue-Empty-Three-Diamond→2",
            "Green-Striped-Two-Squiggle→1",
        ] {
            m = m.update_on_placement(placement(p)).unwrap();
        }
        let TeacherPrediction::Place(dist) = m.predict_teacher_action(s, true, 0.99) else {
            panic!("expected placements");
        };
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for p in enumerate_placements() {
            if !is_consistent(p, s) {
                assert_eq!(dist[p.index()], 0.0);
            }
        }
    }

    #[test]
    fn greedy_unbiased_teacher_matches_exhaustive_progress() {
        let s = rule("Color:Red|Blue");
        let mut m = HumanModel::new(CbhParams::unbiased(f64::INFINITY));
        let mut tom0 = BeliefVector::uniform();
        for p in ["Green-Solid-One-Oval→2", "Red-Empty-Three-Diamond→1"] {
            m = m.update_on_placement(placement(p)).unwrap();
            tom0 = tom0.literal_update(placement(p)).unwrap();
        }
        // Oracle: argmax of the learner's actual post-update mass on s.
        let progress: Vec<(Placement, f64)> = enumerate_placements()
            .into_iter()
            .filter(|&p| is_consistent(p, s))
            .map(|p| (p, tom0.literal_update(p).unwrap().prob(s)))
            .collect();
        let best = progress.iter().map(|x| x.1).fold(0.0, f64::max);
        let mut oracle: Vec<Placement> = progress
            .iter()
            .filter(|x| x.1 >= best - 1e-12)
            .map(|x| x.0)
            .collect();
        oracle.sort();
        let mut got = m.predict_teacher_action(s, true, 0.99).argmax_placements();
        got.sort();
        assert_eq!(got, oracle);
    }

    #[test]
    fn strong_local_thinking_prefers_designated_values() {
        let s = rule("Color:Red|Blue");
        let m = HumanModel::new(CbhParams::new(5.0, 0.0, f64::INFINITY).unwrap());
        let best = m.predict_teacher_action(s, true, 0.99).argmax_placements();
        assert!(!best.is_empty());
        for p in best {
            let v = p.card.value(FeatureClass::Color);
            assert!(v == FeatureValue::Red || v == FeatureValue::Blue, "{p}");
        }
    }

    #[test]
    fn grid_validation() {
        assert_eq!(ModelGrid::default().len(), 4);
        assert!(ModelGrid::new(vec![params(5.0, 0.0)]).is_err());
        assert!(ModelGrid::new(vec![params(0.0, 0.0), params(0.0, 0.0)]).is_err());
        assert!(ModelGrid::new(vec![]).is_err());
        let json = serde_json::to_string(&ModelGrid::default()).unwrap();
        assert_eq!(
            serde_json::from_str::<ModelGrid>(&json).unwrap(),
            ModelGrid::default()
        );
    }

    #[test]
    fn params_parse_and_serialize() {
        let p: CbhParams = "beta=5,gamma=2".parse().unwrap();
        assert_eq!(p, params(5.0, 2.0));
        let g: CbhParams = "beta=0,gamma=0,lambda=inf".parse().unwrap();
        assert!(g.lambda.is_infinite());
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"beta":0.0,"gamma":0.0,"lambda":"inf"}"#);
        assert_eq!(serde_json::from_str::<CbhParams>(&json).unwrap(), g);
        assert!("beta=-1".parse::<CbhParams>().is_err());
        assert!("delta=1".parse::<CbhParams>().is_err());
    }
}
