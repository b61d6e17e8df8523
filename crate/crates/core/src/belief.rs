//! Normalized beliefs over the rule space and the literal (unbiased)
//! Bayesian filter driven by card placements.

use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    consistent_by_index, holds_by_index, FeatureExpression, Placement, Rule, PLACEMENT_COUNT,
    RULE_COUNT,
};

/// Sum-to-one tolerance for every belief vector in the crate.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Likelihood of a consistent placement under the literal teacher model:
/// uniform over the placements the rule allows.
pub const LITERAL_LIKELIHOOD: f64 = 1.0 / 108.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("no rule with positive mass is consistent with placement {0}")]
    ZeroSupport(Placement),
    #[error("belief weights have no positive mass")]
    EmptyWeights,
    #[error("invalid belief vector: {0}")]
    Invalid(String),
}

/// A probability distribution over the rules, in canonical rule order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BeliefVector {
    probs: [f64; RULE_COUNT],
}

impl BeliefVector {
    pub fn uniform() -> BeliefVector {
        BeliefVector {
            probs: [1.0 / RULE_COUNT as f64; RULE_COUNT],
        }
    }

    pub fn singleton(rule: Rule) -> BeliefVector {
        let mut probs = [0.0; RULE_COUNT];
        probs[rule.index()] = 1.0;
        BeliefVector { probs }
    }

    /// Uniform over the given rules.
    pub fn uniform_over(
        rules: impl IntoIterator<Item = Rule>,
    ) -> Result<BeliefVector, BeliefError> {
        let mut w = [0.0; RULE_COUNT];
        for r in rules {
            w[r.index()] = 1.0;
        }
        BeliefVector::from_weights(w)
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: [f64; RULE_COUNT]) -> Result<BeliefVector, BeliefError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BeliefError::Invalid(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(BeliefError::EmptyWeights);
        }
        Ok(BeliefVector {
            probs: weights.map(|w| w / total),
        })
    }

    pub fn probs(&self) -> &[f64; RULE_COUNT] {
        &self.probs
    }

    pub fn prob(&self, rule: Rule) -> f64 {
        self.probs[rule.index()]
    }

    pub fn support(&self) -> impl Iterator<Item = Rule> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| Rule::from_index(i))
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Multiplies every entry by `weight(rule index)` and renormalizes.
    pub fn reweight(&self, weight: impl Fn(usize) -> f64) -> Result<BeliefVector, BeliefError> {
        let mut w = self.probs;
        for (i, x) in w.iter_mut().enumerate() {
            *x *= weight(i);
        }
        BeliefVector::from_weights(w)
    }

    /// Filters out rules inconsistent with the placement. Each surviving
    /// rule is weighted by [`LITERAL_LIKELIHOOD`], which cancels on
    /// normalization.
    pub fn literal_update(&self, p: Placement) -> Result<BeliefVector, BeliefError> {
        let pi = p.index();
        self.reweight(|r| {
            if consistent_by_index(pi, r) {
                LITERAL_LIKELIHOOD
            } else {
                0.0
            }
        })
        .map_err(|_| BeliefError::ZeroSupport(p))
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }

    pub fn information_gain(&self, p: Placement) -> Result<f64, BeliefError> {
        Ok(self.entropy() - self.literal_update(p)?.entropy())
    }

    /// Largest information gain over every placement that leaves some mass.
    pub fn max_information_gain(&self) -> f64 {
        (0..PLACEMENT_COUNT)
            .filter_map(|i| self.information_gain(Placement::from_index(i)).ok())
            .fold(0.0, f64::max)
    }

    /// Probability mass on rules for which the expression holds.
    pub fn expression_marginal(&self, e: FeatureExpression) -> f64 {
        let ei = e.index();
        self.probs
            .iter()
            .enumerate()
            .filter(|(r, _)| holds_by_index(ei, *r))
            .map(|(_, &p)| p)
            .sum()
    }

    /// Mass on the rule is within tolerance of one.
    pub fn is_singleton_on(&self, rule: Rule) -> bool {
        self.prob(rule) >= 1.0 - NORMALIZATION_TOLERANCE
    }

    pub fn max_abs_diff(&self, other: &BeliefVector) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<Rule> for BeliefVector {
    type Output = f64;

    fn index(&self, rule: Rule) -> &f64 {
        &self.probs[rule.index()]
    }
}

impl TryFrom<Vec<f64>> for BeliefVector {
    type Error = BeliefError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        let probs: [f64; RULE_COUNT] = v.try_into().map_err(|v: Vec<f64>| {
            BeliefError::Invalid(format!("expected {RULE_COUNT} entries, got {}", v.len()))
        })?;
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BeliefError::Invalid(
                "entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(BeliefError::Invalid(format!("entries sum to {total}")));
        }
        Ok(BeliefVector { probs })
    }
}

impl From<BeliefVector> for Vec<f64> {
    fn from(b: BeliefVector) -> Vec<f64> {
        b.probs.to_vec()
    }
}

/// Binary entropy in bits; zero at the endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}
