//! Choosing what the learner says after each placement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::binary_entropy;
use crate::domain::{all_expressions, FeatureExpression};
use crate::learner::{ConditionKind, InteractiveBelief, LearnerCondition};
use crate::statement::{Statement, Tier, TierThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trigger {
    /// One confidence statement, the usual response.
    Default,
    /// The learner explains its understanding of what the teacher is after.
    Discrepancy,
    /// Two confidence statements, timed by a shadow second-order learner.
    ShadowTimed,
    /// Two confidence statements, timed by a seeded coin.
    RandomTimed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackDecision {
    pub statements: Vec<Statement>,
    pub trigger: Trigger,
}

impl FeedbackDecision {
    fn single(st: Statement) -> FeedbackDecision {
        FeedbackDecision {
            statements: vec![st],
            trigger: Trigger::Default,
        }
    }

    /// An understanding statement carries two clauses, so it counts as
    /// two-statement feedback alongside a pair of confidence statements.
    pub fn is_two_statement(&self) -> bool {
        self.statements.len() > 1 || self.statements.iter().any(Statement::is_understanding)
    }

    pub fn has_understanding(&self) -> bool {
        self.statements.iter().any(Statement::is_understanding)
    }

    pub fn rendered(&self) -> Vec<String> {
        self.statements.iter().map(Statement::render).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSettings {
    pub tiers: TierThresholds,
    /// Reward an explanation must exceed before the learner offers one.
    pub tau_us: f64,
    /// Probability of a two-statement step for the random-timed condition.
    pub q: f64,
}

impl Default for FeedbackSettings {
    fn default() -> Self {
        FeedbackSettings {
            tiers: TierThresholds::default(),
            tau_us: 0.05,
            q: 0.25,
        }
    }
}

impl FeedbackSettings {
    pub fn validate(&self) -> Result<(), String> {
        self.tiers.validate()?;
        if !(self.tau_us >= 0.0 && self.tau_us.is_finite()) {
            return Err(format!(
                "tau_us must be a non-negative number, got {}",
                self.tau_us
            ));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(format!("q must lie in [0, 1], got {}", self.q));
        }
        Ok(())
    }
}

/// Confidence statements ranked by how much the teacher could resolve:
/// expressions whose marginal is closest to a coin flip come first, ties in
/// canonical order. A learner that already holds a single rule states its
/// bin values instead, Bin 2 first.
pub fn ranked_confidence_statements(
    ib: &InteractiveBelief,
    tiers: &TierThresholds,
    k: usize,
) -> Vec<Statement> {
    let b = ib.tom0();
    if b.support_size() == 1 {
        let r = b.support().next().expect("singleton support");
        return [
            FeatureExpression::Bin2(r.bin2_value()),
            FeatureExpression::Bin1(r.bin1_value()),
        ]
        .into_iter()
        .take(k)
        .map(|e| Statement::confidence(Tier::IKnow, e))
        .collect();
    }
    let mut scored: Vec<(f64, FeatureExpression)> = all_expressions()
        .iter()
        .map(|&e| (binary_entropy(b.expression_marginal(e)), e))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.index().cmp(&b.1.index())));
    scored
        .into_iter()
        .take(k)
        .map(|(_, e)| Statement::confidence(tiers.tier(b.expression_marginal(e)), e))
        .collect()
}

pub fn select_cs(ib: &InteractiveBelief, tiers: &TierThresholds) -> Statement {
    ranked_confidence_statements(ib, tiers, 1)[0]
}

/// Marginals closer than this count as tied.
const ALTERNATIVE_TIE: f64 = 1e-12;

/// Alternative for an understanding statement: the rival answer to the
/// same question (another class, or another value of the same class for
/// the same bin) the learner finds most plausible. Ties go to the
/// canonically first expression.
pub fn select_alternative(
    ib: &InteractiveBelief,
    us: FeatureExpression,
) -> Option<FeatureExpression> {
    let mut best: Option<(f64, FeatureExpression)> = None;
    for &e in all_expressions() {
        if !us.is_rival(e) {
            continue;
        }
        let p = ib.tom0().expression_marginal(e);
        if p > 0.0 && best.is_none_or(|(m, _)| p > m + ALTERNATIVE_TIE) {
            best = Some((p, e));
        }
    }
    best.map(|(_, e)| e)
}

/// What the second-order learner would say: an understanding statement if
/// some expression's discrepancy reward crosses the threshold and a
/// plausible alternative remains, else the best confidence statement.
fn tom2_decision(ib: &InteractiveBelief, settings: &FeedbackSettings) -> FeedbackDecision {
    let report = ib.compute_discrepancy(settings.tau_us);
    if report.crosses_threshold {
        if let Some(alt) = select_alternative(ib, report.best) {
            let st =
                Statement::understanding(report.best, alt).expect("alternative shares the slot");
            return FeedbackDecision {
                statements: vec![st],
                trigger: Trigger::Discrepancy,
            };
        }
    }
    FeedbackDecision::single(select_cs(ib, &settings.tiers))
}

/// The coin deciding whether the random-timed learner grants two
/// statements at step `t`; each step draws from its own stream so the
/// outcome does not depend on how many steps came before.
pub fn random_grant(seed: u64, t: u32, q: f64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(t));
    rng.random_bool(q)
}

pub fn decide_feedback(
    ib: &InteractiveBelief,
    cond: &LearnerCondition,
    t: u32,
    settings: &FeedbackSettings,
) -> FeedbackDecision {
    match cond.kind {
        ConditionKind::Tom2 => tom2_decision(ib, settings),
        ConditionKind::Tom0 => {
            let shadow = tom2_decision(ib, settings);
            if shadow.has_understanding() {
                FeedbackDecision {
                    statements: ranked_confidence_statements(ib, &settings.tiers, 2),
                    trigger: Trigger::ShadowTimed,
                }
            } else {
                FeedbackDecision::single(select_cs(ib, &settings.tiers))
            }
        }
        ConditionKind::Tom0Random => {
            if random_grant(cond.rng_seed, t, settings.q) {
                FeedbackDecision {
                    statements: ranked_confidence_statements(ib, &settings.tiers, 2),
                    trigger: Trigger::RandomTimed,
                }
            } else {
                FeedbackDecision::single(select_cs(ib, &settings.tiers))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureClass, FeatureValue, Placement, Rule};
    use crate::human::ModelGrid;
    use crate::learner::LearnerSettings;

    fn rule(s: &str) -> Rule {
        s.parse().unwrap()
    }

    fn cond(kind: ConditionKind) -> LearnerCondition {
        LearnerCondition { kind, rng_seed: 11 }
    }

    /// Drives the learner to hold exactly the given rules, using literal
    /// updates only, by finding placements that separate them from the rest.
    fn belief_over(rules: &[Rule]) -> InteractiveBelief {
        let mut ib = InteractiveBelief::new(ModelGrid::unbiased_only());
        let placements = crate::domain::enumerate_placements();
        while ib.tom0().support_size() > rules.len() {
            let p = placements
                .iter()
                .copied()
                .filter(|&p| rules.iter().all(|&r| crate::domain::is_consistent(p, r)))
                .min_by_key(|&p| {
                    ib.tom0()
                        .literal_update(p)
                        .map(|b| b.support_size())
                        .unwrap_or(usize::MAX)
                })
                .unwrap();
            let next = ib
                .update_on_placement(p, true, &LearnerSettings::default())
                .unwrap()
                .belief;
            assert!(
                next.tom0().support_size() < ib.tom0().support_size(),
                "no separating placement"
            );
            ib = next;
        }
        ib
    }

    #[test]
    fn uniform_belief_is_unsure_about_color() {
        let ib = InteractiveBelief::new(ModelGrid::default());
        let st = select_cs(&ib, &TierThresholds::default());
        assert_eq!(st.render(), "I'm unsure if the Class is Color.");
    }

    #[test]
    fn singleton_belief_states_bin_two() {
        let ib = belief_over(&[rule("Shape:Diamond|Oval")]);
        assert_eq!(
            select_cs(&ib, &TierThresholds::default()).render(),
            "I know Bin 2 is Oval."
        );
        let two = ranked_confidence_statements(&ib, &TierThresholds::default(), 2);
        assert_eq!(two[1].render(), "I know Bin 1 is Diamond.");
    }

    #[test]
    fn two_rules_differing_in_bin_one() {
        // Bin 1 admits the ambiguous value too, so both rules accept Diamond
        // and Squiggle in Bin 1; what separates them is whether Diamond may
        // go to Bin 2.
        let ib = belief_over(&[rule("Shape:Diamond|Oval"), rule("Shape:Squiggle|Oval")]);
        let st = select_cs(&ib, &TierThresholds::default());
        assert_eq!(st.cs_tier(), Tier::Unsure);
        assert_eq!(
            st.cs_expression(),
            FeatureExpression::Bin2(FeatureValue::Diamond)
        );
        assert!((ib.tom0().expression_marginal(st.cs_expression()) - 0.5).abs() < 1e-12);
        for v in [FeatureValue::Diamond, FeatureValue::Squiggle] {
            assert_eq!(
                ib.tom0().expression_marginal(FeatureExpression::Bin1(v)),
                1.0
            );
        }
    }

    #[test]
    fn entropy_oracle_agrees_with_selection() {
        let ib = belief_over(&[
            rule("Color:Red|Blue"),
            rule("Fill:Solid|Empty"),
            rule("Color:Green|Blue"),
        ]);
        let st = select_cs(&ib, &TierThresholds::default());
        let best = all_expressions()
            .iter()
            .map(|&e| binary_entropy(ib.tom0().expression_marginal(e)))
            .fold(f64::MIN, f64::max);
        assert!(
            (binary_entropy(ib.tom0().expression_marginal(st.cs_expression())) - best).abs()
                < 1e-12
        );
    }

    #[test]
    fn unbiased_grid_never_explains_itself() {
        let mut ib = InteractiveBelief::new(ModelGrid::unbiased_only());
        let settings = FeedbackSettings::default();
        for (t, p) in [
            "Red-Solid-One-Oval→1",
            "Blue-Empty-Two-Diamond→2",
            "Green-Striped-One-Oval→1",
        ]
        .iter()
        .enumerate()
        {
            let p: Placement = p.parse().unwrap();
            ib = ib
                .update_on_placement(p, true, &LearnerSettings::default())
                .unwrap()
                .belief;
            let d = decide_feedback(&ib, &cond(ConditionKind::Tom2), t as u32 + 1, &settings);
            assert_eq!(d.trigger, Trigger::Default);
            assert_eq!(d.statements.len(), 1);
        }
    }

    #[test]
    fn random_grant_is_seeded_and_roughly_q() {
        let hits = (1..=4000).filter(|&t| random_grant(5, t, 0.25)).count();
        assert!((800..1200).contains(&hits), "{hits}");
        assert_eq!(random_grant(5, 17, 0.25), random_grant(5, 17, 0.25));
        assert!(!random_grant(5, 3, 0.0));
        assert!(random_grant(5, 3, 1.0));
    }

    #[test]
    fn random_condition_never_explains() {
        let ib = InteractiveBelief::new(ModelGrid::default());
        for t in 1..50 {
            let d = decide_feedback(
                &ib,
                &cond(ConditionKind::Tom0Random),
                t,
                &FeedbackSettings::default(),
            );
            assert!(!d.has_understanding());
            assert_eq!(d.statements.len() == 2, d.trigger == Trigger::RandomTimed);
        }
    }

    #[test]
    fn alternative_class_is_the_likeliest_other_class() {
        let ib = belief_over(&[rule("Shape:Diamond|Oval"), rule("Fill:Solid|Empty")]);
        let alt = select_alternative(&ib, FeatureExpression::Class(FeatureClass::Shape)).unwrap();
        assert_eq!(alt, FeatureExpression::Class(FeatureClass::Fill));
        let st =
            Statement::understanding(FeatureExpression::Class(FeatureClass::Shape), alt).unwrap();
        assert_eq!(
            st.render(),
            "It seems like you want me to know the Class is Shape, but it still could be Fill."
        );
        let only = belief_over(&[rule("Shape:Diamond|Oval")]);
        assert_eq!(
            select_alternative(&only, FeatureExpression::Class(FeatureClass::Shape)),
            None
        );
    }

    #[test]
    fn alternative_value_stays_in_the_class() {
        // Squiggle may go in Bin 1 under both rules; Oval under neither.
        let ib = belief_over(&[rule("Shape:Diamond|Oval"), rule("Shape:Squiggle|Oval")]);
        let us = FeatureExpression::Bin1(FeatureValue::Diamond);
        let alt = select_alternative(&ib, us).unwrap();
        assert_eq!(alt, FeatureExpression::Bin1(FeatureValue::Squiggle));
        let st = Statement::understanding(us, alt).unwrap();
        assert_eq!(
            st.render(),
            "It seems like you want me to know Bin 1 is Diamond, but it still could be Squiggle."
        );
    }

    #[test]
    fn alternative_matches_enumeration() {
        for r in [
            "Color:Red|Blue",
            "Shape:Diamond|Oval",
            "Number:Three|Two",
            "Fill:Empty|Striped",
        ] {
            let mut ib = InteractiveBelief::new(ModelGrid::unbiased_only());
            for _ in 0..4 {
                let p = crate::session::greedy_placement(ib.tom0(), rule(r));
                ib = ib
                    .update_on_placement(p, true, &LearnerSettings::default())
                    .unwrap()
                    .belief;
                for &us in all_expressions() {
                    let mut expected: Option<(f64, FeatureExpression)> = None;
                    for &e in all_expressions() {
                        let rival = match (us, e) {
                            (FeatureExpression::Class(a), FeatureExpression::Class(b)) => a != b,
                            (FeatureExpression::Bin1(a), FeatureExpression::Bin1(b))
                            | (FeatureExpression::Bin2(a), FeatureExpression::Bin2(b)) => {
                                a != b && a.class() == b.class()
                            }
                            _ => false,
                        };
                        let p: f64 = crate::domain::all_rules()
                            .iter()
                            .filter(|&&x| e.holds(x))
                            .map(|x| ib.tom0().probs()[x.index()])
                            .sum();
                        if rival && p > 0.0 && expected.is_none_or(|(m, _)| p > m + ALTERNATIVE_TIE)
                        {
                            expected = Some((p, e));
                        }
                    }
                    assert_eq!(
                        select_alternative(&ib, us),
                        expected.map(|x| x.1),
                        "{r} {us:?}"
                    );
                }
            }
        }
    }
}
