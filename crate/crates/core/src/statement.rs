//! Learner statements and their byte-exact English rendering.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{FeatureExpression, ParseError};

/// Confidence expression, ordered from least to most confident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Unsure,
    IThink,
    IKnow,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Unsure, Tier::IThink, Tier::IKnow];

    pub fn phrase(self) -> &'static str {
        match self {
            Tier::Unsure => "I'm unsure if",
            Tier::IThink => "I think",
            Tier::IKnow => "I know",
        }
    }
}

/// Probability cut points between confidence tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierThresholds {
    /// At or above: "I know".
    pub know: f64,
    /// Strictly above (and below `know`): "I think".
    pub think: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        TierThresholds {
            know: 0.95,
            think: 0.5,
        }
    }
}

impl TierThresholds {
    pub fn tier(&self, p: f64) -> Tier {
        if p >= self.know {
            Tier::IKnow
        } else if p > self.think {
            Tier::IThink
        } else {
            Tier::Unsure
        }
    }

    /// Closed probability interval a listener associates with the tier.
    /// Every `p` lies inside the band of `tier(p)`.
    pub fn band(&self, tier: Tier) -> (f64, f64) {
        match tier {
            Tier::Unsure => (0.0, self.think),
            Tier::IThink => (self.think, self.know),
            Tier::IKnow => (self.know, 1.0),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.think && self.think < self.know && self.know <= 1.0) {
            return Err(format!(
                "tier thresholds must satisfy 0 < think < know <= 1, got think={} know={}",
                self.think, self.know
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatementKind {
    #[serde(rename = "CS")]
    Cs,
    #[serde(rename = "USCS")]
    UsCs,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatementError {
    #[error("understanding clause and confidence clause address different slots")]
    SlotMismatch,
    #[error("understanding clause repeats the alternative it names")]
    SameExpression,
    #[error("rendered text `{found}` does not match the statement (`{expected}`)")]
    RenderMismatch { expected: String, found: String },
    #[error("cannot parse statement `{0}`")]
    Unparseable(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A piece of learner feedback.
///
/// A confidence statement pairs a tier with a feature expression. An
/// understanding statement names the expression the teacher seems to be
/// teaching and, in its confidence clause, a same-slot alternative the
/// learner still entertains; that clause always carries [`Tier::Unsure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StatementRecord", into = "StatementRecord")]
pub struct Statement {
    kind: StatementKind,
    cs_expression: FeatureExpression,
    cs_tier: Tier,
    us_expression: Option<FeatureExpression>,
}

impl Statement {
    pub fn confidence(tier: Tier, expression: FeatureExpression) -> Statement {
        Statement {
            kind: StatementKind::Cs,
            cs_expression: expression,
            cs_tier: tier,
            us_expression: None,
        }
    }

    pub fn understanding(
        us: FeatureExpression,
        alternative: FeatureExpression,
    ) -> Result<Statement, StatementError> {
        if us.slot() != alternative.slot() {
            return Err(StatementError::SlotMismatch);
        }
        if us == alternative {
            return Err(StatementError::SameExpression);
        }
        Ok(Statement {
            kind: StatementKind::UsCs,
            cs_expression: alternative,
            cs_tier: Tier::Unsure,
            us_expression: Some(us),
        })
    }

    pub fn kind(&self) -> StatementKind {
        self.kind
    }

    pub fn is_understanding(&self) -> bool {
        self.kind == StatementKind::UsCs
    }

    pub fn cs_expression(&self) -> FeatureExpression {
        self.cs_expression
    }

    pub fn cs_tier(&self) -> Tier {
        self.cs_tier
    }

    pub fn us_expression(&self) -> Option<FeatureExpression> {
        self.us_expression
    }

    pub fn render(&self) -> String {
        match self.us_expression {
            None => format!("{} {}.", self.cs_tier.phrase(), self.cs_expression.phrase()),
            Some(us) => format!(
                "It seems like you want me to know {}, but it still could be {}.",
                us.phrase(),
                self.cs_expression.value_name()
            ),
        }
    }

    /// Inverse of [`Statement::render`].
    pub fn parse_rendered(s: &str) -> Result<Statement, StatementError> {
        let bad = || StatementError::Unparseable(s.to_string());
        let body = s.strip_suffix('.').ok_or_else(bad)?;
        if let Some(rest) = body.strip_prefix("It seems like you want me to know ") {
            let (us, alt) = rest
                .split_once(", but it still could be ")
                .ok_or_else(bad)?;
            let us = FeatureExpression::parse_phrase(us)?;
            let alt = match us {
                FeatureExpression::Class(_) => FeatureExpression::Class(alt.parse()?),
                FeatureExpression::Bin1(_) => FeatureExpression::Bin1(alt.parse()?),
                FeatureExpression::Bin2(_) => FeatureExpression::Bin2(alt.parse()?),
            };
            return Statement::understanding(us, alt);
        }
        for tier in Tier::ALL {
            if let Some(rest) = body
                .strip_prefix(tier.phrase())
                .and_then(|r| r.strip_prefix(' '))
            {
                return Ok(Statement::confidence(
                    tier,
                    FeatureExpression::parse_phrase(rest)?,
                ));
            }
        }
        Err(bad())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Log and wire form of a statement: the structured fields plus the
/// rendered text, which must agree on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub kind: StatementKind,
    pub cs_expression: FeatureExpression,
    pub cs_tier: Tier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub us_expression: Option<FeatureExpression>,
    pub rendered: String,
}

impl From<Statement> for StatementRecord {
    fn from(st: Statement) -> Self {
        StatementRecord {
            kind: st.kind,
            cs_expression: st.cs_expression,
            cs_tier: st.cs_tier,
            us_expression: st.us_expression,
            rendered: st.render(),
        }
    }
}

impl TryFrom<StatementRecord> for Statement {
    type Error = StatementError;

    fn try_from(rec: StatementRecord) -> Result<Self, Self::Error> {
        let st = match (rec.kind, rec.us_expression) {
            (StatementKind::Cs, None) => Statement::confidence(rec.cs_tier, rec.cs_expression),
            (StatementKind::UsCs, Some(us)) if rec.cs_tier == Tier::Unsure => {
                Statement::understanding(us, rec.cs_expression)?
            }
            _ => return Err(StatementError::Unparseable(rec.rendered)),
        };
        let expected = st.render();
        if expected != rec.rendered {
            return Err(StatementError::RenderMismatch {
                expected,
                found: rec.rendered,
            });
        }
        Ok(st)
    }
}
