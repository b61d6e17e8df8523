//! The card-sorting domain: feature classes and values, cards, rules,
//! placements, rule consistency, and multi-hot feature embeddings.
//!
//! Every enumeration uses one canonical order (classes, then values
//! alphabetically within their class). Rule, card and placement indices
//! are positions in that order and are used to index belief vectors and
//! lookup tables throughout the crate.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of feature classes on a card.
pub const CLASS_COUNT: usize = 4;
/// Number of values within each class.
pub const VALUES_PER_CLASS: usize = 3;
/// Total number of distinct feature values.
pub const VALUE_COUNT: usize = CLASS_COUNT * VALUES_PER_CLASS;
/// `VALUES_PER_CLASS ^ CLASS_COUNT`.
pub const CARD_COUNT: usize = VALUES_PER_CLASS.pow(CLASS_COUNT as u32);
/// Ordered (bin 1, bin 2) value pairs per class, times classes.
pub const RULE_COUNT: usize = CLASS_COUNT * VALUES_PER_CLASS * (VALUES_PER_CLASS - 1);
pub const BIN_COUNT: usize = 2;
pub const PLACEMENT_COUNT: usize = CARD_COUNT * BIN_COUNT;
/// Class expressions plus one bin expression per value per bin.
pub const EXPRESSION_COUNT: usize = CLASS_COUNT + BIN_COUNT * VALUE_COUNT;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown feature class `{0}`")]
    UnknownClass(String),
    #[error("unknown feature value `{0}`")]
    UnknownValue(String),
    #[error("malformed card `{0}` (expected e.g. Red-Striped-Two-Oval)")]
    MalformedCard(String),
    #[error("malformed rule `{0}` (expected e.g. Color:Red|Blue)")]
    MalformedRule(String),
    #[error("malformed placement `{0}` (expected e.g. Red-Striped-Two-Oval→1)")]
    MalformedPlacement(String),
    #[error("malformed feature expression `{0}`")]
    MalformedExpression(String),
    #[error("value {value} does not belong to class {class}")]
    WrongClass {
        class: FeatureClass,
        value: FeatureValue,
    },
    #[error("rule bins must hold different values, got {0} twice")]
    SameBinValues(FeatureValue),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureClass {
    Color,
    Fill,
    Number,
    Shape,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; CLASS_COUNT] = [
        FeatureClass::Color,
        FeatureClass::Fill,
        FeatureClass::Number,
        FeatureClass::Shape,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> FeatureClass {
        Self::ALL[i]
    }

    /// The class's values in canonical (alphabetical) order.
    pub fn values(self) -> [FeatureValue; VALUES_PER_CLASS] {
        let base = self.index() * VALUES_PER_CLASS;
        [
            FeatureValue::ALL[base],
            FeatureValue::ALL[base + 1],
            FeatureValue::ALL[base + 2],
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureClass::Color => "Color",
            FeatureClass::Fill => "Fill",
            FeatureClass::Number => "Number",
            FeatureClass::Shape => "Shape",
        }
    }
}

impl fmt::Display for FeatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureClass {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ParseError::UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureValue {
    Blue,
    Green,
    Red,
    Empty,
    Solid,
    Striped,
    One,
    Three,
    Two,
    Diamond,
    Oval,
    Squiggle,
}

impl FeatureValue {
    pub const ALL: [FeatureValue; VALUE_COUNT] = [
        FeatureValue::Blue,
        FeatureValue::Green,
        FeatureValue::Red,
        FeatureValue::Empty,
        FeatureValue::Solid,
        FeatureValue::Striped,
        FeatureValue::One,
        FeatureValue::Three,
        FeatureValue::Two,
        FeatureValue::Diamond,
        FeatureValue::Oval,
        FeatureValue::Squiggle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> FeatureValue {
        Self::ALL[i]
    }

    pub fn class(self) -> FeatureClass {
        FeatureClass::from_index(self.index() / VALUES_PER_CLASS)
    }

    /// Position of the value within its class (0..3).
    pub fn rank(self) -> usize {
        self.index() % VALUES_PER_CLASS
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureValue::Blue => "Blue",
            FeatureValue::Green => "Green",
            FeatureValue::Red => "Red",
            FeatureValue::Empty => "Empty",
            FeatureValue::Solid => "Solid",
            FeatureValue::Striped => "Striped",
            FeatureValue::One => "One",
            FeatureValue::Three => "Three",
            FeatureValue::Two => "Two",
            FeatureValue::Diamond => "Diamond",
            FeatureValue::Oval => "Oval",
            FeatureValue::Squiggle => "Squiggle",
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureValue {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureValue::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ParseError::UnknownValue(s.to_string()))
    }
}

/// A card carries exactly one value per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card {
    ranks: [u8; CLASS_COUNT],
}

impl Card {
    /// Builds a card from one value per class, in any order.
    pub fn new(values: [FeatureValue; CLASS_COUNT]) -> Result<Card, ParseError> {
        let mut ranks = [u8::MAX; CLASS_COUNT];
        for v in values {
            let slot = &mut ranks[v.class().index()];
            if *slot != u8::MAX {
                return Err(ParseError::MalformedCard(format!(
                    "duplicate class {}",
                    v.class()
                )));
            }
            *slot = v.rank() as u8;
        }
        Ok(Card { ranks })
    }

    pub fn from_index(index: usize) -> Card {
        assert!(index < CARD_COUNT, "card index {index} out of range");
        let mut ranks = [0u8; CLASS_COUNT];
        let mut rest = index;
        for slot in ranks.iter_mut().rev() {
            *slot = (rest % VALUES_PER_CLASS) as u8;
            rest /= VALUES_PER_CLASS;
        }
        Card { ranks }
    }

    pub fn index(self) -> usize {
        self.ranks
            .iter()
            .fold(0, |acc, &r| acc * VALUES_PER_CLASS + r as usize)
    }

    pub fn value(self, class: FeatureClass) -> FeatureValue {
        class.values()[self.ranks[class.index()] as usize]
    }

    pub fn values(self) -> [FeatureValue; CLASS_COUNT] {
        FeatureClass::ALL.map(|c| self.value(c))
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.values();
        write!(f, "{a}-{b}-{c}-{d}")
    }
}

impl FromStr for Card {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() != CLASS_COUNT {
            return Err(ParseError::MalformedCard(s.to_string()));
        }
        let mut values = [FeatureValue::Blue; CLASS_COUNT];
        for (slot, part) in values.iter_mut().zip(&parts) {
            *slot = part.parse()?;
        }
        Card::new(values).map_err(|_| ParseError::MalformedCard(s.to_string()))
    }
}

/// A sorting rule: one class, with distinct values designated for each bin.
/// The class's remaining value is ambiguous and may go in either bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    class: FeatureClass,
    bin1: FeatureValue,
    bin2: FeatureValue,
}

impl Rule {
    pub fn new(
        class: FeatureClass,
        bin1: FeatureValue,
        bin2: FeatureValue,
    ) -> Result<Rule, ParseError> {
        for v in [bin1, bin2] {
            if v.class() != class {
                return Err(ParseError::WrongClass { class, value: v });
            }
        }
        if bin1 == bin2 {
            return Err(ParseError::SameBinValues(bin1));
        }
        Ok(Rule { class, bin1, bin2 })
    }

    pub fn from_index(index: usize) -> Rule {
        all_rules()[index]
    }

    pub fn index(self) -> usize {
        let pairs = VALUES_PER_CLASS * (VALUES_PER_CLASS - 1);
        let (a, b) = (self.bin1.rank(), self.bin2.rank());
        let second = if b > a { b - 1 } else { b };
        self.class.index() * pairs + a * (VALUES_PER_CLASS - 1) + second
    }

    pub fn class(self) -> FeatureClass {
        self.class
    }

    pub fn bin1_value(self) -> FeatureValue {
        self.bin1
    }

    pub fn bin2_value(self) -> FeatureValue {
        self.bin2
    }

    pub fn designated(self, bin: Bin) -> FeatureValue {
        match bin {
            Bin::Bin1 => self.bin1,
            Bin::Bin2 => self.bin2,
        }
    }

    /// The class value allowed in both bins.
    pub fn ambiguous_value(self) -> FeatureValue {
        self.class
            .values()
            .into_iter()
            .find(|&v| v != self.bin1 && v != self.bin2)
            .expect("three values per class")
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}|{}", self.class, self.bin1, self.bin2)
    }
}

impl FromStr for Rule {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::MalformedRule(s.to_string());
        let (class, values) = s.trim().split_once(':').ok_or_else(bad)?;
        let (v1, v2) = values.split_once('|').ok_or_else(bad)?;
        Rule::new(class.parse()?, v1.parse()?, v2.parse()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bin {
    Bin1,
    Bin2,
}

impl Bin {
    pub const ALL: [Bin; BIN_COUNT] = [Bin::Bin1, Bin::Bin2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Bin {
        match self {
            Bin::Bin1 => Bin::Bin2,
            Bin::Bin2 => Bin::Bin1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

/// A teacher action: a card sorted into a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub card: Card,
    pub bin: Bin,
}

impl Placement {
    pub fn new(card: Card, bin: Bin) -> Placement {
        Placement { card, bin }
    }

    pub fn from_index(index: usize) -> Placement {
        Placement {
            card: Card::from_index(index / BIN_COUNT),
            bin: Bin::ALL[index % BIN_COUNT],
        }
    }

    pub fn index(self) -> usize {
        self.card.index() * BIN_COUNT + self.bin.index()
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}→{}", self.card, self.bin.number())
    }
}

impl FromStr for Placement {
    type Err = ParseError;

    /// Accepts the canonical `→` separator and the ASCII `->` spelling.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::MalformedPlacement(s.to_string());
        let (card, bin) = s
            .trim()
            .split_once('→')
            .or_else(|| s.trim().split_once("->"))
            .ok_or_else(bad)?;
        let bin = match bin.trim() {
            "1" => Bin::Bin1,
            "2" => Bin::Bin2,
            _ => return Err(bad()),
        };
        Ok(Placement {
            card: card.parse()?,
            bin,
        })
    }
}

/// The rule component a feature expression talks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Class,
    Bin1,
    Bin2,
}

/// A single-component claim about a rule, e.g. "Bin 1 is Red".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureExpression {
    Class(FeatureClass),
    Bin1(FeatureValue),
    Bin2(FeatureValue),
}

impl FeatureExpression {
    pub fn slot(self) -> Slot {
        match self {
            FeatureExpression::Class(_) => Slot::Class,
            FeatureExpression::Bin1(_) => Slot::Bin1,
            FeatureExpression::Bin2(_) => Slot::Bin2,
        }
    }

    pub fn index(self) -> usize {
        match self {
            FeatureExpression::Class(c) => c.index(),
            FeatureExpression::Bin1(v) => CLASS_COUNT + v.index(),
            FeatureExpression::Bin2(v) => CLASS_COUNT + VALUE_COUNT + v.index(),
        }
    }

    pub fn from_index(i: usize) -> FeatureExpression {
        all_expressions()[i]
    }

    /// Whether the expression is one of the rule's features. Bin
    /// expressions also hold for the class's ambiguous value.
    pub fn holds(self, rule: Rule) -> bool {
        match self {
            FeatureExpression::Class(c) => rule.class == c,
            FeatureExpression::Bin1(v) => {
                v == rule.bin1 || (v.class() == rule.class && v == rule.ambiguous_value())
            }
            FeatureExpression::Bin2(v) => {
                v == rule.bin2 || (v.class() == rule.class && v == rule.ambiguous_value())
            }
        }
    }

    /// Whether the expression names one of the rule's three components
    /// exactly: its class or a bin's designated value.
    pub fn designates(self, rule: Rule) -> bool {
        match self {
            FeatureExpression::Class(c) => rule.class == c,
            FeatureExpression::Bin1(v) => v == rule.bin1,
            FeatureExpression::Bin2(v) => v == rule.bin2,
        }
    }

    /// Whether `other` answers the same question: another class, or another
    /// value of the same class for the same bin.
    pub fn is_rival(self, other: FeatureExpression) -> bool {
        match (self, other) {
            (FeatureExpression::Class(a), FeatureExpression::Class(b)) => a != b,
            (FeatureExpression::Bin1(a), FeatureExpression::Bin1(b))
            | (FeatureExpression::Bin2(a), FeatureExpression::Bin2(b)) => {
                a != b && a.class() == b.class()
            }
            _ => false,
        }
    }

    /// The bare value name: a class name for class expressions.
    pub fn value_name(self) -> &'static str {
        match self {
            FeatureExpression::Class(c) => c.name(),
            FeatureExpression::Bin1(v) | FeatureExpression::Bin2(v) => v.name(),
        }
    }

    /// Phrase used inside learner statements.
    pub fn phrase(self) -> String {
        match self {
            FeatureExpression::Class(c) => format!("the Class is {c}"),
            FeatureExpression::Bin1(v) => format!("Bin 1 is {v}"),
            FeatureExpression::Bin2(v) => format!("Bin 2 is {v}"),
        }
    }

    /// Inverse of [`FeatureExpression::phrase`].
    pub fn parse_phrase(s: &str) -> Result<FeatureExpression, ParseError> {
        let bad = || ParseError::MalformedExpression(s.to_string());
        if let Some(c) = s.strip_prefix("the Class is ") {
            return Ok(FeatureExpression::Class(c.parse().map_err(|_| bad())?));
        }
        if let Some(v) = s.strip_prefix("Bin 1 is ") {
            return Ok(FeatureExpression::Bin1(v.parse().map_err(|_| bad())?));
        }
        if let Some(v) = s.strip_prefix("Bin 2 is ") {
            return Ok(FeatureExpression::Bin2(v.parse().map_err(|_| bad())?));
        }
        Err(bad())
    }
}

impl fmt::Display for FeatureExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureExpression::Class(c) => write!(f, "Class={c}"),
            FeatureExpression::Bin1(v) => write!(f, "Bin1={v}"),
            FeatureExpression::Bin2(v) => write!(f, "Bin2={v}"),
        }
    }
}

impl FromStr for FeatureExpression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::MalformedExpression(s.to_string());
        let (slot, value) = s.trim().split_once('=').ok_or_else(bad)?;
        match slot {
            "Class" => Ok(FeatureExpression::Class(value.parse()?)),
            "Bin1" => Ok(FeatureExpression::Bin1(value.parse()?)),
            "Bin2" => Ok(FeatureExpression::Bin2(value.parse()?)),
            _ => Err(bad()),
        }
    }
}

/// A 12-dimensional multi-hot indicator over feature values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureEmbedding(pub [u8; VALUE_COUNT]);

impl FeatureEmbedding {
    fn from_values(values: impl IntoIterator<Item = FeatureValue>) -> FeatureEmbedding {
        let mut v = [0u8; VALUE_COUNT];
        for value in values {
            v[value.index()] = 1;
        }
        FeatureEmbedding(v)
    }

    pub fn ones(&self) -> usize {
        self.0.iter().map(|&x| x as usize).sum()
    }

    pub fn cosine(&self, other: &FeatureEmbedding) -> f64 {
        let dot: f64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a * b) as f64)
            .sum();
        let norm = (self.ones() as f64).sqrt() * (other.ones() as f64).sqrt();
        if norm == 0.0 {
            0.0
        } else {
            dot / norm
        }
    }
}

pub trait Embed {
    fn embed(&self) -> FeatureEmbedding;
}

impl Embed for Card {
    fn embed(&self) -> FeatureEmbedding {
        FeatureEmbedding::from_values(self.values())
    }
}

impl Embed for Rule {
    /// Only the two designated values; the ambiguous value is not embedded.
    fn embed(&self) -> FeatureEmbedding {
        FeatureEmbedding::from_values([self.bin1, self.bin2])
    }
}

/// A bin-`b` placement is consistent unless the card shows the value the
/// rule designates for the other bin.
pub fn is_consistent(p: Placement, r: Rule) -> bool {
    p.card.value(r.class) != r.designated(p.bin.other())
}

pub fn enumerate_rules() -> Vec<Rule> {
    let mut rules = Vec::with_capacity(RULE_COUNT);
    for class in FeatureClass::ALL {
        for bin1 in class.values() {
            for bin2 in class.values() {
                if bin1 != bin2 {
                    rules.push(Rule { class, bin1, bin2 });
                }
            }
        }
    }
    rules
}

pub fn enumerate_cards() -> Vec<Card> {
    (0..CARD_COUNT).map(Card::from_index).collect()
}

pub fn enumerate_placements() -> Vec<Placement> {
    (0..PLACEMENT_COUNT).map(Placement::from_index).collect()
}

pub fn enumerate_expressions() -> Vec<FeatureExpression> {
    let mut out = Vec::with_capacity(EXPRESSION_COUNT);
    out.extend(FeatureClass::ALL.map(FeatureExpression::Class));
    out.extend(FeatureValue::ALL.map(FeatureExpression::Bin1));
    out.extend(FeatureValue::ALL.map(FeatureExpression::Bin2));
    out
}

pub fn all_rules() -> &'static [Rule] {
    &tables().rules
}

pub fn all_expressions() -> &'static [FeatureExpression] {
    &tables().expressions
}

/// Precomputed consistency flag for (placement index, rule index).
pub fn consistent_by_index(placement: usize, rule: usize) -> bool {
    tables().consistent[placement][rule]
}

/// Precomputed cosine between a rule and a card embedding.
pub fn cosine_by_index(card: usize, rule: usize) -> f64 {
    tables().cosine[card][rule]
}

/// Precomputed `expression_holds` flag for (expression index, rule index).
pub fn holds_by_index(expression: usize, rule: usize) -> bool {
    tables().holds[expression][rule]
}

struct Tables {
    rules: Vec<Rule>,
    expressions: Vec<FeatureExpression>,
    consistent: Vec<[bool; RULE_COUNT]>,
    cosine: Vec<[f64; RULE_COUNT]>,
    holds: Vec<[bool; RULE_COUNT]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let rules = enumerate_rules();
        let expressions = enumerate_expressions();
        let consistent = enumerate_placements()
            .into_iter()
            .map(|p| std::array::from_fn(|r| is_consistent(p, rules[r])))
            .collect();
        let cosine = enumerate_cards()
            .into_iter()
            .map(|c| {
                let e = c.embed();
                std::array::from_fn(|r| rules[r].embed().cosine(&e))
            })
            .collect();
        let holds = expressions
            .iter()
            .map(|e| std::array::from_fn(|r| e.holds(rules[r])))
            .collect();
        Tables {
            rules,
            expressions,
            consistent,
            cosine,
            holds,
        }
    })
}

macro_rules! serde_via_str {
    ($($ty:ty),*) => {$(
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

serde_via_str!(
    FeatureClass,
    FeatureValue,
    Card,
    Rule,
    Placement,
    FeatureExpression
);
