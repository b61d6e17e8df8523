//! Experiment spec files.
//!
//! ```toml
//! name = "default"              # output directory under the log root
//! conditions = ["tom0", "tom0random", "tom2"]
//! rules = "all"                 # or a list such as ["Shape:Diamond|Oval"]
//! seeds = 10                    # sessions per rule and condition
//! seed_base = 0                 # first session seed
//! teacher = "beta=5,gamma=2"    # simulated teacher; lambda defaults to 4
//! grid = ["beta=0,gamma=0", "beta=5,gamma=0", "beta=0,gamma=2", "beta=5,gamma=2"]
//! max_steps = 60
//! workers = 0                   # 0 uses every core
//!
//! [thresholds]                  # any subset; the rest keep their defaults
//! tau_us = 0.05
//! ```
//!
//! Session `k` of the `i`-th listed rule gets seed
//! `seed_base + k * rules + i`, so every session in an experiment has its
//! own seed (and log file name) while the three conditions of one rule and
//! replicate face the same teacher randomness.

use serde::{Deserialize, Serialize};
use tom2_core::domain::enumerate_rules;
use tom2_core::session::DEFAULT_MAX_STEPS;
use tom2_core::{CbhParams, ConditionKind, ModelGrid, Rule, SessionConfig, Thresholds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleSelection {
    /// Only `"all"` is meaningful here.
    Keyword(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default = "all_conditions")]
    pub conditions: Vec<ConditionKind>,
    #[serde(default = "all_rules")]
    pub rules: RuleSelection,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_teacher")]
    pub teacher: String,
    #[serde(default)]
    pub grid: Option<Vec<String>>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn all_conditions() -> Vec<ConditionKind> {
    ConditionKind::ALL.to_vec()
}

fn all_rules() -> RuleSelection {
    RuleSelection::Keyword("all".into())
}

fn default_seeds() -> u64 {
    10
}

fn default_teacher() -> String {
    "beta=5,gamma=2".into()
}

fn default_max_steps() -> u32 {
    DEFAULT_MAX_STEPS
}

impl Default for ExperimentSpec {
    /// Every rule and condition, ten sessions each, against a teacher with
    /// both biases.
    fn default() -> Self {
        ExperimentSpec {
            name: "default".into(),
            conditions: all_conditions(),
            rules: all_rules(),
            seeds: default_seeds(),
            seed_base: 0,
            teacher: default_teacher(),
            grid: None,
            max_steps: default_max_steps(),
            workers: 0,
            thresholds: Thresholds::default(),
        }
    }
}

/// One session of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub condition: ConditionKind,
    pub rule: Rule,
    pub config: SessionConfig,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<ExperimentSpec, String> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| e.to_string())?;
        spec.jobs()?;
        Ok(spec)
    }

    pub fn rules(&self) -> Result<Vec<Rule>, String> {
        match &self.rules {
            RuleSelection::Keyword(k) if k == "all" => Ok(enumerate_rules()),
            RuleSelection::Keyword(k) => {
                Err(format!("rules must be \"all\" or a list, got \"{k}\""))
            }
            RuleSelection::List(list) if list.is_empty() => Err("rules list is empty".into()),
            RuleSelection::List(list) => list
                .iter()
                .map(|r| r.parse().map_err(|e| format!("{e}")))
                .collect(),
        }
    }

    pub fn teacher(&self) -> Result<CbhParams, String> {
        self.teacher.parse().map_err(|e| format!("teacher: {e}"))
    }

    pub fn grid(&self) -> Result<ModelGrid, String> {
        match &self.grid {
            None => Ok(ModelGrid::default()),
            Some(list) => {
                let models = list
                    .iter()
                    .map(|m| m.parse::<CbhParams>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| format!("grid: {e}"))?;
                ModelGrid::new(models).map_err(|e| format!("grid: {e}"))
            }
        }
    }

    /// Every session, ordered by replicate, rule, then condition. Fails on
    /// any invalid setting.
    pub fn jobs(&self) -> Result<Vec<Job>, String> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name == ".." {
            return Err(format!(
                "name must be a plain directory name, got \"{}\"",
                self.name
            ));
        }
        if self.conditions.is_empty() {
            return Err("conditions is empty".into());
        }
        if self.seeds == 0 {
            return Err("seeds must be positive".into());
        }
        let rules = self.rules()?;
        let teacher = self.teacher()?;
        let grid = self.grid()?;
        let mut jobs = Vec::new();
        for k in 0..self.seeds {
            for (i, &rule) in rules.iter().enumerate() {
                let seed = self.seed_base + k * rules.len() as u64 + i as u64;
                for &condition in &self.conditions {
                    let config = SessionConfig {
                        grid: grid.clone(),
                        thresholds: self.thresholds,
                        max_steps: self.max_steps,
                        ..SessionConfig::simulated(rule, condition, teacher, seed)
                    };
                    config.validate().map_err(|e| e.to_string())?;
                    jobs.push(Job {
                        condition,
                        rule,
                        config,
                    });
                }
            }
        }
        Ok(jobs)
    }
}
