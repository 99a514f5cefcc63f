//! Decision-tree rule generation.
//!
//! [`TreeLearner`] grows a gain-ratio tree over a temporalised dataset and
//! turns every root-to-leaf path into a [`Rule`]. Discrete columns split
//! multiway on the symbols present at the node; numeric columns split in two
//! at a midpoint between consecutive distinct values.
//!
//! The default configuration fits the training data as far as it can and
//! keeps one rule per leaf. [`InduceConfig::pruned`] adds pessimistic subtree
//! pruning and drops rule conditions that do not pay for themselves, which is
//! closer to what a C4.5 rule generator reports.

mod rules;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporalise::TemporalisedDataset;

pub use rules::{
    classify, evaluate, Cell, Condition, EvalResult, FlatRecord, FlatRow, Predicate, Rule, RuleSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InduceConfig {
    /// Minimum number of records on at least two branches of a split.
    pub min_leaf: usize,
    /// Pessimistic (error-based) subtree replacement after growth.
    pub prune: bool,
    /// Greedily drop conditions from each extracted rule while its
    /// pessimistic error rate does not increase, then remove duplicate rules
    /// and rules that do not contribute to training accuracy.
    pub simplify_rules: bool,
    /// Confidence factor for the pessimistic error estimate.
    pub confidence_factor: f64,
}

impl Default for InduceConfig {
    fn default() -> Self {
        InduceConfig {
            min_leaf: 1,
            prune: false,
            simplify_rules: false,
            confidence_factor: 0.25,
        }
    }
}

impl InduceConfig {
    pub fn pruned() -> Self {
        InduceConfig {
            min_leaf: 2,
            prune: true,
            simplify_rules: true,
            confidence_factor: 0.25,
        }
    }
}

/// Anything that turns a training set into a rule set.
pub trait RuleGenerator: Sync {
    fn generate(&self, train: &TemporalisedDataset) -> Result<RuleSet>;
}

#[derive(Debug, Clone, Default)]
pub struct TreeLearner {
    pub config: InduceConfig,
}

impl TreeLearner {
    pub fn new(config: InduceConfig) -> Self {
        TreeLearner { config }
    }
}

impl RuleGenerator for TreeLearner {
    fn generate(&self, train: &TemporalisedDataset) -> Result<RuleSet> {
        induce(train, &self.config)
    }
}

/// Induces a rule set from the decision tree grown on `train`.
pub fn induce(train: &TemporalisedDataset, config: &InduceConfig) -> Result<RuleSet> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingData);
    }
    if !(config.confidence_factor > 0.0 && config.confidence_factor < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence factor {} outside (0, 1)",
            config.confidence_factor
        )));
    }
    tree::induce_rules(train, config)
}
