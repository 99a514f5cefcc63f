//! Temporal decision rule discovery over ordered record sequences.
//!
//! A sequence of records is flattened with a sliding window so that an
//! ordinary decision-tree learner can predict (or retrodict) one attribute
//! from values observed at other time steps. The rule sets obtained for every
//! window geometry are then classified as instantaneous, acausal or p-causal,
//! and a confidence-interval comparison picks the simplest explanation that is
//! not clearly beaten on accuracy.
//!
//! The main entry point is [`verdict::run_timers`].

pub mod data;
pub mod datagen;
pub mod error;
pub mod induce;
pub mod report;
pub mod semantics;
pub mod temporalise;
pub mod verdict;

pub use data::{Attribute, AttributeKind, EventSequence, HeaderMode, Schema, Value};
pub use error::{Error, Result};
pub use induce::{
    evaluate, induce, Cell, EvalResult, FlatRecord, InduceConfig, Predicate, Rule, RuleGenerator,
    RuleSet, TreeLearner,
};
pub use semantics::{classify_rule_set, reclassify_outcome, RelationKind};
pub use temporalise::{temporalise, Column, TemporalisationSpec, TemporalisedDataset};

pub use verdict::{
    run_timers, run_timers_with, AccuracyMode, IntervalMethod, Preference, RunSpec, Verdict,
    VerdictReport,
};
