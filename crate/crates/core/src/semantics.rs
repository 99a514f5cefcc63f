//! Relation kinds of temporal rule sets.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induce::RuleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    #[serde(rename = "instantaneous")]
    Instantaneous,
    #[serde(rename = "acausal")]
    Acausal,
    #[serde(rename = "p-causal")]
    PCausal,
    /// Conditions both at and away from the decision time.
    #[serde(rename = "mixed")]
    Mixed,
}

impl RelationKind {
    pub const COMPETING: [RelationKind; 3] = [
        RelationKind::Instantaneous,
        RelationKind::Acausal,
        RelationKind::PCausal,
    ];

    /// Rank in the simplicity order; `None` for [`RelationKind::Mixed`].
    pub fn simplicity_rank(self) -> Option<u8> {
        match self {
            RelationKind::Instantaneous => Some(0),
            RelationKind::Acausal => Some(1),
            RelationKind::PCausal => Some(2),
            RelationKind::Mixed => None,
        }
    }

    /// Instantaneous < acausal < p-causal. Mixed is not comparable.
    pub fn simplicity_cmp(self, other: RelationKind) -> Option<Ordering> {
        Some(self.simplicity_rank()?.cmp(&other.simplicity_rank()?))
    }

    pub fn is_simpler_than(self, other: RelationKind) -> bool {
        self.simplicity_cmp(other) == Some(Ordering::Less)
    }

    /// The kind a test is run for, given its window geometry.
    pub fn declared_for(window: usize, position: usize) -> RelationKind {
        if window == 1 {
            RelationKind::Instantaneous
        } else if position == window {
            RelationKind::PCausal
        } else {
            RelationKind::Acausal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Instantaneous => "instantaneous",
            RelationKind::Acausal => "acausal",
            RelationKind::PCausal => "p-causal",
            RelationKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies a rule set by the time indices its conditions use relative to
/// the decision time. Rules without conditions carry no temporal evidence and
/// are ignored.
pub fn classify_rule_set(rs: &RuleSet) -> Result<RelationKind> {
    let t0 = rs.decision_time();
    let times = rs
        .rules()
        .iter()
        .flat_map(|r| r.conditions.iter().map(|c| c.time));
    let (mut before, mut same, mut after) = (false, false, false);
    let mut any = false;
    for t in times {
        any = true;
        match t.cmp(&t0) {
            Ordering::Less => before = true,
            Ordering::Equal => same = true,
            Ordering::Greater => after = true,
        }
    }
    if !any {
        return Err(Error::Unclassifiable);
    }
    Ok(match (before, same, after) {
        (false, true, false) => RelationKind::Instantaneous,
        (true, false, false) => RelationKind::PCausal,
        (_, false, true) => RelationKind::Acausal,
        _ => RelationKind::Mixed,
    })
}

/// The kind the rules actually turned out to be, whatever the test was run
/// for. An acausal test whose rules only look backwards is p-causal.
pub fn reclassify_outcome(declared: RelationKind, rs: &RuleSet) -> Result<RelationKind> {
    let _ = declared;
    classify_rule_set(rs)
}
