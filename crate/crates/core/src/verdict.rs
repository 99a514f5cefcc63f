//! The sweep over window geometries and the choice of relation kind.
//!
//! [`run_timers`] induces one rule set for the instantaneous case and one for
//! every `(window, position)` with `min_window <= window <= max_window`. The
//! outcomes are grouped by the kind their rules *actually* have, the most
//! accurate outcome of each kind is kept, and [`select_relation`] compares the
//! survivors through their accuracy confidence intervals: under overlap the
//! simpler kind wins, otherwise the more accurate one.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::EventSequence;
use crate::error::{Error, Result};
use crate::induce::{evaluate, EvalResult, InduceConfig, RuleGenerator, RuleSet, TreeLearner};
use crate::semantics::{reclassify_outcome, RelationKind};
use crate::temporalise::{temporalise, TemporalisationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Preference {
    #[default]
    HigherAccuracy,
    SimplerMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyMode {
    #[default]
    Predictive,
    Training,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalMethod {
    /// `ac ± z·sqrt(ac(1-ac)/n)`, clamped to [0, 1].
    #[default]
    Normal,
    Wilson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub decision: String,
    pub min_window: usize,
    pub max_window: usize,
    pub accuracy_threshold: f64,
    pub confidence: f64,
    pub preference: Preference,
    pub test_count: usize,
    pub accuracy_mode: AccuracyMode,
    pub interval_method: IntervalMethod,
}

impl RunSpec {
    pub fn new(decision: impl Into<String>) -> Self {
        RunSpec {
            decision: decision.into(),
            min_window: 2,
            max_window: 5,
            accuracy_threshold: 0.5,
            confidence: 0.90,
            preference: Preference::HigherAccuracy,
            test_count: 0,
            accuracy_mode: AccuracyMode::Predictive,
            interval_method: IntervalMethod::Normal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.min_window == 0 || self.min_window > self.max_window {
            return bad(format!(
                "window range needs 0 < min <= max (got {}..{})",
                self.min_window, self.max_window
            ));
        }
        if !(0.0..=1.0).contains(&self.accuracy_threshold) {
            return bad(format!(
                "accuracy threshold {} outside [0, 1]",
                self.accuracy_threshold
            ));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!(
                "confidence level {} outside (0, 1)",
                self.confidence
            ));
        }
        Ok(())
    }

    fn uses_predictive(&self) -> bool {
        self.accuracy_mode == AccuracyMode::Predictive && self.test_count > 0
    }
}

/// One `(window, position)` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub window: usize,
    pub position: usize,
    pub declared_kind: RelationKind,
    /// Kind of the induced rules. Equals the declared kind when no rule has
    /// any condition.
    pub actual_kind: RelationKind,
    pub conditioned: bool,
    pub eval: EvalResult,
    pub rules: RuleSet,
}

impl TestOutcome {
    pub fn accuracy(&self, predictive: bool) -> f64 {
        match (predictive, self.eval.predictive_accuracy) {
            (true, Some(p)) => p,
            _ => self.eval.training_accuracy,
        }
    }

    pub fn evaluation_size(&self, predictive: bool) -> usize {
        if predictive && self.eval.predictive_accuracy.is_some() {
            self.eval.test_set_size
        } else {
            self.eval.training_size
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyInterval {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub confidence: f64,
}

impl AccuracyInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Closed-interval intersection test.
    pub fn overlaps(&self, other: &AccuracyInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Two-sided standard-normal quantile for confidence level `cl`.
pub fn z_value(cl: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(1.0 - (1.0 - cl) / 2.0)
}

fn check_interval_inputs(ac: f64, n: usize, cl: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "accuracy interval needs n >= 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&ac) {
        return Err(Error::InvalidParameter(format!(
            "accuracy {ac} outside [0, 1]"
        )));
    }
    if !(cl > 0.0 && cl < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level {cl} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Normal-approximation binomial interval around an accuracy.
pub fn compute_accuracy_interval(ac: f64, n: usize, cl: f64) -> Result<AccuracyInterval> {
    check_interval_inputs(ac, n, cl)?;
    let half = z_value(cl) * (ac * (1.0 - ac) / n as f64).sqrt();
    Ok(AccuracyInterval {
        center: ac,
        lo: (ac - half).max(0.0),
        hi: (ac + half).min(1.0),
        n,
        confidence: cl,
    })
}

/// Wilson score interval. `center` keeps the observed accuracy.
pub fn wilson_interval(ac: f64, n: usize, cl: f64) -> Result<AccuracyInterval> {
    check_interval_inputs(ac, n, cl)?;
    let z = z_value(cl);
    let n_f = n as f64;
    let denom = 1.0 + z * z / n_f;
    let mid = (ac + z * z / (2.0 * n_f)) / denom;
    let half = z / denom * (ac * (1.0 - ac) / n_f + z * z / (4.0 * n_f * n_f)).sqrt();
    Ok(AccuracyInterval {
        center: ac,
        lo: (mid - half).max(0.0).min(ac),
        hi: (mid + half).min(1.0).max(ac),
        n,
        confidence: cl,
    })
}

impl IntervalMethod {
    pub fn interval(self, ac: f64, n: usize, cl: f64) -> Result<AccuracyInterval> {
        match self {
            IntervalMethod::Normal => compute_accuracy_interval(ac, n, cl),
            IntervalMethod::Wilson => wilson_interval(ac, n, cl),
        }
    }
}

/// One competitor in the relation-type selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: RelationKind,
    pub accuracy: f64,
    pub rule_size: usize,
    pub interval: AccuracyInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub winner: RelationKind,
    /// Candidates in the order they were visited.
    pub order: Vec<RelationKind>,
    /// Winner after the first candidate and after each comparison.
    pub trace: Vec<RelationKind>,
}

/// Walks the candidates sorted by accuracy (ascending when higher accuracy is
/// preferred, descending otherwise). A challenger whose interval overlaps the
/// current winner's replaces it only if it is strictly simpler and has no
/// more rules; a challenger with a disjoint interval replaces it only if it is
/// more accurate.
pub fn select_relation(candidates: &[Candidate], preference: Preference) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "relation selection needs at least one candidate".into(),
        ));
    }
    if let Some(c) = candidates
        .iter()
        .find(|c| c.kind.simplicity_rank().is_none())
    {
        return Err(Error::InvalidParameter(format!(
            "`{}` rule sets do not compete",
            c.kind
        )));
    }
    let mut info = candidates.to_vec();
    // stable, so equal accuracies keep their input order
    match preference {
        Preference::HigherAccuracy => info.sort_by(|a, b| a.accuracy.total_cmp(&b.accuracy)),
        Preference::SimplerMethod => info.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy)),
    }

    let mut winner = 0;
    let mut trace = vec![info[0].kind];
    for challenger in 1..info.len() {
        let (w, c) = (&info[winner], &info[challenger]);
        if w.interval.overlaps(&c.interval) {
            if c.kind.is_simpler_than(w.kind) && c.rule_size <= w.rule_size {
                winner = challenger;
            }
        } else if c.accuracy > w.accuracy {
            winner = challenger;
        }
        trace.push(info[winner].kind);
    }
    Ok(Selection {
        winner: info[winner].kind,
        order: info.iter().map(|c| c.kind).collect(),
        trace,
    })
}

/// Builds the intervals from `(kind, accuracy, rule_size, n)` and selects.
pub fn relation_type(
    cl: f64,
    entries: &[(RelationKind, f64, usize, usize)],
    preference: Preference,
    method: IntervalMethod,
) -> Result<Selection> {
    let candidates = entries
        .iter()
        .map(|&(kind, accuracy, rule_size, n)| {
            Ok(Candidate {
                kind,
                accuracy,
                rule_size,
                interval: method.interval(accuracy, n, cl)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    select_relation(&candidates, preference)
}

/// `1 + Σ_{w=α..β} w`, the number of rule sets a sweep induces.
pub fn rule_generator_run_count(min_window: usize, max_window: usize) -> Result<usize> {
    if min_window == 0 || min_window > max_window {
        return Err(Error::InvalidParameter(format!(
            "window range needs 0 < min <= max (got {min_window}..{max_window})"
        )));
    }
    Ok(1 + (max_window * (max_window + 1) - (min_window - 1) * min_window) / 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOutcome {
    pub kind: RelationKind,
    pub window: usize,
    pub position: usize,
    pub accuracy: f64,
    pub rule_size: usize,
    pub evaluation_size: usize,
    pub interval: AccuracyInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Relation(RelationKind),
    NoVerdict,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Relation(kind) => write!(f, "{kind}"),
            Verdict::NoVerdict => f.write_str("no verdict"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub spec: RunSpec,
    /// The instantaneous outcome first, then the sweep in `(window, position)` order.
    pub outcomes: Vec<TestOutcome>,
    /// Best outcome of each competing kind that has one.
    pub best: Vec<BestOutcome>,
    /// Competing kinds with no qualifying rule set.
    pub absent: Vec<RelationKind>,
    pub selection: Option<Selection>,
    pub verdict: Verdict,
    pub rule_generator_runs: usize,
    pub predictive: bool,
}

impl VerdictReport {
    pub fn best_of(&self, kind: RelationKind) -> Option<&BestOutcome> {
        self.best.iter().find(|b| b.kind == kind)
    }

    pub fn outcome(&self, window: usize, position: usize) -> Option<&TestOutcome> {
        self.outcomes
            .iter()
            .find(|o| o.window == window && o.position == position)
    }

    pub fn verdict_line(&self) -> String {
        match self.verdict {
            Verdict::Relation(kind) => format!(
                "for attribute {}, the relation is {kind}",
                self.spec.decision
            ),
            Verdict::NoVerdict => format!("for attribute {}, No verdict", self.spec.decision),
        }
    }
}

/// Runs the full sweep with the pruned tree learner
/// ([`InduceConfig::pruned`]). Use [`run_timers_with`] to plug in another
/// rule generator, e.g. an exact-fit `TreeLearner::default()`.
pub fn run_timers(spec: &RunSpec, seq: &EventSequence) -> Result<VerdictReport> {
    run_timers_with(spec, seq, &TreeLearner::new(InduceConfig::pruned()))
}

pub fn run_timers_with<G: RuleGenerator>(
    spec: &RunSpec,
    seq: &EventSequence,
    generator: &G,
) -> Result<VerdictReport> {
    spec.validate()?;
    seq.schema().require(&spec.decision)?;
    let n = seq.len();
    if n < spec.test_count || spec.max_window >= n - spec.test_count {
        if n <= spec.max_window {
            return Err(Error::SequenceShorterThanWindow {
                len: n,
                window: spec.max_window,
            });
        }
        return Err(Error::InvalidParameter(format!(
            "max window {} must be smaller than the {} training records",
            spec.max_window,
            n.saturating_sub(spec.test_count)
        )));
    }
    if spec.test_count > 0 && spec.test_count < spec.max_window {
        return Err(Error::InvalidParameter(format!(
            "test count {} cannot hold a window of {}",
            spec.test_count, spec.max_window
        )));
    }
    seq.ensure_complete()?;
    let (train, test) = seq.split_chronological(spec.test_count)?;

    let mut tasks = vec![(1, 1)];
    for w in spec.min_window..=spec.max_window {
        tasks.extend((1..=w).map(|pos| (w, pos)));
    }
    let runs = tasks.len();
    let mut outcomes = tasks
        .par_iter()
        .map(|&(w, pos)| run_test(&spec.decision, w, pos, &train, &test, generator))
        .collect::<Result<Vec<_>>>()?;
    // with min_window = 1 the sweep repeats the instantaneous test
    if spec.min_window == 1 {
        outcomes.remove(1);
    }

    let predictive = spec.uses_predictive();
    let mut best = Vec::new();
    let mut absent = Vec::new();
    for kind in RelationKind::COMPETING {
        let top = outcomes
            .iter()
            .filter(|o| o.actual_kind == kind)
            .max_by(|a, b| {
                a.accuracy(predictive)
                    .total_cmp(&b.accuracy(predictive))
                    .then_with(|| b.eval.rule_size.cmp(&a.eval.rule_size))
                    .then_with(|| (b.window, b.position).cmp(&(a.window, a.position)))
            });
        match top {
            Some(o) => {
                let accuracy = o.accuracy(predictive);
                let evaluation_size = o.evaluation_size(predictive);
                best.push(BestOutcome {
                    kind,
                    window: o.window,
                    position: o.position,
                    accuracy,
                    rule_size: o.eval.rule_size,
                    evaluation_size,
                    interval: spec.interval_method.interval(
                        accuracy,
                        evaluation_size,
                        spec.confidence,
                    )?,
                });
            }
            None => absent.push(kind),
        }
    }

    let top_accuracy = best
        .iter()
        .map(|b| b.accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let (selection, verdict) = if top_accuracy < spec.accuracy_threshold {
        (None, Verdict::NoVerdict)
    } else {
        let candidates: Vec<Candidate> = best
            .iter()
            .map(|b| Candidate {
                kind: b.kind,
                accuracy: b.accuracy,
                rule_size: b.rule_size,
                interval: b.interval,
            })
            .collect();
        let selection = select_relation(&candidates, spec.preference)?;
        let verdict = Verdict::Relation(selection.winner);
        (Some(selection), verdict)
    };

    Ok(VerdictReport {
        spec: spec.clone(),
        outcomes,
        best,
        absent,
        selection,
        verdict,
        rule_generator_runs: runs,
        predictive,
    })
}

fn run_test<G: RuleGenerator>(
    decision: &str,
    window: usize,
    position: usize,
    train: &EventSequence,
    test: &EventSequence,
    generator: &G,
) -> Result<TestOutcome> {
    let tspec = TemporalisationSpec::new(window, position, decision)?;
    let train_ds = temporalise(&tspec, train)?;
    let rules = generator.generate(&train_ds)?;
    let training_accuracy = evaluate(&rules, &train_ds)?;
    let training_size = train_ds.len();
    drop(train_ds);

    let (predictive_accuracy, test_set_size) = if test.is_empty() {
        (None, 0)
    } else {
        let test_ds = temporalise(&tspec, test)?;
        (Some(evaluate(&rules, &test_ds)?), test_ds.len())
    };

    let declared_kind = RelationKind::declared_for(window, position);
    let (actual_kind, conditioned) = match reclassify_outcome(declared_kind, &rules) {
        Ok(kind) => (kind, true),
        Err(Error::Unclassifiable) => (declared_kind, false),
        Err(e) => return Err(e),
    };
    Ok(TestOutcome {
        window,
        position,
        declared_kind,
        actual_kind,
        conditioned,
        eval: EvalResult {
            training_accuracy,
            predictive_accuracy,
            rule_size: rules.size(),
            training_size,
            test_set_size,
        },
        rules,
    })
}
