//! Gain-ratio tree growth, pessimistic pruning and rule extraction.

use statrs::distribution::{ContinuousCDF, Normal};

use super::rules::{Condition, Predicate, Rule, RuleSet};
use super::InduceConfig;
use crate::data::{AttributeKind, Value};
use crate::error::{Error, Result};
use crate::temporalise::{Column, TemporalisedDataset};

const GAIN_EPS: f64 = 1e-9;

/// Class labels of the decision column and per-record class indices.
struct ClassIndex {
    labels: Vec<String>,
    of_record: Vec<usize>,
}

impl ClassIndex {
    fn new(ds: &TemporalisedDataset) -> Result<Self> {
        let decision = ds.decision_column();
        let attr = ds.schema().attribute(decision.attribute);
        let values: Vec<Value> = (0..ds.len()).map(|i| ds.decision_value(i)).collect();
        match attr.kind {
            AttributeKind::Discrete => Ok(ClassIndex {
                labels: attr.domain.clone(),
                of_record: values
                    .iter()
                    .map(|v| match v {
                        Value::Sym(s) => *s as usize,
                        _ => unreachable!("discrete column holds symbols"),
                    })
                    .collect(),
            }),
            AttributeKind::Numeric => {
                // Integer-valued columns are class labels; anything else is continuous.
                let nums: Vec<f64> = values
                    .iter()
                    .map(|v| match v {
                        Value::Num(x) if x.fract() == 0.0 => Ok(*x),
                        _ => Err(Error::NonDiscreteDecision(attr.name.clone())),
                    })
                    .collect::<Result<_>>()?;
                let mut distinct = nums.clone();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup();
                Ok(ClassIndex {
                    labels: distinct.iter().map(|v| format!("{v}")).collect(),
                    of_record: nums
                        .iter()
                        .map(|v| {
                            distinct
                                .binary_search_by(|d| d.total_cmp(v))
                                .expect("value present")
                        })
                        .collect(),
                })
            }
        }
    }

    fn counts(&self, rows: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut counts = vec![0; self.labels.len()];
        for r in rows {
            counts[self.of_record[r]] += 1;
        }
        counts
    }
}

/// Most frequent class; ties go to the class earliest in label order.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

#[derive(Debug, Clone)]
enum Test {
    Symbols(Vec<u32>),
    Threshold(f64),
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        class: usize,
        size: usize,
        errors: usize,
    },
    Split {
        column: usize,
        test: Test,
        children: Vec<Node>,
        class: usize,
        size: usize,
        errors: usize,
    },
}

impl Node {
    fn stats(&self) -> (usize, usize, usize) {
        match self {
            Node::Leaf {
                class,
                size,
                errors,
            }
            | Node::Split {
                class,
                size,
                errors,
                ..
            } => (*class, *size, *errors),
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    column: usize,
    test: Test,
    ratio: f64,
}

struct Grower<'a> {
    data: &'a TemporalisedDataset,
    classes: &'a ClassIndex,
    min_leaf: usize,
    /// Column indices in `(attribute, time)` order, used for tie-breaking.
    column_order: Vec<usize>,
}

impl<'a> Grower<'a> {
    fn new(data: &'a TemporalisedDataset, classes: &'a ClassIndex, config: &InduceConfig) -> Self {
        let cols = data.condition_columns();
        let mut column_order: Vec<usize> = (0..cols.len()).collect();
        column_order.sort_by_key(|&i| (cols[i].attribute, cols[i].time));
        Grower {
            data,
            classes,
            min_leaf: config.min_leaf.max(1),
            column_order,
        }
    }

    fn value(&self, row: usize, column: usize) -> Value {
        self.data.records()[row][column]
    }

    fn grow(&self, rows: Vec<usize>) -> Node {
        let counts = self.classes.counts(rows.iter().copied());
        let class = majority(&counts);
        let size = rows.len();
        let errors = size - counts[class];
        if errors == 0 || size < 2 * self.min_leaf {
            return Node::Leaf {
                class,
                size,
                errors,
            };
        }
        let parent_entropy = entropy(&counts, size);
        let Some(best) = self.choose_split(&rows, parent_entropy) else {
            return Node::Leaf {
                class,
                size,
                errors,
            };
        };
        let children = self
            .partition(&rows, best.column, &best.test)
            .into_iter()
            .map(|part| self.grow(part))
            .collect();
        Node::Split {
            column: best.column,
            test: best.test,
            children,
            class,
            size,
            errors,
        }
    }

    fn partition(&self, rows: &[usize], column: usize, test: &Test) -> Vec<Vec<usize>> {
        match test {
            Test::Symbols(symbols) => {
                let mut parts = vec![Vec::new(); symbols.len()];
                for &r in rows {
                    if let Value::Sym(s) = self.value(r, column) {
                        let k = symbols
                            .iter()
                            .position(|&x| x == s)
                            .expect("symbol seen at node");
                        parts[k].push(r);
                    }
                }
                parts
            }
            Test::Threshold(t) => {
                let (le, gt) = rows.iter().partition(|&&r| match self.value(r, column) {
                    Value::Num(v) => v <= *t,
                    _ => false,
                });
                vec![le, gt]
            }
        }
    }

    /// Best gain-ratio split with positive gain. When none exists but the node
    /// is still separable, the first separable column is split anyway so that
    /// noise-free data whose classes only show jointly (XOR) is still fit.
    fn choose_split(&self, rows: &[usize], parent_entropy: f64) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        let mut fallback: Option<Candidate> = None;
        for &column in &self.column_order {
            let (positive, separable) = match self
                .data
                .schema()
                .attribute(self.data.condition_columns()[column].attribute)
                .kind
            {
                AttributeKind::Discrete => self.discrete_candidate(rows, column, parent_entropy),
                AttributeKind::Numeric => self.numeric_candidate(rows, column, parent_entropy),
            };
            if let Some(c) = positive {
                if best.as_ref().is_none_or(|b| c.ratio > b.ratio + GAIN_EPS) {
                    best = Some(c);
                }
            }
            if fallback.is_none() {
                fallback = separable;
            }
        }
        best.or(fallback)
    }

    fn admissible(&self, sizes: impl Iterator<Item = usize>) -> bool {
        sizes.filter(|&s| s >= self.min_leaf).count() >= 2
    }

    fn discrete_candidate(
        &self,
        rows: &[usize],
        column: usize,
        parent_entropy: f64,
    ) -> (Option<Candidate>, Option<Candidate>) {
        let n_classes = self.classes.labels.len();
        let mut by_symbol: Vec<(u32, Vec<usize>)> = Vec::new();
        for &r in rows {
            let Value::Sym(s) = self.value(r, column) else {
                continue;
            };
            let class = self.classes.of_record[r];
            match by_symbol.iter_mut().find(|(x, _)| *x == s) {
                Some((_, counts)) => counts[class] += 1,
                None => {
                    let mut counts = vec![0; n_classes];
                    counts[class] = 1;
                    by_symbol.push((s, counts));
                }
            }
        }
        by_symbol.sort_by_key(|(s, _)| *s);
        let sizes: Vec<usize> = by_symbol.iter().map(|(_, c)| c.iter().sum()).collect();
        if !self.admissible(sizes.iter().copied()) {
            return (None, None);
        }
        let n = rows.len();
        let child_entropy: f64 = by_symbol
            .iter()
            .zip(&sizes)
            .map(|((_, c), &s)| s as f64 / n as f64 * entropy(c, s))
            .sum();
        let gain = parent_entropy - child_entropy;
        let split_info = entropy(&sizes, n);
        let candidate = Candidate {
            column,
            test: Test::Symbols(by_symbol.iter().map(|(s, _)| *s).collect()),
            ratio: gain / split_info,
        };
        if gain > GAIN_EPS {
            (Some(candidate.clone()), Some(candidate))
        } else {
            (None, Some(candidate))
        }
    }

    fn numeric_candidate(
        &self,
        rows: &[usize],
        column: usize,
        parent_entropy: f64,
    ) -> (Option<Candidate>, Option<Candidate>) {
        let n_classes = self.classes.labels.len();
        let mut pairs: Vec<(f64, usize)> = rows
            .iter()
            .filter_map(|&r| match self.value(r, column) {
                Value::Num(v) => Some((v, self.classes.of_record[r])),
                _ => None,
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pairs.len();
        let mut right = vec![0usize; n_classes];
        for &(_, c) in &pairs {
            right[c] += 1;
        }
        let mut left = vec![0usize; n_classes];

        let mut best: Option<Candidate> = None;
        let mut balanced: Option<(usize, Candidate)> = None;
        for i in 0..n.saturating_sub(1) {
            let (v, c) = pairs[i];
            left[c] += 1;
            right[c] -= 1;
            let next = pairs[i + 1].0;
            if next == v {
                continue;
            }
            let (nl, nr) = (i + 1, n - i - 1);
            if nl < self.min_leaf || nr < self.min_leaf {
                continue;
            }
            let (pl, pr) = (nl as f64 / n as f64, nr as f64 / n as f64);
            let gain = parent_entropy - pl * entropy(&left, nl) - pr * entropy(&right, nr);
            let split_info = entropy(&[nl, nr], n);
            let candidate = Candidate {
                column,
                test: Test::Threshold(v + (next - v) / 2.0),
                ratio: gain / split_info,
            };
            let smaller_side = nl.min(nr);
            if balanced.as_ref().is_none_or(|(s, _)| smaller_side > *s) {
                balanced = Some((smaller_side, candidate.clone()));
            }
            if gain > GAIN_EPS
                && best
                    .as_ref()
                    .is_none_or(|b| candidate.ratio > b.ratio + GAIN_EPS)
            {
                best = Some(candidate);
            }
        }
        (best, balanced.map(|(_, c)| c))
    }
}

/// Upper confidence bound on the extra errors of a leaf, as in C4.5.
fn added_errors(n: f64, e: f64, cf: f64) -> f64 {
    if e < 1e-6 {
        return n * (1.0 - (cf.ln() / n).exp());
    }
    if e < 0.9999 {
        let base = n * (1.0 - (cf.ln() / n).exp());
        return base + e * (added_errors(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return 0.67 * (n - e);
    }
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(1.0 - cf);
    let coeff = z * z;
    let e5 = e + 0.5;
    let pr =
        (e5 + coeff / 2.0 + (coeff * (e5 * (1.0 - e5 / n) + coeff / 4.0)).sqrt()) / (n + coeff);
    n * pr - e
}

/// Returns the pessimistic error estimate of the (possibly pruned) subtree.
fn prune(node: &mut Node, cf: f64) -> f64 {
    let (class, size, errors) = node.stats();
    let as_leaf = errors as f64 + added_errors(size as f64, errors as f64, cf);
    let Node::Split { children, .. } = node else {
        return as_leaf;
    };
    let subtree: f64 = children.iter_mut().map(|c| prune(c, cf)).sum();
    if as_leaf <= subtree + 0.1 {
        *node = Node::Leaf {
            class,
            size,
            errors,
        };
        as_leaf
    } else {
        subtree
    }
}

/// One test of an extracted rule, by condition-column index.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RawTest {
    Symbol(u32),
    Above(f64),
    AtMost(f64),
}

impl RawTest {
    fn holds(self, value: Value) -> bool {
        match (self, value) {
            (RawTest::Symbol(s), Value::Sym(v)) => s == v,
            (RawTest::Above(t), Value::Num(v)) => v > t,
            (RawTest::AtMost(t), Value::Num(v)) => v <= t,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RawRule {
    tests: Vec<(usize, RawTest)>,
    class: usize,
}

pub(super) fn induce_rules(train: &TemporalisedDataset, config: &InduceConfig) -> Result<RuleSet> {
    let classes = ClassIndex::new(train)?;
    let grower = Grower::new(train, &classes, config);
    let mut root = grower.grow((0..train.len()).collect());
    if config.prune {
        prune(&mut root, config.confidence_factor);
    }

    let mut raw = Vec::new();
    extract(&root, &mut Vec::new(), &mut raw);
    if config.simplify_rules {
        for rule in &mut raw {
            simplify(rule, train, &classes, config.confidence_factor);
        }
        let mut unique: Vec<RawRule> = Vec::with_capacity(raw.len());
        for rule in raw {
            if !unique.iter().any(|u| same_rule(u, &rule)) {
                unique.push(rule);
            }
        }
        raw = drop_redundant_rules(unique, train, &classes);
    }

    let decision = train.decision_column();
    let decision_name = train.schema().attribute(decision.attribute).name.clone();
    let rules = raw
        .iter()
        .map(|r| named_rule(r, train, &classes.labels[r.class]))
        .collect();
    let default_class = classes.labels[majority(&classes.counts(0..train.len()))].clone();
    RuleSet::new(decision_name, decision.time, rules, default_class)
}

/// Removes rules, last first, whose removal does not lower first-match
/// training accuracy.
fn drop_redundant_rules(
    rules: Vec<RawRule>,
    data: &TemporalisedDataset,
    classes: &ClassIndex,
) -> Vec<RawRule> {
    let default_class = majority(&classes.counts(0..data.len()));
    let fires: Vec<Vec<usize>> = data
        .records()
        .iter()
        .map(|record| {
            (0..rules.len())
                .filter(|&r| rules[r].tests.iter().all(|&(col, t)| t.holds(record[col])))
                .collect()
        })
        .collect();
    let mut active = vec![true; rules.len()];
    let first_active = |fired: &[usize], active: &[bool], skip: Option<usize>| {
        fired
            .iter()
            .copied()
            .find(|&r| active[r] && Some(r) != skip)
    };
    for candidate in (0..rules.len()).rev() {
        let mut delta: i64 = 0;
        for (row, fired) in fires.iter().enumerate() {
            if first_active(fired, &active, None) != Some(candidate) {
                continue;
            }
            let truth = classes.of_record[row];
            let after = first_active(fired, &active, Some(candidate))
                .map_or(default_class, |r| rules[r].class);
            delta += i64::from(after == truth) - i64::from(rules[candidate].class == truth);
        }
        // keep at least one rule
        if delta >= 0 && active.iter().filter(|&&a| a).count() > 1 {
            active[candidate] = false;
        }
    }
    rules
        .into_iter()
        .zip(active)
        .filter_map(|(r, keep)| keep.then_some(r))
        .collect()
}

fn same_rule(a: &RawRule, b: &RawRule) -> bool {
    a.class == b.class
        && a.tests.len() == b.tests.len()
        && a.tests.iter().all(|t| b.tests.contains(t))
}

fn extract(node: &Node, path: &mut Vec<(usize, RawTest)>, out: &mut Vec<RawRule>) {
    match node {
        Node::Leaf { class, .. } => out.push(RawRule {
            tests: merge_intervals(path),
            class: *class,
        }),
        Node::Split {
            column,
            test,
            children,
            ..
        } => {
            for (k, child) in children.iter().enumerate() {
                let step = match test {
                    Test::Symbols(symbols) => RawTest::Symbol(symbols[k]),
                    Test::Threshold(t) if k == 0 => RawTest::AtMost(*t),
                    Test::Threshold(t) => RawTest::Above(*t),
                };
                path.push((*column, step));
                extract(child, path, out);
                path.pop();
            }
        }
    }
}

/// Repeated numeric tests on one column collapse to a single interval.
fn merge_intervals(path: &[(usize, RawTest)]) -> Vec<(usize, RawTest)> {
    let mut out: Vec<(usize, RawTest)> = Vec::with_capacity(path.len());
    for &(col, test) in path {
        let existing = out
            .iter_mut()
            .find(|(c, t)| *c == col && std::mem::discriminant(t) == std::mem::discriminant(&test));
        match (existing, test) {
            (Some((_, RawTest::Above(lo))), RawTest::Above(t)) => *lo = lo.max(t),
            (Some((_, RawTest::AtMost(hi))), RawTest::AtMost(t)) => *hi = hi.min(t),
            _ => out.push((col, test)),
        }
    }
    out
}

fn pessimistic_rate(covered: usize, errors: usize, cf: f64) -> f64 {
    if covered == 0 {
        return 1.0;
    }
    let (n, e) = (covered as f64, errors as f64);
    (e + added_errors(n, e, cf)) / n
}

/// Drops conditions one at a time, always the one whose removal gives the
/// lowest pessimistic error rate, while that rate does not exceed the
/// current one.
fn simplify(rule: &mut RawRule, data: &TemporalisedDataset, classes: &ClassIndex, cf: f64) {
    while !rule.tests.is_empty() {
        let k = rule.tests.len();
        let (mut covered, mut errors) = (0usize, 0usize);
        let mut without = vec![(0usize, 0usize); k];
        for (row, record) in data.records().iter().enumerate() {
            let mut failed = None;
            let mut failures = 0;
            for (j, &(col, test)) in rule.tests.iter().enumerate() {
                if !test.holds(record[col]) {
                    failures += 1;
                    failed = Some(j);
                    if failures > 1 {
                        break;
                    }
                }
            }
            let wrong = usize::from(classes.of_record[row] != rule.class);
            match (failures, failed) {
                (0, _) => {
                    covered += 1;
                    errors += wrong;
                }
                (1, Some(j)) => {
                    without[j].0 += 1;
                    without[j].1 += wrong;
                }
                _ => {}
            }
        }
        let current = pessimistic_rate(covered, errors, cf);
        let (best, rate) = without
            .iter()
            .enumerate()
            .map(|(j, &(c, e))| (j, pessimistic_rate(covered + c, errors + e, cf)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("rule has tests");
        if rate > current {
            break;
        }
        rule.tests.remove(best);
    }
}

fn named_rule(rule: &RawRule, data: &TemporalisedDataset, class: &str) -> Rule {
    let conditions = rule
        .tests
        .iter()
        .map(|&(col, test)| {
            let column: Column = data.condition_columns()[col];
            let attr = data.schema().attribute(column.attribute);
            let predicate = match test {
                RawTest::Symbol(s) => {
                    Predicate::Equals(attr.symbol(s).unwrap_or_default().to_owned())
                }
                RawTest::Above(t) => Predicate::Above(t),
                RawTest::AtMost(t) => Predicate::AtMost(t),
            };
            Condition {
                attribute: attr.name.clone(),
                time: column.time,
                predicate,
            }
        })
        .collect();
    Rule::new(conditions, class)
}
