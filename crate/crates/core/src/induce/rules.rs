//! Rule sets: construction, text format, first-match classification.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Value};
use crate::error::{Error, Result};
use crate::temporalise::{column_label, TemporalisedDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Equals(String),
    AtMost(f64),
    Above(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub time: usize,
    pub predicate: Predicate,
}

impl Condition {
    pub fn equals(attribute: &str, time: usize, symbol: &str) -> Self {
        Condition {
            attribute: attribute.to_owned(),
            time,
            predicate: Predicate::Equals(symbol.to_owned()),
        }
    }

    fn holds(&self, cell: Cell<'_>) -> bool {
        match (&self.predicate, cell) {
            (Predicate::Equals(s), Cell::Symbol(c)) => s == c,
            (Predicate::Equals(s), Cell::Number(v)) => s.parse::<f64>().is_ok_and(|x| x == v),
            (Predicate::AtMost(t), Cell::Number(v)) => v <= *t,
            (Predicate::Above(t), Cell::Number(v)) => v > *t,
            _ => false,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = column_label(&self.attribute, self.time);
        match &self.predicate {
            Predicate::Equals(s) => write!(f, "{label}={s}"),
            Predicate::AtMost(t) => write!(f, "{label}<={t}"),
            Predicate::Above(t) => write!(f, "{label}>{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub class: String,
}

impl Rule {
    pub fn new(mut conditions: Vec<Condition>, class: impl Into<String>) -> Self {
        sort_conditions(&mut conditions);
        Rule {
            conditions,
            class: class.into(),
        }
    }
}

fn sort_conditions(conditions: &mut [Condition]) {
    conditions.sort_by(|a, b| {
        (a.time, &a.attribute)
            .cmp(&(b.time, &b.attribute))
            .then_with(|| predicate_rank(&a.predicate).cmp(&predicate_rank(&b.predicate)))
    });
}

fn predicate_rank(p: &Predicate) -> u8 {
    match p {
        Predicate::Equals(_) => 0,
        Predicate::Above(_) => 1,
        Predicate::AtMost(_) => 2,
    }
}

/// Rules sharing one decision `(attribute, time)`, applied first-match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    decision_attribute: String,
    decision_time: usize,
    rules: Vec<Rule>,
    default_class: String,
}

impl RuleSet {
    pub fn new(
        decision_attribute: impl Into<String>,
        decision_time: usize,
        rules: Vec<Rule>,
        default_class: impl Into<String>,
    ) -> Result<Self> {
        let decision_attribute = decision_attribute.into();
        if rules.is_empty() {
            return Err(Error::InvalidParameter(
                "a rule set needs at least one rule".into(),
            ));
        }
        for rule in &rules {
            let mut eq_seen: Vec<(&str, usize)> = Vec::new();
            let mut bounds: HashMap<(&str, usize), (f64, f64)> = HashMap::new();
            for c in &rule.conditions {
                if c.attribute == decision_attribute && c.time == decision_time {
                    return Err(Error::InvalidParameter(format!(
                        "rule tests its own decision {}",
                        column_label(&c.attribute, c.time)
                    )));
                }
                let key = (c.attribute.as_str(), c.time);
                match c.predicate {
                    Predicate::Equals(_) => {
                        if eq_seen.contains(&key) {
                            return Err(Error::InvalidParameter(format!(
                                "two equality tests on {}",
                                column_label(&c.attribute, c.time)
                            )));
                        }
                        eq_seen.push(key);
                    }
                    Predicate::AtMost(t) => {
                        let b = bounds
                            .entry(key)
                            .or_insert((f64::NEG_INFINITY, f64::INFINITY));
                        b.1 = b.1.min(t);
                    }
                    Predicate::Above(t) => {
                        let b = bounds
                            .entry(key)
                            .or_insert((f64::NEG_INFINITY, f64::INFINITY));
                        b.0 = b.0.max(t);
                    }
                }
            }
            if let Some(((a, t), _)) = bounds.iter().find(|(_, (lo, hi))| lo >= hi) {
                return Err(Error::InvalidParameter(format!(
                    "empty numeric interval on {}",
                    column_label(a, *t)
                )));
            }
        }
        Ok(RuleSet {
            decision_attribute,
            decision_time,
            rules,
            default_class: default_class.into(),
        })
    }

    pub fn decision_attribute(&self) -> &str {
        &self.decision_attribute
    }

    pub fn decision_time(&self) -> usize {
        self.decision_time
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn default_class(&self) -> &str {
        &self.default_class
    }

    pub fn size(&self) -> usize {
        self.rules.len()
    }

    /// True when at least one rule has a non-empty condition set.
    pub fn has_conditions(&self) -> bool {
        self.rules.iter().any(|r| !r.conditions.is_empty())
    }

    fn decision_label(&self) -> String {
        column_label(&self.decision_attribute, self.decision_time)
    }

    /// Indices of all rules whose conditions hold for `record`.
    pub fn matching_rules<R: FlatRecord + ?Sized>(&self, record: &R) -> Result<Vec<usize>> {
        let mut hits = Vec::new();
        for (i, rule) in self.rules.iter().enumerate() {
            if rule_fires(rule, record)? {
                hits.push(i);
            }
        }
        Ok(hits)
    }
}

fn rule_fires<R: FlatRecord + ?Sized>(rule: &Rule, record: &R) -> Result<bool> {
    for c in &rule.conditions {
        let cell = record
            .cell(&c.attribute, c.time)
            .ok_or_else(|| Error::MissingColumn(column_label(&c.attribute, c.time)))?;
        if !c.holds(cell) {
            return Ok(false);
        }
    }
    Ok(true)
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decision = self.decision_label();
        for rule in &self.rules {
            if rule.conditions.is_empty() {
                write!(f, "IF TRUE")?;
            } else {
                write!(f, "IF ")?;
                for (i, c) in rule.conditions.iter().enumerate() {
                    if i > 0 {
                        write!(f, " AND ")?;
                    }
                    write!(f, "{c}")?;
                }
            }
            writeln!(f, " THEN {decision}={}", rule.class)?;
        }
        writeln!(f, "DEFAULT {decision}={}", self.default_class)
    }
}

fn syntax(line: &str, reason: &str) -> Error {
    Error::RuleSyntax {
        line: line.to_owned(),
        reason: reason.to_owned(),
    }
}

fn parse_label(line: &str, label: &str) -> Result<(String, usize)> {
    let at = label
        .rfind("@t")
        .ok_or_else(|| syntax(line, "missing @t<k> time index"))?;
    let time = label[at + 2..]
        .parse::<usize>()
        .map_err(|_| syntax(line, "bad time index"))?;
    Ok((label[..at].to_owned(), time))
}

fn parse_assignment(line: &str, text: &str) -> Result<(String, usize, String)> {
    let eq = text.find('=').ok_or_else(|| syntax(line, "expected `=`"))?;
    let (attr, time) = parse_label(line, &text[..eq])?;
    Ok((attr, time, text[eq + 1..].to_owned()))
}

fn parse_condition(line: &str, text: &str) -> Result<Condition> {
    let (label, predicate) = if let Some(i) = text.find("<=") {
        let t = text[i + 2..]
            .parse()
            .map_err(|_| syntax(line, "bad threshold"))?;
        (&text[..i], Predicate::AtMost(t))
    } else if let Some(i) = text.find('>') {
        let t = text[i + 1..]
            .parse()
            .map_err(|_| syntax(line, "bad threshold"))?;
        (&text[..i], Predicate::Above(t))
    } else {
        let i = text
            .find('=')
            .ok_or_else(|| syntax(line, "expected a comparison"))?;
        (&text[..i], Predicate::Equals(text[i + 1..].to_owned()))
    };
    let (attribute, time) = parse_label(line, label)?;
    Ok(Condition {
        attribute,
        time,
        predicate,
    })
}

impl FromStr for RuleSet {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut decision: Option<(String, usize)> = None;
        let mut default_class = None;
        let mut check_decision = |line: &str, attr: String, time: usize| -> Result<()> {
            match &decision {
                Some((a, t)) if *a != attr || *t != time => {
                    Err(syntax(line, "decision differs from earlier rules"))
                }
                Some(_) => Ok(()),
                None => {
                    decision = Some((attr, time));
                    Ok(())
                }
            }
        };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("DEFAULT ") {
                let (attr, time, class) = parse_assignment(line, rest)?;
                check_decision(line, attr, time)?;
                default_class = Some(class);
                continue;
            }
            let body = line
                .strip_prefix("IF ")
                .ok_or_else(|| syntax(line, "expected IF"))?;
            let (lhs, rhs) = body
                .split_once(" THEN ")
                .ok_or_else(|| syntax(line, "expected THEN"))?;
            let (attr, time, class) = parse_assignment(line, rhs)?;
            check_decision(line, attr, time)?;
            let conditions = if lhs == "TRUE" {
                Vec::new()
            } else {
                lhs.split(" AND ")
                    .map(|c| parse_condition(line, c))
                    .collect::<Result<Vec<_>>>()?
            };
            rules.push(Rule::new(conditions, class));
        }
        let (attr, time) = decision.ok_or_else(|| syntax(text, "no rules"))?;
        let default_class = default_class.ok_or_else(|| syntax(text, "missing DEFAULT line"))?;
        RuleSet::new(attr, time, rules, default_class)
    }
}

/// A value looked up in a flat record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Symbol(&'a str),
    Number(f64),
}

/// A record whose values are addressed by `(attribute, time)`.
pub trait FlatRecord {
    fn cell(&self, attribute: &str, time: usize) -> Option<Cell<'_>>;
}

/// Label-keyed record, e.g. `{"x@t1": "1", "a@t1": "Right"}`. Cells that
/// parse as numbers are offered as numbers.
impl FlatRecord for HashMap<String, String> {
    fn cell(&self, attribute: &str, time: usize) -> Option<Cell<'_>> {
        let raw = self.get(&column_label(attribute, time))?;
        Some(match raw.parse::<f64>() {
            Ok(v) => Cell::Number(v),
            Err(_) => Cell::Symbol(raw),
        })
    }
}

/// One row of a temporalised dataset.
#[derive(Debug, Clone, Copy)]
pub struct FlatRow<'a> {
    dataset: &'a TemporalisedDataset,
    row: usize,
}

impl TemporalisedDataset {
    pub fn row(&self, row: usize) -> FlatRow<'_> {
        FlatRow { dataset: self, row }
    }
}

impl FlatRecord for FlatRow<'_> {
    fn cell(&self, attribute: &str, time: usize) -> Option<Cell<'_>> {
        let idx = self.dataset.condition_index(attribute, time)?;
        let column = self.dataset.condition_columns()[idx];
        let attr = self.dataset.schema().attribute(column.attribute);
        match self.dataset.records()[self.row][idx] {
            Value::Num(v) => Some(Cell::Number(v)),
            Value::Sym(s) => attr.symbol(s).map(Cell::Symbol),
            Value::Missing => None,
        }
    }
}

/// First-match classification; falls back to the default class.
pub fn classify<'r, R: FlatRecord + ?Sized>(rs: &'r RuleSet, record: &R) -> Result<&'r str> {
    for rule in &rs.rules {
        if rule_fires(rule, record)? {
            return Ok(&rule.class);
        }
    }
    Ok(&rs.default_class)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub training_accuracy: f64,
    pub predictive_accuracy: Option<f64>,
    pub rule_size: usize,
    pub training_size: usize,
    pub test_set_size: usize,
}

/// A rule's tests as `(column index, test)` pairs, and the class it predicts
/// (`None` when the class never occurs in the dataset).
type BoundRule = (Vec<(usize, BoundTest)>, Option<Value>);

/// Rule set with every test resolved to a column index of one dataset.
struct BoundRuleSet {
    rules: Vec<BoundRule>,
    default_class: Option<Value>,
}

enum BoundTest {
    Symbol(Option<u32>),
    Number(f64),
    AtMost(f64),
    Above(f64),
}

impl BoundTest {
    fn holds(&self, value: Value) -> bool {
        match (self, value) {
            (BoundTest::Symbol(Some(s)), Value::Sym(v)) => *s == v,
            (BoundTest::Number(x), Value::Num(v)) => *x == v,
            (BoundTest::AtMost(t), Value::Num(v)) => v <= *t,
            (BoundTest::Above(t), Value::Num(v)) => v > *t,
            _ => false,
        }
    }
}

fn bind_class(ds: &TemporalisedDataset, label: &str) -> Option<Value> {
    let attr = ds.schema().attribute(ds.decision_column().attribute);
    match attr.kind {
        AttributeKind::Discrete => attr.symbol_index(label).map(Value::Sym),
        AttributeKind::Numeric => label.parse::<f64>().ok().map(Value::Num),
    }
}

fn bind(rs: &RuleSet, ds: &TemporalisedDataset) -> Result<BoundRuleSet> {
    let mut rules = Vec::with_capacity(rs.rules.len());
    for rule in &rs.rules {
        let mut tests = Vec::with_capacity(rule.conditions.len());
        for c in &rule.conditions {
            let idx = ds
                .condition_index(&c.attribute, c.time)
                .ok_or_else(|| Error::MissingColumn(column_label(&c.attribute, c.time)))?;
            let attr = ds.schema().attribute(ds.condition_columns()[idx].attribute);
            let test = match (&c.predicate, attr.kind) {
                (Predicate::Equals(s), AttributeKind::Discrete) => {
                    BoundTest::Symbol(attr.symbol_index(s))
                }
                (Predicate::Equals(s), AttributeKind::Numeric) => match s.parse::<f64>() {
                    Ok(v) => BoundTest::Number(v),
                    Err(_) => BoundTest::Symbol(None),
                },
                (Predicate::AtMost(t), _) => BoundTest::AtMost(*t),
                (Predicate::Above(t), _) => BoundTest::Above(*t),
            };
            tests.push((idx, test));
        }
        rules.push((tests, bind_class(ds, &rule.class)));
    }
    Ok(BoundRuleSet {
        rules,
        default_class: bind_class(ds, &rs.default_class),
    })
}

impl BoundRuleSet {
    fn predict(&self, record: &[Value]) -> Option<Value> {
        self.rules
            .iter()
            .find(|(tests, _)| tests.iter().all(|(i, t)| t.holds(record[*i])))
            .map_or(self.default_class, |(_, class)| *class)
    }
}

/// Fraction of records whose recorded decision equals the rule set's prediction.
pub fn evaluate(rs: &RuleSet, data: &TemporalisedDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyEvaluationData);
    }
    let bound = bind(rs, data)?;
    let correct = data
        .records()
        .iter()
        .filter(|rec| bound.predict(rec) == Some(*rec.last().expect("non-empty record")))
        .count();
    Ok(correct as f64 / data.len() as f64)
}
