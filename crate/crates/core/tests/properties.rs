use std::collections::HashSet;

use proptest::prelude::*;

use timers::data::read_csv;
use timers::{
    classify_rule_set, evaluate, induce, temporalise, EventSequence, HeaderMode, InduceConfig,
    RelationKind, RuleSet, TemporalisationSpec,
};

const SYMBOLS: [&str; 3] = ["lo", "mid", "hi"];

fn sequence(max_attrs: usize, max_len: usize) -> impl Strategy<Value = EventSequence> {
    (1..=max_attrs, 1..=max_len).prop_flat_map(|(m, n)| {
        prop::collection::vec(prop::collection::vec(0..SYMBOLS.len(), m), n).prop_map(move |rows| {
            let names: Vec<String> = (0..m).map(|i| format!("v{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let cells: Vec<Vec<&str>> = rows
                .iter()
                .map(|r| r.iter().map(|&s| SYMBOLS[s]).collect())
                .collect();
            EventSequence::from_symbols(&refs, &cells).unwrap()
        })
    })
}

/// A sequence plus a window geometry that fits it.
fn windowed(min_window: usize) -> impl Strategy<Value = (EventSequence, usize, usize)> {
    sequence(4, 30)
        .prop_filter("needs room for a window", move |s| s.len() >= min_window)
        .prop_flat_map(move |s| {
            let n = s.len();
            (Just(s), min_window..=n.min(6))
        })
        .prop_flat_map(|(s, w)| (Just(s), Just(w), 1..=w))
}

fn rule_set_text() -> impl Strategy<Value = (String, Vec<String>)> {
    let rule = prop::collection::btree_map((0..3usize, 1..=4usize), 0..3usize, 0..4);
    (prop::collection::vec((rule, 0..3usize), 1..5), 2..=4usize).prop_map(|(rules, t0)| {
        let lines: Vec<String> = rules
            .into_iter()
            .map(|(conds, class)| {
                let conds: Vec<String> = conds
                    .into_iter()
                    .filter(|&((a, t), _)| !(a == 0 && t == t0))
                    .map(|((a, t), v)| format!("{}@t{t}={v}", ["d", "e", "f"][a]))
                    .collect();
                let lhs = if conds.is_empty() {
                    "TRUE".to_owned()
                } else {
                    conds.join(" AND ")
                };
                format!("IF {lhs} THEN d@t{t0}={class}")
            })
            .collect();
        (format!("DEFAULT d@t{t0}=0"), lines)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn temporalised_shape_and_values((seq, w, pos) in windowed(2)) {
        let m = seq.width();
        let ds = temporalise(&TemporalisationSpec::new(w, pos, "v0").unwrap(), &seq).unwrap();
        prop_assert_eq!(ds.len(), seq.len() - w + 1);
        prop_assert_eq!(ds.field_count(), (w - 1) * m + 1);
        for (i, flat) in ds.records().iter().enumerate() {
            for (k, col) in ds.condition_columns().iter().enumerate() {
                prop_assert_eq!(flat[k], seq.record(i + col.time - 1)[col.attribute]);
            }
            prop_assert_eq!(ds.decision_value(i), seq.record(i + pos - 1)[0]);
        }
    }

    #[test]
    fn column_names_are_unique_and_avoid_the_decision_record((seq, w, pos) in windowed(1)) {
        let ds = temporalise(&TemporalisationSpec::new(w, pos, "v0").unwrap(), &seq).unwrap();
        let header = ds.header();
        let unique: HashSet<&String> = header.iter().collect();
        prop_assert_eq!(unique.len(), header.len());
        let times: Vec<usize> = ds.condition_columns().iter().map(|c| c.time).collect();
        if w >= 2 {
            prop_assert!(!times.contains(&pos));
            if pos == w {
                prop_assert!(times.iter().all(|&t| t < pos));
            } else {
                prop_assert!(times.iter().any(|&t| t > pos));
            }
        }
    }

    #[test]
    fn chronological_split_concatenates_back(seq in sequence(3, 30), frac in 0.0..1.0f64) {
        let test_count = ((seq.len() as f64) * frac) as usize;
        prop_assume!(test_count < seq.len());
        let (train, test) = seq.split_chronological(test_count).unwrap();
        prop_assert_eq!(test.len(), test_count);
        let joined: Vec<_> = train.records().iter().chain(test.records()).cloned().collect();
        prop_assert_eq!(joined.as_slice(), seq.records());
    }

    #[test]
    fn csv_round_trip(seq in sequence(4, 30)) {
        let text = seq.to_csv_string(true).unwrap();
        let back = read_csv(text.as_bytes(), HeaderMode::FirstRowNames).unwrap();
        prop_assert_eq!(back.to_csv_string(true).unwrap(), text);
        prop_assert_eq!(back.len(), seq.len());
    }

    #[test]
    fn classification_ignores_rule_and_condition_order((default, mut lines) in rule_set_text(), seed in any::<u64>()) {
        let parse = |lines: &[String]| -> RuleSet {
            let mut text = lines.join("\n");
            text.push('\n');
            text.push_str(&default);
            text.parse().unwrap()
        };
        let original = classify_rule_set(&parse(&lines)).ok();
        // reverse conditions inside each rule, then rotate the rules
        for line in &mut lines {
            if let Some((lhs, rhs)) = line.strip_prefix("IF ").and_then(|l| l.split_once(" THEN ")) {
                let mut conds: Vec<&str> = lhs.split(" AND ").collect();
                conds.reverse();
                *line = format!("IF {} THEN {rhs}", conds.join(" AND "));
            }
        }
        let shift = (seed as usize) % lines.len();
        lines.rotate_left(shift);
        prop_assert_eq!(classify_rule_set(&parse(&lines)).ok(), original);
    }

    #[test]
    fn forward_windows_never_yield_acausal_rules((seq, w, _pos) in windowed(2)) {
        let ds = temporalise(&TemporalisationSpec::new(w, w, "v0").unwrap(), &seq).unwrap();
        for config in [InduceConfig::default(), InduceConfig::pruned()] {
            let rs = induce(&ds, &config).unwrap();
            if let Ok(kind) = classify_rule_set(&rs) {
                prop_assert_eq!(kind, RelationKind::PCausal);
            }
        }
    }

    #[test]
    fn exact_tree_rules_partition_the_training_set((seq, w, pos) in windowed(1)) {
        let ds = temporalise(&TemporalisationSpec::new(w, pos, "v0").unwrap(), &seq).unwrap();
        let rs = induce(&ds, &InduceConfig::default()).unwrap();
        for i in 0..ds.len() {
            let fired = rs.matching_rules(&ds.row(i)).unwrap().len();
            prop_assert_eq!(fired, 1, "record {} fired {} rules", i, fired);
        }
        let acc = evaluate(&rs, &ds).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
        let pruned = induce(&ds, &InduceConfig::pruned()).unwrap();
        let acc = evaluate(&pruned, &ds).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
    }
}
