//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use timers::datagen::{
    generate_periodic, generate_robot_walk, generate_uniform_noise, RobotWorldConfig,
};
use timers::verdict::{rule_generator_run_count, select_relation, AccuracyInterval, Candidate};
use timers::{
    classify_rule_set, evaluate, induce, run_timers, run_timers_with, temporalise, EventSequence,
    HeaderMode, InduceConfig, Preference, RelationKind, Result, RuleGenerator, RuleSet, RunSpec,
    TemporalisationSpec, TemporalisedDataset, TreeLearner, Verdict,
};

type Outcome = std::result::Result<(), String>;
type Labelled = Vec<(u32, bool)>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------------------

fn table_fixture() -> Outcome {
    let seq = timers::data::read_csv(
        "1,2,4,true\n2,3,5,true\n6,7,8,false\n5,2,3,true\n".as_bytes(),
        HeaderMode::Positional,
    )
    .map_err(|e| e.to_string())?;
    let expected: [(usize, [&str; 2]); 3] = [
        (
            1,
            ["2,3,5,true,6,7,8,false,true", "6,7,8,false,5,2,3,true,true"],
        ),
        (
            2,
            ["1,2,4,true,6,7,8,false,true", "2,3,5,true,5,2,3,true,false"],
        ),
        (
            3,
            ["1,2,4,true,2,3,5,true,false", "2,3,5,true,6,7,8,false,true"],
        ),
    ];
    for (pos, rows) in expected {
        let ds = temporalise(&TemporalisationSpec::new(3, pos, "a4").unwrap(), &seq)
            .map_err(|e| e.to_string())?;
        let text = ds.to_string();
        let got: Vec<&str> = text.lines().skip(1).collect();
        ensure!(got == rows, "pos={pos}: got {got:?}");
        ensure!(
            ds.field_count() == 9,
            "pos={pos}: {} fields",
            ds.field_count()
        );
        for line in got {
            ensure!(
                line.split(',').count() == 9,
                "pos={pos}: row `{line}` is not 9 fields"
            );
        }
    }
    Ok(())
}

fn robot_report() -> std::result::Result<timers::VerdictReport, String> {
    let seq = generate_robot_walk(&RobotWorldConfig::default()).map_err(|e| e.to_string())?;
    let mut spec = RunSpec::new("x");
    spec.test_count = 500;
    spec.accuracy_threshold = 0.6;
    run_timers(&spec, &seq).map_err(|e| e.to_string())
}

fn robot_verdict() -> Outcome {
    let report = robot_report()?;
    ensure!(
        report.outcomes.len() == 15,
        "{} outcomes",
        report.outcomes.len()
    );
    for o in &report.outcomes {
        let (t, p) = (
            o.eval.training_accuracy,
            o.eval.predictive_accuracy.unwrap_or(f64::NAN),
        );
        if o.window == 1 {
            ensure!(t <= 0.35 && p <= 0.35, "instantaneous T={t} P={p}");
        } else if o.position == o.window {
            ensure!(t == 1.0 && p == 1.0, "w={} pos=w: T={t} P={p}", o.window);
        } else if o.position == 1 {
            ensure!(
                (0.4..=0.7).contains(&t) && (0.4..=0.7).contains(&p),
                "w={} pos=1: T={t} P={p}",
                o.window
            );
        }
    }
    ensure!(
        report.verdict == Verdict::Relation(RelationKind::PCausal),
        "verdict {}",
        report.verdict
    );
    Ok(())
}

fn robot_reclassification() -> Outcome {
    let report = robot_report()?;
    let hits: Vec<(usize, usize)> = report
        .outcomes
        .iter()
        .filter(|o| {
            o.declared_kind == RelationKind::Acausal
                && o.actual_kind == RelationKind::PCausal
                && o.eval.training_accuracy == 1.0
                && o.eval.predictive_accuracy == Some(1.0)
        })
        .map(|o| (o.window, o.position))
        .collect();
    ensure!(
        !hits.is_empty(),
        "no acausal test was reclassified p-causal at 100%"
    );
    Ok(())
}

fn worked_selection() -> Outcome {
    let c = |kind, accuracy, lo, hi| Candidate {
        kind,
        accuracy,
        rule_size: 10,
        interval: AccuracyInterval {
            center: accuracy,
            lo,
            hi,
            n: 1000,
            confidence: 0.9,
        },
    };
    let cands = [
        c(RelationKind::Instantaneous, 0.325, 0.31, 0.34),
        c(RelationKind::Acausal, 0.35, 0.33, 0.37),
        c(RelationKind::PCausal, 0.37, 0.35, 0.39),
    ];
    let sel = select_relation(&cands, Preference::HigherAccuracy).map_err(|e| e.to_string())?;
    use RelationKind::*;
    ensure!(
        sel.order == [Instantaneous, Acausal, PCausal],
        "order {:?}",
        sel.order
    );
    ensure!(
        sel.trace == [Instantaneous, Instantaneous, PCausal],
        "trace {:?}",
        sel.trace
    );
    ensure!(sel.winner == PCausal, "winner {}", sel.winner);
    Ok(())
}

fn periodic_acausal() -> Outcome {
    let seq = generate_periodic(8, 400).map_err(|e| e.to_string())?;
    let mut spec = RunSpec::new("x");
    spec.test_count = 100;
    let report = run_timers(&spec, &seq).map_err(|e| e.to_string())?;
    let (Some(back), Some(fwd)) = (
        report.best_of(RelationKind::Acausal),
        report.best_of(RelationKind::PCausal),
    ) else {
        return Err("missing acausal or p-causal outcome".into());
    };
    ensure!(
        back.accuracy == 1.0 && fwd.accuracy == 1.0,
        "backward {} forward {}",
        back.accuracy,
        fwd.accuracy
    );
    for (w, pos) in [(2, 1), (2, 2)] {
        let o = report.outcome(w, pos).ok_or("missing w=2 outcome")?;
        ensure!(
            o.eval.training_accuracy == 1.0 && o.eval.predictive_accuracy == Some(1.0),
            "w={w} pos={pos}: {:?}",
            o.eval
        );
    }
    ensure!(
        back.interval.overlaps(&fwd.interval),
        "intervals are disjoint"
    );
    ensure!(
        report.verdict == Verdict::Relation(RelationKind::Acausal),
        "verdict {}",
        report.verdict
    );
    Ok(())
}

struct Counting<G> {
    inner: G,
    calls: AtomicUsize,
}

impl<G: RuleGenerator> RuleGenerator for Counting<G> {
    fn generate(&self, train: &TemporalisedDataset) -> Result<RuleSet> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.generate(train)
    }
}

fn counting() -> Outcome {
    let seq = generate_robot_walk(&RobotWorldConfig {
        steps: 120,
        ..RobotWorldConfig::default()
    })
    .map_err(|e| e.to_string())?;
    for beta in 1..=6 {
        for alpha in 1..=beta {
            let gen = Counting {
                inner: TreeLearner::default(),
                calls: AtomicUsize::new(0),
            };
            let mut spec = RunSpec::new("x");
            spec.min_window = alpha;
            spec.max_window = beta;
            let report = run_timers_with(&spec, &seq, &gen).map_err(|e| e.to_string())?;
            let expected = 1 + (beta * (beta + 1) - (alpha - 1) * alpha) / 2;
            let calls = gen.calls.load(Ordering::SeqCst);
            ensure!(
                calls == expected,
                "({alpha},{beta}): {calls} runs, expected {expected}"
            );
            ensure!(
                rule_generator_run_count(alpha, beta).unwrap() == expected
                    && report.rule_generator_runs == expected,
                "({alpha},{beta}): reported count disagrees"
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..500 {
        let m = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=40);
        let w = rng.gen_range(2..=6);
        let pos = rng.gen_range(1..=w);
        let names: Vec<String> = (0..m).map(|i| format!("v{i}")).collect();
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0..3).to_string()).collect())
            .collect();
        let seq = EventSequence::from_symbols(&name_refs, &rows).map_err(|e| e.to_string())?;
        let spec = TemporalisationSpec::new(w, pos, "v0").unwrap();
        match temporalise(&spec, &seq) {
            Ok(ds) => {
                ensure!(
                    ds.len() == n - w + 1,
                    "case {case}: {} records for n={n} w={w}",
                    ds.len()
                );
                ensure!(
                    ds.field_count() == (w - 1) * m + 1,
                    "case {case}: {} fields",
                    ds.field_count()
                );
                ensure!(
                    ds.records().iter().all(|r| r.len() == ds.field_count()),
                    "case {case}: ragged output"
                );
            }
            Err(_) => ensure!(n < w, "case {case}: unexpected error for n={n} w={w}"),
        }
    }
    Ok(())
}

fn no_verdict_on_noise() -> Outcome {
    for seed in 0..5 {
        let seq = generate_uniform_noise(4, 2, 1000, seed).map_err(|e| e.to_string())?;
        let mut spec = RunSpec::new("c");
        spec.test_count = 200;
        spec.accuracy_threshold = 0.9;
        let report = run_timers(&spec, &seq).map_err(|e| e.to_string())?;
        ensure!(
            report.verdict == Verdict::NoVerdict,
            "seed {seed}: verdict {}",
            report.verdict
        );
    }
    Ok(())
}

/// Best training accuracy (as a count) of any decision tree of depth at most
/// `depth` over the attributes in `free`.
fn best_tree(records: &[(u32, bool)], free: u32, depth: u32) -> usize {
    let ones = records.iter().filter(|r| r.1).count();
    let mut best = ones.max(records.len() - ones);
    if depth == 0 || best == records.len() {
        return best;
    }
    for a in 0..32 {
        if free & (1 << a) == 0 {
            continue;
        }
        let (hi, lo): (Labelled, Labelled) = records.iter().partition(|r| r.0 & (1 << a) != 0);
        let rest = free & !(1 << a);
        best = best.max(best_tree(&hi, rest, depth - 1) + best_tree(&lo, rest, depth - 1));
    }
    best
}

fn fit_accuracy(m: u32, records: &[(u32, bool)]) -> std::result::Result<f64, String> {
    let names: Vec<String> = (0..m)
        .map(|i| format!("b{i}"))
        .chain(["d".to_owned()])
        .collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows: Vec<Vec<&str>> = records
        .iter()
        .map(|&(bits, label)| {
            (0..m)
                .map(|i| if bits & (1 << i) != 0 { "1" } else { "0" })
                .chain([if label { "yes" } else { "no" }])
                .collect()
        })
        .collect();
    let seq = EventSequence::from_symbols(&name_refs, &rows).map_err(|e| e.to_string())?;
    let ds = temporalise(&TemporalisationSpec::new(1, 1, "d").unwrap(), &seq)
        .map_err(|e| e.to_string())?;
    let rules = induce(&ds, &InduceConfig::default()).map_err(|e| e.to_string())?;
    evaluate(&rules, &ds).map_err(|e| e.to_string())
}

fn check_oracle(m: u32, records: &[(u32, bool)]) -> Outcome {
    let optimum = best_tree(records, (1 << m) - 1, m) as f64 / records.len() as f64;
    let got = fit_accuracy(m, records)?;
    ensure!(
        got == optimum,
        "m={m} records={records:?}: learner {got}, optimum {optimum}"
    );
    Ok(())
}

fn learner_oracle() -> Outcome {
    let mut checked = 0usize;
    // every labelled subset of the cube, each distinct vector at most once
    for m in 1..=3u32 {
        let cube = 1u32 << m;
        for subset in 1u32..(1 << cube) {
            let members: Vec<u32> = (0..cube).filter(|v| subset & (1 << v) != 0).collect();
            for labels in 0u32..(1 << members.len()) {
                let records: Vec<(u32, bool)> = members
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v, labels & (1 << i) != 0))
                    .collect();
                check_oracle(m, &records)?;
                checked += 1;
            }
        }
    }
    // four attributes: every labelling of the full cube ...
    for labels in 0u32..(1 << 16) {
        let records: Vec<(u32, bool)> = (0..16).map(|v| (v, labels & (1 << v) != 0)).collect();
        check_oracle(4, &records)?;
        checked += 1;
    }
    // ... and random noise-free datasets of up to 16 records, repeats allowed,
    // in random order
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20_000 {
        let m = rng.gen_range(1..=4u32);
        let labelling: u32 = rng.gen();
        let n = rng.gen_range(1..=16);
        let records: Vec<(u32, bool)> = (0..n)
            .map(|_| {
                let v = rng.gen_range(0..1u32 << m);
                (v, labelling & (1 << v) != 0)
            })
            .collect();
        check_oracle(m, &records)?;
        checked += 1;
    }
    ensure!(checked > 80_000, "only {checked} datasets checked");
    Ok(())
}

/// Definitions of the three competing kinds, evaluated directly on the
/// condition times of a rule set.
fn kinds_by_definition(t0: usize, times: &[usize]) -> Vec<RelationKind> {
    let mut kinds = Vec::new();
    if times.iter().all(|&t| t == t0) {
        kinds.push(RelationKind::Instantaneous);
    }
    if times.iter().all(|&t| t < t0) {
        kinds.push(RelationKind::PCausal);
    }
    if !times.contains(&t0) && times.iter().any(|&t| t > t0) {
        kinds.push(RelationKind::Acausal);
    }
    kinds
}

fn classification_exclusivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let attrs = ["p", "q", "r"];
    let mut tally = [0usize; 4];
    for case in 0..20_000 {
        let window = rng.gen_range(1..=5);
        let t0 = rng.gen_range(1..=window);
        let mut lines = Vec::new();
        let mut times = Vec::new();
        for _ in 0..rng.gen_range(1..=4) {
            let mut conds = Vec::new();
            for _ in 0..rng.gen_range(0..=4) {
                let attr = attrs[rng.gen_range(0..attrs.len())];
                let t = rng.gen_range(1..=window);
                if attr == "p" && t == t0 {
                    continue; // the decision itself is never a condition
                }
                let cond = format!("{attr}@t{t}={}", rng.gen_range(0..3));
                if conds
                    .iter()
                    .any(|c: &String| c.starts_with(&format!("{attr}@t{t}=")))
                {
                    continue;
                }
                conds.push(cond);
                times.push(t);
            }
            let lhs = if conds.is_empty() {
                "TRUE".to_owned()
            } else {
                conds.join(" AND ")
            };
            lines.push(format!("IF {lhs} THEN p@t{t0}={}", rng.gen_range(0..3)));
        }
        lines.push(format!("DEFAULT p@t{t0}=0"));
        let rs: RuleSet = lines
            .join("\n")
            .parse()
            .map_err(|e| format!("case {case}: {e}"))?;
        let by_def = kinds_by_definition(t0, &times);
        match classify_rule_set(&rs) {
            Err(_) => ensure!(
                times.is_empty(),
                "case {case}: unclassifiable with conditions\n{rs}"
            ),
            Ok(kind) => {
                ensure!(
                    !times.is_empty(),
                    "case {case}: classified without conditions"
                );
                ensure!(
                    by_def.len() <= 1,
                    "case {case}: definitions overlap: {by_def:?}"
                );
                let expected = by_def.first().copied().unwrap_or(RelationKind::Mixed);
                ensure!(
                    kind == expected,
                    "case {case}: got {kind}, definitions say {expected}\n{rs}"
                );
                tally[kind.simplicity_rank().map_or(3, usize::from)] += 1;
            }
        }
    }
    ensure!(
        tally.iter().sum::<usize>() >= 10_000,
        "only {} classified sets",
        tally.iter().sum::<usize>()
    );
    ensure!(
        tally.iter().all(|&n| n > 0),
        "some kind never generated: {tally:?}"
    );
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "1 four-record window fixture, all positions, bit-exact",
            table_fixture,
        ),
        (
            "2 robot walk: pos=w 100%, instantaneous <=35%, pos=1 in [40%,70%], p-causal",
            robot_verdict,
        ),
        (
            "3 robot walk: acausal test reclassified p-causal at 100%",
            robot_reclassification,
        ),
        (
            "4 relation selection worked example trace",
            worked_selection,
        ),
        (
            "5 periodic series: forward/backward 100%, overlap, acausal",
            periodic_acausal,
        ),
        (
            "6 generator run counts and temporalised shape counts",
            counting,
        ),
        (
            "7 uniform noise with threshold 0.9: no verdict (5 seeds)",
            no_verdict_on_noise,
        ),
        (
            "8 learner matches brute-force optimal tree accuracy",
            learner_oracle,
        ),
        (
            "9 rule-set classification exclusivity vs definitions",
            classification_exclusivity,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(()) => println!("PASS  criterion {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
