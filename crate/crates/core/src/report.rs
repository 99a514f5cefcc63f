//! Human-readable and JSON renderings of a [`VerdictReport`].

use std::fmt::Write as _;

use crate::error::Result;
use crate::semantics::RelationKind;
use crate::verdict::{AccuracyMode, VerdictReport};

fn percent(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// The per-test table, the best outcome of each kind and the verdict line.
pub fn render_text(report: &VerdictReport, show_rules: bool) -> String {
    let spec = &report.spec;
    let mut out = String::new();
    let mode = match (report.predictive, spec.accuracy_mode) {
        (true, _) => format!(
            "predictive accuracy on the last {} records",
            spec.test_count
        ),
        (false, AccuracyMode::Predictive) => "training accuracy (no test records)".to_owned(),
        (false, AccuracyMode::Training) => "training accuracy".to_owned(),
    };
    let _ = writeln!(
        out,
        "Decision attribute {} | windows {}..{} | {} | confidence {} | threshold {}",
        spec.decision,
        spec.min_window,
        spec.max_window,
        mode,
        spec.confidence,
        spec.accuracy_threshold
    );
    let _ = writeln!(out);
    let row = |out: &mut String, cells: [&str; 7]| {
        let line = format!(
            "{:>4} {:>4} {:>8} {:>8} {:>6}  {:<14} {}",
            cells[0], cells[1], cells[2], cells[3], cells[4], cells[5], cells[6]
        );
        let _ = writeln!(out, "{}", line.trim_end());
    };
    row(
        &mut out,
        [
            "Win",
            "Pos",
            "T Acc",
            "P Acc",
            "Rules",
            "Type of test",
            "Actual rules",
        ],
    );
    let mut unconditioned = false;
    for o in &report.outcomes {
        let p_acc = o
            .eval
            .predictive_accuracy
            .map(percent)
            .unwrap_or_else(|| "-".to_owned());
        let mut actual = o.actual_kind.to_string();
        if !o.conditioned {
            actual.push('*');
            unconditioned = true;
        }
        row(
            &mut out,
            [
                &o.window.to_string(),
                &o.position.to_string(),
                &percent(o.eval.training_accuracy),
                &p_acc,
                &o.eval.rule_size.to_string(),
                o.declared_kind.as_str(),
                &actual,
            ],
        );
    }
    if unconditioned {
        let _ = writeln!(
            out,
            "* no rule has a condition; counted as the kind the test was run for"
        );
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "Best per kind:");
    for kind in RelationKind::COMPETING {
        match report.best_of(kind) {
            Some(b) => {
                let _ = writeln!(
                    out,
                    "  {:<14} w={} pos={}  accuracy {}  rules {}  interval [{:.4}, {:.4}] (n={})",
                    kind.to_string(),
                    b.window,
                    b.position,
                    percent(b.accuracy),
                    b.rule_size,
                    b.interval.lo,
                    b.interval.hi,
                    b.evaluation_size
                );
            }
            None => {
                let _ = writeln!(out, "  {:<14} no qualifying rule set", kind.to_string());
            }
        }
    }
    if let Some(sel) = &report.selection {
        let names = |ks: &[RelationKind]| {
            ks.iter()
                .map(|k| k.as_str())
                .collect::<Vec<_>>()
                .join(" -> ")
        };
        let _ = writeln!(out, "Comparison order: {}", names(&sel.order));
        let _ = writeln!(out, "Winner after each step: {}", names(&sel.trace));
    }
    let _ = writeln!(out, "Rule generator runs: {}", report.rule_generator_runs);

    if show_rules {
        for o in &report.outcomes {
            let _ = writeln!(out);
            let _ = writeln!(out, "Rules for w={} pos={}:", o.window, o.position);
            let _ = write!(out, "{}", o.rules);
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{}", report.verdict_line());
    out
}

pub fn render_json(reports: &[VerdictReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}
