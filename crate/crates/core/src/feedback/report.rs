//! Plain-text verification reports handed back to the code generator.
//!
//! Each richer variant only adds lines, so a FullConstraint report contains
//! every line of the GenericOnly report, which contains every line of the
//! MetricsOnly report.

use super::FeedbackVariant;
use crate::eval::{Counterexample, Verdict};
use crate::fcl::{render_formula, Constraint};
use crate::generic::{GenericCategory, GenericViolation};
use crate::trace::Trace;
use crate::verify::{RunResult, SuiteReport};

/// Bullets per report, metrics included; overflow becomes a "+N more" line.
pub const MAX_REPORT_BULLETS: usize = 60;
pub const MAX_GENERIC_PER_RUN: usize = 25;
pub const MAX_EXCERPTS_PER_BULLET: usize = 3;

fn run_label(run: &RunResult) -> String {
    format!("run #{} (seed {})", run.index, run.seed)
}

pub fn metrics_bullet(run: &RunResult) -> String {
    let m = &run.metrics;
    format!(
        "- {}: {}, dragon HP {}, steps {}, wheat {}",
        run_label(run),
        if m.win { "win" } else { "loss" },
        m.dragon_hp_end,
        m.steps_survived,
        m.wheat_end
    )
}

fn generic_bullet(run: &RunResult, v: &GenericViolation) -> String {
    let at = match v.step {
        Some(s) => format!("{}, step {}", run_label(run), s + 1),
        None => run_label(run),
    };
    match v.category {
        GenericCategory::ProtocolFailure => {
            let mut lines = v.detail.lines();
            let mut out = format!("- {at}: protocol failure: {}", lines.next().unwrap_or(""));
            for l in lines {
                out.push_str("\n    ");
                out.push_str(l);
            }
            out
        }
        GenericCategory::UnknownEnsemble if v.evidence.len() > 1 => {
            format!("- {at}: {} (members: {})", v.detail, v.evidence[1..].join(", "))
        }
        _ => format!("- {at}: {}", v.detail),
    }
}

fn generic_bullets(report: &SuiteReport) -> Vec<String> {
    let mut out = Vec::new();
    for run in &report.runs {
        for v in run.generic.iter().take(MAX_GENERIC_PER_RUN) {
            out.push(generic_bullet(run, v));
        }
        if run.generic.len() > MAX_GENERIC_PER_RUN {
            out.push(format!(
                "- {}: +{} more generic violations",
                run_label(run),
                run.generic.len() - MAX_GENERIC_PER_RUN
            ));
        }
    }
    out
}

fn witness_text(trace: &Trace, cx: &Counterexample) -> Vec<String> {
    cx.witnesses
        .iter()
        .map(|(var, id)| {
            let role = trace
                .steps
                .get(cx.anchor_step)
                .and_then(|s| s.entity(id.as_str()))
                .and_then(|e| e.role);
            match role {
                Some(r) => format!("{var} = {id} ({})", r.as_str()),
                None => format!("{var} = {id}"),
            }
        })
        .collect()
}

fn counterexample_bullet(run: &RunResult, gloss: &str, cx: &Counterexample) -> String {
    let mut out = format!("- {} [{}]", run_label(run), cx.constraint_name);
    if !gloss.is_empty() {
        out.push(' ');
        out.push_str(gloss);
    }
    out.push_str(&format!(" Checked at step {}: ", cx.anchor_step + 1));
    let witnesses = witness_text(&run.trace, cx);
    if !witnesses.is_empty() {
        out.push_str(&format!("witness {}; ", witnesses.join(", ")));
    }
    let body = render_formula(&cx.body);
    if cx.from_window {
        let (lo, hi) = cx.window_1based();
        out.push_str(&format!(
            "`{body}` over steps {lo}..{hi}, found {} of {} (deficit {}).",
            cx.achieved,
            cx.required,
            cx.deficit()
        ));
    } else {
        out.push_str(&format!("`{body}` does not hold."));
    }
    let evidence: Vec<String> = cx
        .excerpts
        .iter()
        .take(MAX_EXCERPTS_PER_BULLET)
        .map(|e| format!("step {}: {} = {}", e.step + 1, e.subject, e.value))
        .collect();
    if !evidence.is_empty() {
        out.push_str(&format!(" Evidence: {}.", evidence.join("; ")));
    }
    out
}

fn functional_bullets(report: &SuiteReport, constraints: &[Constraint]) -> Vec<String> {
    let gloss_of = |name: &str| {
        constraints
            .iter()
            .find(|c| c.name == name)
            .and_then(|c| c.gloss.clone())
            .unwrap_or_default()
    };
    let mut out = Vec::new();
    for run in &report.runs {
        for v in run.functional.iter().flatten().filter(|v| !v.satisfied) {
            out.extend(verdict_bullets(run, v, &gloss_of(&v.constraint_name)));
        }
    }
    out
}

fn verdict_bullets(run: &RunResult, v: &Verdict, gloss: &str) -> Vec<String> {
    if let Some(err) = &v.error {
        return vec![format!(
            "- {} [{}] could not be evaluated: {err}",
            run_label(run),
            v.constraint_name
        )];
    }
    let mut out: Vec<String> = v
        .violations
        .iter()
        .map(|cx| counterexample_bullet(run, gloss, cx))
        .collect();
    if v.omitted > 0 {
        out.push(format!(
            "- {} [{}]: +{} more violating steps",
            run_label(run),
            v.constraint_name,
            v.omitted
        ));
    }
    out
}

/// Renders the report for `variant`. `constraints` supplies the glosses.
pub fn render_report(report: &SuiteReport, constraints: &[Constraint], variant: FeedbackVariant) -> String {
    let mut lines = Vec::new();
    let total = report.runs.len();
    if report.accepted() {
        lines.push(format!("Verification passed on all {total} test runs."));
    } else {
        let failed = report.runs.iter().filter(|r| !r.accepted()).count();
        lines.push(format!("Verification failed on {failed} of {total} test runs."));
    }
    lines.push("Run outcomes:".to_string());
    lines.extend(report.runs.iter().map(metrics_bullet));
    let mut budget = MAX_REPORT_BULLETS.saturating_sub(total);

    let mut section = |lines: &mut Vec<String>, title: &str, kind: &str, bullets: Vec<String>| {
        if bullets.is_empty() {
            return;
        }
        lines.push(title.to_string());
        let shown = bullets.len().min(budget);
        lines.extend(bullets[..shown].iter().cloned());
        if bullets.len() > shown {
            lines.push(format!("- +{} more {kind} violations", bullets.len() - shown));
        }
        budget -= shown;
    };
    if variant >= FeedbackVariant::GenericOnly {
        section(
            &mut lines,
            "Architectural and interface violations:",
            "generic",
            generic_bullets(report),
        );
    }
    if variant >= FeedbackVariant::FullConstraint {
        section(
            &mut lines,
            "Functional constraint violations:",
            "functional",
            functional_bullets(report, constraints),
        );
    }
    let mut text = lines.join("\n");
    text.push('\n');
    text
}
