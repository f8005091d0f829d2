use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{
    build_prompt, extract_code, render_report, CodeGenerator, FeedbackError, FeedbackVariant,
    PromptTemplate, ScenarioDocs,
};
use crate::am::{AmSpec, DEFAULT_COMMAND};
use crate::eval::Verdict;
use crate::fcl::Constraint;
use crate::generic::GenericViolation;
use crate::sim::{Metrics, SuiteEntry};
use crate::verify::{run_suite, SuiteReport};

pub const DEFAULT_MAX_ITERATIONS: usize = 10;

#[derive(Clone, Debug)]
pub struct LoopSettings {
    pub template: PromptTemplate,
    pub docs: ScenarioDocs,
    pub suite: Vec<SuiteEntry>,
    pub constraints: Vec<Constraint>,
    pub variant: FeedbackVariant,
    pub max_iterations: usize,
    /// How generated sources are run; contains `{source}`.
    pub am_command: String,
    pub parallelism: usize,
    /// Receives `iter-<k>/` directories and `outcome.json`.
    pub run_dir: PathBuf,
}

impl LoopSettings {
    pub fn new(docs: ScenarioDocs, suite: Vec<SuiteEntry>, constraints: Vec<Constraint>, run_dir: PathBuf) -> Self {
        Self {
            template: PromptTemplate::default_template(),
            docs,
            suite,
            constraints,
            variant: FeedbackVariant::FullConstraint,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            am_command: DEFAULT_COMMAND.to_string(),
            parallelism: 0,
            run_dir,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub index: usize,
    pub am_source: String,
    /// Per suite run.
    pub generic: Vec<Vec<GenericViolation>>,
    /// Per suite run; `None` where generic violations gated the run.
    pub functional: Vec<Option<Vec<Verdict>>>,
    pub metrics: Vec<Metrics>,
    pub report_text: String,
    pub accepted: bool,
}

impl IterationRecord {
    fn from_report(index: usize, am_source: String, report: &SuiteReport, report_text: String) -> Self {
        Self {
            index,
            am_source,
            generic: report.runs.iter().map(|r| r.generic.clone()).collect(),
            functional: report.runs.iter().map(|r| r.functional.clone()).collect(),
            metrics: report.runs.iter().map(|r| r.metrics).collect(),
            report_text,
            accepted: report.accepted(),
        }
    }

    fn summary_json(&self) -> serde_json::Value {
        let functional_violations: usize = self
            .functional
            .iter()
            .flatten()
            .flatten()
            .filter(|v| !v.satisfied)
            .count();
        json!({
            "iteration": self.index,
            "accepted": self.accepted,
            "metrics": self.metrics,
            "generic_violations": self.generic.iter().map(Vec::len).sum::<usize>(),
            "functional_violations": functional_violations,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopOutcome {
    pub converged: bool,
    pub iterations_used: usize,
    pub max_iterations: usize,
    pub variant: FeedbackVariant,
    pub history: Vec<IterationRecord>,
    /// Set when the generator became unavailable; the history is partial.
    pub aborted: Option<String>,
}

impl LoopOutcome {
    pub fn to_json_string(&self) -> String {
        let doc = json!({
            "variant": self.variant.name(),
            "max_iterations": self.max_iterations,
            "converged": self.converged,
            "iterations_used": self.iterations_used,
            "aborted": self.aborted,
            "history": self.history.iter().map(IterationRecord::summary_json).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("outcome serializes");
        s.push('\n');
        s
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), FeedbackError> {
    fs::write(dir.join(name), text).map_err(|e| FeedbackError::Io(format!("{}: {e}", dir.join(name).display())))
}

/// Runs generate, verify, repair until the AM is accepted or
/// `max_iterations` generator calls were made. Every prompt, response,
/// source, trace and report is written under `settings.run_dir`.
pub fn run_feedback_loop(
    generator: &mut dyn CodeGenerator,
    settings: &LoopSettings,
) -> Result<LoopOutcome, FeedbackError> {
    if settings.suite.is_empty() {
        return Err(FeedbackError::Config("the verification suite is empty".into()));
    }
    fs::create_dir_all(&settings.run_dir)?;
    let mut outcome = LoopOutcome {
        converged: false,
        iterations_used: 0,
        max_iterations: settings.max_iterations,
        variant: settings.variant,
        history: vec![],
        aborted: None,
    };
    let mut last_report: Option<String> = None;

    for k in 1..=settings.max_iterations {
        let dir = settings.run_dir.join(format!("iter-{k}"));
        fs::create_dir_all(&dir)?;
        let prompt = build_prompt(
            &settings.template,
            &settings.docs,
            &settings.constraints,
            last_report.as_deref(),
        )?;
        write(&dir, "prompt.txt", &prompt)?;
        let response = match generator.generate(&prompt) {
            Ok(r) => r,
            Err(FeedbackError::GeneratorUnavailable(msg)) => {
                log::error!("iteration {k}: generator unavailable: {msg}");
                outcome.aborted = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        write(&dir, "response.txt", &response)?;
        let source = extract_code(&response);
        write(&dir, "am.src", &source)?;

        let spec = AmSpec::external(settings.am_command.clone(), dir.join("am.src"))
            .with_timeout_ms(settings.docs.step_timeout_ms);
        let report = run_suite(
            &spec,
            &settings.docs.config,
            &settings.suite,
            &settings.constraints,
            settings.parallelism,
        )?;
        for run in &report.runs {
            write(&dir, &format!("run-{}.trace.json", run.index), &run.trace.to_json())?;
        }
        let mut report_json = report.to_json();
        report_json["variant"] = json!(settings.variant.name());
        let mut report_json = serde_json::to_string_pretty(&report_json).expect("report serializes");
        report_json.push('\n');
        write(&dir, "report.json", &report_json)?;
        let text = render_report(&report, &settings.constraints, settings.variant);
        write(&dir, "report.txt", &text)?;

        let record = IterationRecord::from_report(k, source, &report, text.clone());
        let accepted = record.accepted;
        log::info!("iteration {k}: {}", if accepted { "accepted" } else { "rejected" });
        outcome.history.push(record);
        outcome.iterations_used = k;
        if accepted {
            outcome.converged = true;
            break;
        }
        last_report = Some(text);
    }
    write(&settings.run_dir, "outcome.json", &outcome.to_json_string())?;
    Ok(outcome)
}
