//! Layered verification of an AM over a suite of episodes.
//!
//! Generic checks run first; functional constraints are evaluated only on
//! runs without generic violations.

use rayon::prelude::*;
use serde_json::json;

use crate::am::{spawn_am, AdaptationManager, AmSpec, PolicyRules, UnavailableAm};
use crate::eval::{eval_constraints, Verdict};
use crate::fcl::{Catalog, Constraint};
use crate::generic::{check_run, GenericViolation, RunLog};
use crate::sim::{compute_metrics, run_episode, Metrics, ScenarioConfig, SimError, SuiteEntry};
use crate::trace::Trace;

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// 1-based position in the suite.
    pub index: usize,
    pub seed: u64,
    pub trace: Trace,
    pub metrics: Metrics,
    pub generic: Vec<GenericViolation>,
    /// `None` when generic violations kept the functional layer from running.
    pub functional: Option<Vec<Verdict>>,
}

impl RunResult {
    pub fn accepted(&self) -> bool {
        self.generic.is_empty()
            && self
                .functional
                .as_ref()
                .is_some_and(|vs| vs.iter().all(|v| v.satisfied))
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "run": self.index,
            "seed": self.seed,
            "terminated": self.trace.terminated.as_str(),
            "accepted": self.accepted(),
            "metrics": self.metrics,
            "generic": self.generic.iter().map(GenericViolation::to_json).collect::<Vec<_>>(),
            "functional": self.functional.as_ref().map(|vs| vs.iter().map(Verdict::to_json).collect::<Vec<_>>()),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub runs: Vec<RunResult>,
}

impl SuiteReport {
    /// No generic violations and every constraint satisfied, on every run.
    pub fn accepted(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(RunResult::accepted)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "accepted": self.accepted(),
            "runs": self.runs.iter().map(RunResult::to_json).collect::<Vec<_>>(),
        })
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Layered checks on one recorded episode.
pub fn check_episode(
    index: usize,
    trace: Trace,
    run_log: &RunLog,
    constraints: &[Constraint],
    catalog: &Catalog,
) -> Result<RunResult, SimError> {
    let metrics = compute_metrics(&trace)?;
    let generic = check_run(run_log, &catalog.ensembles);
    let functional = generic
        .is_empty()
        .then(|| eval_constraints(&trace, catalog, constraints));
    Ok(RunResult {
        index,
        seed: trace.seed,
        trace,
        metrics,
        generic,
        functional,
    })
}

/// Verifies a stored trace; the AM exchanges are recovered from the trace.
pub fn verify_trace(trace: Trace, constraints: &[Constraint], catalog: &Catalog) -> Result<RunResult, SimError> {
    let log = RunLog::from_trace(&trace);
    check_episode(1, trace, &log, constraints, catalog)
}

/// Runs and checks every suite entry with a fresh AM each, using up to
/// `parallelism` threads (0 means one per CPU).
pub fn run_suite(
    spec: &AmSpec,
    base: &ScenarioConfig,
    suite: &[SuiteEntry],
    constraints: &[Constraint],
    parallelism: usize,
) -> Result<SuiteReport, SimError> {
    let catalog = Catalog::dragon_hunt();
    let run_one = |(i, entry): (usize, &SuiteEntry)| -> Result<RunResult, SimError> {
        let config = entry.config(base);
        let mut am: Box<dyn AdaptationManager> = match spawn_am(spec, PolicyRules::from(&config)) {
            Ok(am) => am,
            Err(e) => Box::new(UnavailableAm::new(e.to_string())),
        };
        let ep = run_episode(am.as_mut(), &config, entry.seed)?;
        check_episode(i + 1, ep.trace, &ep.run_log, constraints, &catalog)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .expect("thread pool");
    let runs = pool.install(|| {
        suite
            .par_iter()
            .enumerate()
            .map(run_one)
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(SuiteReport { runs })
}
