//! Repeated feedback loops per variant, for comparing convergence.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::{run_feedback_loop, CodeGenerator, FeedbackError, FeedbackVariant, LoopSettings};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExperimentRow {
    pub variant: String,
    pub attempt: usize,
    pub converged: bool,
    #[serde(rename = "iterations")]
    pub iterations_used: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentResult {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        if self.rows.is_empty() {
            w.write_record(["variant", "attempt", "converged", "iterations"])
                .expect("in-memory csv");
        }
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    /// Per variant: converged attempts binned by iteration count, plus an
    /// `"aborted"` bin for attempts that never converged.
    pub fn histogram(&self) -> serde_json::Value {
        let mut per: BTreeMap<&str, Vec<&ExperimentRow>> = BTreeMap::new();
        for r in &self.rows {
            per.entry(&r.variant).or_default().push(r);
        }
        let doc: serde_json::Map<String, serde_json::Value> = per
            .into_iter()
            .map(|(v, rows)| (v.to_string(), histogram(rows.iter().copied())))
            .collect();
        serde_json::Value::Object(doc)
    }
}

/// Bins rows by iteration count (numerically ordered keys).
pub fn histogram<'a>(rows: impl IntoIterator<Item = &'a ExperimentRow>) -> serde_json::Value {
    let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
    let mut aborted = 0;
    for r in rows {
        if r.converged {
            *bins.entry(r.iterations_used).or_default() += 1;
        } else {
            aborted += 1;
        }
    }
    let mut map = serde_json::Map::new();
    for (k, n) in bins {
        map.insert(k.to_string(), n.into());
    }
    if aborted > 0 {
        map.insert("aborted".into(), aborted.into());
    }
    serde_json::Value::Object(map)
}

/// Runs `attempts` loops per variant, each with a fresh generator and its own
/// run directory under `runs_root/<variant>/attempt-<k>`. After every attempt
/// the CSV at `csv_out` is rewritten, so it survives an early stop. Stops at
/// the first unavailable generator and returns the rows so far with the
/// error.
pub fn run_experiment(
    variants: &[FeedbackVariant],
    attempts: usize,
    make_generator: &mut dyn FnMut(FeedbackVariant, usize) -> Result<Box<dyn CodeGenerator>, FeedbackError>,
    base: &LoopSettings,
    runs_root: &Path,
    csv_out: &Path,
) -> (ExperimentResult, Option<FeedbackError>) {
    let mut result = ExperimentResult::default();
    let save = |result: &ExperimentResult| std::fs::write(csv_out, result.to_csv());
    if let Err(e) = save(&result) {
        return (result, Some(e.into()));
    }
    for &variant in variants {
        for attempt in 1..=attempts {
            let mut settings = base.clone();
            settings.variant = variant;
            settings.run_dir = runs_root.join(variant.name()).join(format!("attempt-{attempt}"));
            let outcome = make_generator(variant, attempt)
                .and_then(|mut g| run_feedback_loop(g.as_mut(), &settings));
            let outcome = match outcome {
                Ok(o) => o,
                Err(e) => return (result, Some(e)),
            };
            if let Some(msg) = outcome.aborted {
                return (result, Some(FeedbackError::GeneratorUnavailable(msg)));
            }
            result.rows.push(ExperimentRow {
                variant: variant.name().to_string(),
                attempt,
                converged: outcome.converged,
                iterations_used: outcome.iterations_used,
            });
            if let Err(e) = save(&result) {
                return (result, Some(e.into()));
            }
        }
    }
    (result, None)
}
