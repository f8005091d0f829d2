//! Generic (architectural and interface) checks on AM behaviour.
//!
//! Every step's assignment must be an exact partition of the alive villagers
//! over catalog ensembles, and every exchange with the AM must succeed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::trace::{AssignmentMap, EnsembleCatalog, EntityId, Termination, Trace};

/// Diagnostic text attached to a protocol failure is cut to this many
/// characters (the tail is kept).
pub const MAX_DIAGNOSTIC_CHARS: usize = 2000;

/// Prefix of the trace event that records why an episode was aborted.
pub const PROTOCOL_FAILURE_EVENT: &str = "protocol failure: ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum GenericCategory {
    ProtocolFailure,
    UnknownEnsemble,
    DuplicateAssignment,
    UnassignedComponent,
    UnknownComponent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenericViolation {
    pub category: GenericCategory,
    /// 0-based; `None` only for failures before the first step.
    pub step: Option<usize>,
    pub detail: String,
    /// Offending ensemble names and/or entity ids.
    pub evidence: Vec<String>,
}

impl GenericViolation {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "category": self.category,
            "step_1based": self.step.map(|s| s + 1),
            "detail": self.detail,
            "evidence": self.evidence,
        })
    }
}

impl fmt::Display for GenericViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detail)
    }
}

/// Checks one step's assignment against the villagers alive at that step.
pub fn check_assignment(
    step: usize,
    villagers: &[EntityId],
    assignment: &AssignmentMap,
    catalog: &EnsembleCatalog,
) -> Vec<GenericViolation> {
    let alive: BTreeSet<&EntityId> = villagers.iter().collect();
    let mut out = Vec::new();
    let mut placed: BTreeMap<&EntityId, Vec<&str>> = BTreeMap::new();
    let mut unknown_ids: BTreeSet<&EntityId> = BTreeSet::new();

    for (name, members) in assignment.iter() {
        let known = catalog.contains(name);
        if !known {
            out.push(GenericViolation {
                category: GenericCategory::UnknownEnsemble,
                step: Some(step),
                detail: format!("invalid ensemble name \"{name}\""),
                evidence: std::iter::once(name.clone())
                    .chain(members.iter().map(|m| m.to_string()))
                    .collect(),
            });
        }
        for m in members {
            if !alive.contains(m) {
                unknown_ids.insert(m);
            } else if known {
                placed.entry(m).or_default().push(name);
            }
        }
    }
    for (id, ensembles) in &placed {
        if ensembles.len() >= 2 {
            out.push(GenericViolation {
                category: GenericCategory::DuplicateAssignment,
                step: Some(step),
                detail: format!("component assigned twice: {id} is in {}", ensembles.join(" and ")),
                evidence: std::iter::once(id.to_string())
                    .chain(ensembles.iter().map(|e| e.to_string()))
                    .collect(),
            });
        }
    }
    for id in &alive {
        if !placed.contains_key(id) {
            out.push(GenericViolation {
                category: GenericCategory::UnassignedComponent,
                step: Some(step),
                detail: format!("component not assigned to any ensemble: {id}"),
                evidence: vec![id.to_string()],
            });
        }
    }
    for id in unknown_ids {
        out.push(GenericViolation {
            category: GenericCategory::UnknownComponent,
            step: Some(step),
            detail: format!("unknown component {id} (not an alive villager)"),
            evidence: vec![id.to_string()],
        });
    }
    out
}

/// What happened in one request/response exchange with the AM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExchangeOutcome {
    Assigned(AssignmentMap),
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exchange {
    pub step: usize,
    /// Villagers alive when the AM was asked.
    pub villagers: Vec<EntityId>,
    pub outcome: ExchangeOutcome,
}

/// Execution record of one episode: every AM exchange in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunLog {
    pub exchanges: Vec<Exchange>,
}

impl RunLog {
    /// Rebuilds the exchanges recorded in a trace. Every step except the last
    /// is a completed exchange; the last step is a terminal observation,
    /// unless the episode was aborted, in which case it is the failed one.
    pub fn from_trace(trace: &Trace) -> RunLog {
        let n = trace.len();
        let mut exchanges = Vec::with_capacity(n);
        for (i, rec) in trace.steps.iter().enumerate() {
            let villagers: Vec<EntityId> = rec.villagers().map(|e| e.id.clone()).collect();
            let is_last = i + 1 == n;
            if is_last && trace.terminated != Termination::AbortedProtocolError {
                break;
            }
            let outcome = if is_last {
                let reason = rec
                    .events
                    .iter()
                    .find_map(|e| e.strip_prefix(PROTOCOL_FAILURE_EVENT))
                    .unwrap_or("adaptation manager failed")
                    .to_string();
                ExchangeOutcome::Failed(reason)
            } else {
                ExchangeOutcome::Assigned(rec.assignment.clone())
            };
            exchanges.push(Exchange {
                step: i,
                villagers,
                outcome,
            });
        }
        RunLog { exchanges }
    }

    pub fn has_protocol_failure(&self) -> bool {
        self.exchanges
            .iter()
            .any(|e| matches!(e.outcome, ExchangeOutcome::Failed(_)))
    }
}

/// Keeps the last `max` characters.
pub fn truncate_diagnostic(text: &str, max: usize) -> String {
    let count = text.chars().count();
    if count <= max {
        return text.to_string();
    }
    let tail: String = text.chars().skip(count - max).collect();
    format!("...{tail}")
}

/// Generic violations of a whole episode, in step order.
pub fn check_run(log: &RunLog, catalog: &EnsembleCatalog) -> Vec<GenericViolation> {
    let mut out = Vec::new();
    for ex in &log.exchanges {
        match &ex.outcome {
            ExchangeOutcome::Failed(reason) => out.push(GenericViolation {
                category: GenericCategory::ProtocolFailure,
                step: Some(ex.step),
                detail: truncate_diagnostic(reason, MAX_DIAGNOSTIC_CHARS),
                evidence: vec![],
            }),
            ExchangeOutcome::Assigned(a) => {
                out.extend(check_assignment(ex.step, &ex.villagers, a, catalog))
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use GenericCategory::*;

    fn ids(xs: &[&str]) -> Vec<EntityId> {
        xs.iter().map(|s| EntityId::from(*s)).collect()
    }

    fn assign(pairs: &[(&str, &[&str])]) -> AssignmentMap {
        pairs.iter().map(|(k, v)| (*k, ids(v))).collect()
    }

    fn cats(v: &[GenericViolation]) -> Vec<GenericCategory> {
        v.iter().map(|x| x.category).collect()
    }

    #[test]
    fn exact_partition_is_clean() {
        let cat = EnsembleCatalog::dragon_hunt();
        let a = assign(&[("Farm", &["v1", "v2", "v3"]), ("GoToCave", &["v4"]), ("Attack", &[])]);
        assert!(check_assignment(0, &ids(&["v1", "v2", "v3", "v4"]), &a, &cat).is_empty());
    }

    #[test]
    fn duplicate_assignment() {
        let cat = EnsembleCatalog::dragon_hunt();
        let a = assign(&[("Farm", &["v1", "v2"]), ("Attack", &["v1", "v3", "v4"])]);
        let v = check_assignment(0, &ids(&["v1", "v2", "v3", "v4"]), &a, &cat);
        assert_eq!(cats(&v), vec![DuplicateAssignment]);
        assert_eq!(v[0].evidence, vec!["v1", "Attack", "Farm"]);
        assert!(v[0].detail.contains("assigned twice"));
    }

    #[test]
    fn unknown_ensemble_members_count_as_unassigned() {
        let cat = EnsembleCatalog::dragon_hunt();
        let a = assign(&[("Farm", &["v1", "v2"]), ("Defend", &["v3", "v4"])]);
        let v = check_assignment(2, &ids(&["v1", "v2", "v3", "v4"]), &a, &cat);
        assert_eq!(cats(&v), vec![UnknownEnsemble, UnassignedComponent, UnassignedComponent]);
        assert!(v[0].detail.contains("invalid ensemble name \"Defend\""));
        assert!(v.iter().all(|x| x.step == Some(2)));
    }

    #[test]
    fn unknown_components_and_the_dragon() {
        let cat = EnsembleCatalog::dragon_hunt();
        let a = assign(&[("Farm", &["v1", "v9"]), ("Attack", &["dragon"])]);
        let v = check_assignment(0, &ids(&["v1"]), &a, &cat);
        assert_eq!(cats(&v), vec![UnknownComponent, UnknownComponent]);
        assert_eq!(v[0].evidence, vec!["dragon"]);
    }

    #[test]
    fn run_level_checks() {
        let cat = EnsembleCatalog::dragon_hunt();
        let log = RunLog {
            exchanges: vec![
                Exchange {
                    step: 0,
                    villagers: ids(&["v1"]),
                    outcome: ExchangeOutcome::Assigned(assign(&[("Farm", &["v1"])])),
                },
                Exchange {
                    step: 1,
                    villagers: ids(&["v1"]),
                    outcome: ExchangeOutcome::Failed("x".repeat(5000)),
                },
            ],
        };
        let v = check_run(&log, &cat);
        assert_eq!(cats(&v), vec![ProtocolFailure]);
        assert_eq!(v[0].step, Some(1));
        assert_eq!(v[0].detail.chars().count(), MAX_DIAGNOSTIC_CHARS + 3);
        assert!(check_run(&RunLog::default(), &cat).is_empty());
    }
}
