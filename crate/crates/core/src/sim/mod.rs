//! Deterministic Dragon Hunt simulator.
//!
//! Each step the simulator snapshots the state, asks the AM for an
//! assignment, records both, then applies the effects. A trace therefore
//! shows what the AM saw next to what it decided. The final step of a
//! finished episode is a terminal snapshot with no assignment.

mod config;
mod state;

use serde::Serialize;
use thiserror::Error;

pub use config::{default_suite, ScenarioConfig, SuiteEntry, VillagerSpec};
pub use state::{apply_effects, init_state, SimState};

use crate::am::{AdaptationManager, ResolveRequest, StateView, VillagerView};
use crate::generic::{Exchange, ExchangeOutcome, RunLog, PROTOCOL_FAILURE_EVENT};
use crate::trace::{EnsembleCatalog, Termination, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("trace has no steps")]
    EmptyTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub win: bool,
    /// Clamped at zero.
    pub dragon_hp_end: i64,
    pub steps_survived: usize,
    pub wheat_end: u64,
}

pub fn compute_metrics(trace: &Trace) -> Result<Metrics, SimError> {
    let last = trace.last().ok_or(SimError::EmptyTrace)?;
    Ok(Metrics {
        win: trace.terminated == Termination::Win,
        dragon_hp_end: last.env.dragon_hp.max(0),
        steps_survived: trace.len(),
        wheat_end: last.env.wheat,
    })
}

/// Everything one episode produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub trace: Trace,
    pub run_log: RunLog,
    pub metrics: Metrics,
}

/// The request the AM receives for the current state.
pub fn state_view(state: &SimState, catalog: &EnsembleCatalog) -> StateView {
    StateView {
        villagers: state
            .villagers
            .values()
            .map(|v| VillagerView {
                id: v.id.to_string(),
                role: v.role.expect("villagers have roles"),
                location: v.location.expect("villagers have locations"),
                hp: v.hp,
            })
            .collect(),
        wheat: state.wheat,
        dragon_hp: state.dragon_hp,
        ensembles: catalog.names().to_vec(),
    }
}

/// Runs one episode to termination. The AM is shut down afterwards.
pub fn run_episode(
    am: &mut dyn AdaptationManager,
    config: &ScenarioConfig,
    seed: u64,
) -> Result<Episode, SimError> {
    let catalog = EnsembleCatalog::dragon_hunt();
    let (mut state, mut rng) = init_state(config, seed)?;
    let mut steps = Vec::new();
    let mut exchanges = Vec::new();
    let mut terminated = Termination::LossHorizon;

    for i in 0..config.horizon {
        let mut rec = state.snapshot(i);
        let end = if !state.dragon_alive() {
            Some((Termination::Win, "the Dragon is dead: win"))
        } else if state.villagers.is_empty() {
            Some((Termination::LossAllDead, "no villagers left: loss"))
        } else if i + 1 == config.horizon {
            Some((Termination::LossHorizon, "horizon reached: loss"))
        } else {
            None
        };
        if let Some((how, event)) = end {
            rec.events.push(event.to_string());
            steps.push(rec);
            terminated = how;
            break;
        }

        let villagers = rec.villagers().map(|v| v.id.clone()).collect();
        let request = ResolveRequest::new(i, state_view(&state, &catalog));
        match am.resolve(&request) {
            Ok(response) => {
                rec.events = apply_effects(config, &mut state, &response.assignment, &mut rng);
                exchanges.push(Exchange {
                    step: i,
                    villagers,
                    outcome: ExchangeOutcome::Assigned(response.assignment.clone()),
                });
                rec.assignment = response.assignment;
                steps.push(rec);
            }
            Err(e) => {
                let reason = e.to_string();
                rec.events.push(format!("{PROTOCOL_FAILURE_EVENT}{reason}"));
                exchanges.push(Exchange {
                    step: i,
                    villagers,
                    outcome: ExchangeOutcome::Failed(reason),
                });
                steps.push(rec);
                terminated = Termination::AbortedProtocolError;
                break;
            }
        }
    }
    am.shutdown();

    let trace = Trace {
        seed,
        terminated,
        steps,
    };
    let metrics = compute_metrics(&trace)?;
    Ok(Episode {
        trace,
        run_log: RunLog { exchanges },
        metrics,
    })
}
