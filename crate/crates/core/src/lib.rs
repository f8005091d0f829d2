//! Runtime verification of adaptation managers for collective adaptive
//! systems, and a feedback loop that repairs generated managers.
//!
//! The pieces, bottom up:
//! - [`trace`]: per-step records of entities, environment and assignments.
//! - [`fcl`]: the windowed temporal constraint language (parser, printer).
//! - [`eval`]: constraint evaluation with counterexamples.
//! - [`generic`]: architectural checks on every assignment and exchange.
//! - [`sim`]: the seeded Dragon Hunt simulator.
//! - [`am`]: builtin and subprocess adaptation managers.
//! - [`verify`]: layered checks over a suite of episodes.
//! - [`feedback`]: prompts, reports, code generators and the repair loop.
//! - [`cli`]: the `fclloop` command.

pub mod am;
pub mod cli;
pub mod config;
pub mod eval;
pub mod fcl;
pub mod feedback;
pub mod generic;
pub mod rng;
pub mod sim;
pub mod trace;
pub mod verify;
