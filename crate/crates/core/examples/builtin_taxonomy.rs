//! Runs every builtin AM over the default suite and shows which
//! verification layer flags it.
//!
//!     cargo run --example builtin_taxonomy

use std::collections::BTreeSet;

use fclloop::am::{AmSpec, BuiltinKind};
use fclloop::fcl::bundled_constraints;
use fclloop::sim::{default_suite, ScenarioConfig};
use fclloop::verify::run_suite;

fn main() {
    let constraints = bundled_constraints();
    for kind in BuiltinKind::ALL {
        let report = run_suite(
            &AmSpec::builtin(kind),
            &ScenarioConfig::default(),
            &default_suite(),
            &constraints,
            0,
        )
        .expect("default scenario is valid");

        let generic: BTreeSet<String> = report
            .runs
            .iter()
            .flat_map(|r| r.generic.iter().map(|g| format!("{:?}", g.category)))
            .collect();
        let functional: BTreeSet<&str> = report
            .runs
            .iter()
            .flat_map(|r| r.functional.iter().flatten())
            .filter(|v| !v.satisfied)
            .map(|v| v.constraint_name.as_str())
            .collect();
        let outcomes: Vec<String> = report
            .runs
            .iter()
            .map(|r| format!("{}@{}", r.trace.terminated.as_str(), r.metrics.steps_survived))
            .collect();

        println!("{:<28} accepted={}", kind.name(), report.accepted());
        println!("    outcomes:   {}", outcomes.join(", "));
        println!("    generic:    {generic:?}");
        println!("    functional: {functional:?}");
    }
}
