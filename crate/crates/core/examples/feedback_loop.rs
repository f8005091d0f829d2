//! Drives the repair loop with a replay generator and prints each
//! iteration's report. Artifacts land in the given run directory.
//!
//!     cargo run --example feedback_loop -- crates/core/fixtures/replay/seq3 full /tmp/run

use std::path::PathBuf;

use fclloop::fcl::bundled_constraints;
use fclloop::feedback::{run_feedback_loop, FeedbackVariant, LoopSettings, ReplayGenerator, ScenarioDocs};
use fclloop::sim::{default_suite, ScenarioConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let replay = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay/seq3"));
    let variant: FeedbackVariant = args.next().as_deref().unwrap_or("full").parse().unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    let run_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("fclloop-loop-{}", std::process::id())));

    let mut settings = LoopSettings::new(
        ScenarioDocs::new(ScenarioConfig::default()),
        default_suite(),
        bundled_constraints(),
        run_dir.clone(),
    );
    settings.variant = variant;
    let mut generator = ReplayGenerator::new(&replay).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    let outcome = run_feedback_loop(&mut generator, &settings).expect("loop runs");
    for it in &outcome.history {
        println!("----- iteration {} ({}) -----", it.index, if it.accepted { "accepted" } else { "rejected" });
        print!("{}", it.report_text);
    }
    println!(
        "converged: {}, iterations: {}, artifacts: {}",
        outcome.converged,
        outcome.iterations_used,
        run_dir.display()
    );
}
