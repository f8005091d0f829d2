//! Runs a small convergence experiment with replayed generators and prints
//! the CSV and histogram. With a reachable chat-completion endpoint the
//! same comparison runs through `fclloop experiment --generator http`.
//!
//!     cargo run --example experiment

use std::path::PathBuf;

use fclloop::fcl::bundled_constraints;
use fclloop::feedback::{
    run_experiment, CodeGenerator, FeedbackError, FeedbackVariant, LoopSettings, ReplayGenerator, ScenarioDocs,
};
use fclloop::sim::{default_suite, ScenarioConfig};

fn main() {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay");
    let root = std::env::temp_dir().join(format!("fclloop-experiment-{}", std::process::id()));
    std::fs::create_dir_all(&root).expect("temp dir is writable");

    let base = LoopSettings::new(
        ScenarioDocs::new(ScenarioConfig::default()),
        default_suite(),
        bundled_constraints(),
        PathBuf::new(),
    );
    // Metrics-only feedback gets the stalling replay, full feedback the repair sequence.
    let mut make = |v: FeedbackVariant, _attempt: usize| -> Result<Box<dyn CodeGenerator>, FeedbackError> {
        let dir = if v == FeedbackVariant::MetricsOnly { "stall" } else { "seq3" };
        Ok(Box::new(ReplayGenerator::new(fixtures.join(dir))?))
    };
    let csv = root.join("results.csv");
    let variants = [FeedbackVariant::MetricsOnly, FeedbackVariant::FullConstraint];
    let (result, err) = run_experiment(&variants, 2, &mut make, &base, &root.join("runs"), &csv);
    if let Some(e) = err {
        eprintln!("stopped early: {e}");
    }
    print!("{}", result.to_csv());
    println!("{}", serde_json::to_string_pretty(&result.histogram()).unwrap());
    println!("run directories under {}", root.display());
}
