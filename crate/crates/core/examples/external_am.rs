//! Runs a Python adaptation manager as a subprocess over the default suite.
//! Without an argument, the Python mirror of the reference AM is written to
//! a temporary file and used.
//!
//!     cargo run --example external_am
//!     cargo run --example external_am -- path/to/am.py

use fclloop::am::{mirror_source, AmSpec, BuiltinKind, PolicyRules, DEFAULT_COMMAND};
use fclloop::fcl::bundled_constraints;
use fclloop::feedback::{render_report, FeedbackVariant};
use fclloop::sim::{default_suite, ScenarioConfig};
use fclloop::verify::run_suite;

fn main() {
    let config = ScenarioConfig::default();
    let tmp = tempfile::tempdir().expect("temp dir is writable");
    let source = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let p = tmp.path().join("am.py");
            std::fs::write(&p, mirror_source(BuiltinKind::ReferenceGood, PolicyRules::from(&config)))
                .expect("temp dir is writable");
            p
        }
    };
    let spec = AmSpec::external(DEFAULT_COMMAND, &source);
    println!("running {}", spec.describe());
    let constraints = bundled_constraints();
    let report = run_suite(&spec, &config, &default_suite(), &constraints, 0).expect("default scenario is valid");
    print!("{}", render_report(&report, &constraints, FeedbackVariant::FullConstraint));
}
