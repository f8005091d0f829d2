//! Renders the three feedback variants of one verification report, so the
//! information each variant adds can be compared side by side.
//!
//!     cargo run --example variant_reports -- faulty_cave_idle

use fclloop::am::{AmSpec, BuiltinKind};
use fclloop::fcl::bundled_constraints;
use fclloop::feedback::{render_report, FeedbackVariant};
use fclloop::sim::{default_suite, ScenarioConfig};
use fclloop::verify::run_suite;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "faulty_never_attack".into());
    let Some(kind) = BuiltinKind::from_name(&name) else {
        eprintln!("unknown builtin {name:?}");
        std::process::exit(2);
    };
    let constraints = bundled_constraints();
    let report = run_suite(
        &AmSpec::builtin(kind),
        &ScenarioConfig::default(),
        &default_suite(),
        &constraints,
        0,
    )
    .expect("default scenario is valid");

    for variant in FeedbackVariant::ALL {
        println!("===== {variant} =====");
        print!("{}", render_report(&report, &constraints, variant));
    }
}
