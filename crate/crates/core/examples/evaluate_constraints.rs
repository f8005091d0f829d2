//! Evaluates the bundled constraints on one simulated trace and prints each
//! verdict with its counterexamples as JSON.
//!
//!     cargo run --example evaluate_constraints -- faulty_cave_idle 2

use fclloop::am::{BuiltinAm, BuiltinKind, PolicyRules};
use fclloop::eval::eval_constraints;
use fclloop::fcl::{bundled_constraints, Catalog};
use fclloop::sim::{run_episode, ScenarioConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "faulty_cave_idle".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let kind = BuiltinKind::from_name(&name).unwrap_or_else(|| {
        eprintln!("unknown builtin {name:?}");
        std::process::exit(2);
    });
    let config = ScenarioConfig::default();
    let mut am = BuiltinAm::new(kind, PolicyRules::from(&config));
    let episode = run_episode(&mut am, &config, seed).expect("default scenario is valid");

    for v in eval_constraints(&episode.trace, &Catalog::dragon_hunt(), &bundled_constraints()) {
        let verdict = if v.satisfied { "holds" } else { "VIOLATED" };
        println!("{:<26} {verdict}", v.constraint_name);
        for cx in &v.violations {
            println!("{}", serde_json::to_string_pretty(&cx.to_json()).unwrap());
        }
        if v.omitted > 0 {
            println!("  (+{} more violating steps)", v.omitted);
        }
    }
}
