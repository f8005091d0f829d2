//! Runs one Dragon Hunt episode with a builtin AM and prints the event log
//! step by step, then the metrics.
//!
//!     cargo run --example simulate_episode -- reference_good 5

use fclloop::am::{BuiltinAm, BuiltinKind, PolicyRules};
use fclloop::sim::{run_episode, ScenarioConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "reference_good".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let kind = BuiltinKind::from_name(&name).unwrap_or_else(|| {
        eprintln!("unknown builtin {name:?}");
        std::process::exit(2);
    });
    let config = ScenarioConfig::default();
    let mut am = BuiltinAm::new(kind, PolicyRules::from(&config));
    let ep = run_episode(&mut am, &config, seed).expect("default scenario is valid");

    for step in &ep.trace.steps {
        let ensembles: Vec<String> = step
            .assignment
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(k, m)| format!("{k}={}", m.iter().map(|i| i.as_str()).collect::<Vec<_>>().join(",")))
            .collect();
        println!(
            "step {:>2}  dragon {:>3}  wheat {:>3}  villagers {}  [{}]",
            step.index + 1,
            step.env.dragon_hp,
            step.env.wheat,
            step.villagers().count(),
            ensembles.join(" ")
        );
        for e in &step.events {
            println!("          {e}");
        }
    }
    println!("{} {}", ep.trace.terminated.as_str(), serde_json::to_string(&ep.metrics).unwrap());
}
