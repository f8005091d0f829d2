//! Runs the architectural checks on a few hand-written assignments and on
//! the exchange log of a faulty AM.
//!
//!     cargo run --example generic_checks

use fclloop::am::{BuiltinAm, BuiltinKind, PolicyRules};
use fclloop::generic::{check_assignment, check_run};
use fclloop::sim::{run_episode, ScenarioConfig};
use fclloop::trace::{AssignmentMap, EntityId, EnsembleCatalog};

fn assignment(pairs: &[(&str, &[&str])]) -> AssignmentMap {
    let mut a = AssignmentMap::new();
    for (ens, ids) in pairs {
        a.touch(*ens);
        for id in *ids {
            a.insert(*ens, EntityId::new(*id));
        }
    }
    a
}

fn main() {
    let catalog = EnsembleCatalog::dragon_hunt();
    let villagers: Vec<EntityId> = ["v1", "v2", "v3"].map(EntityId::new).to_vec();
    let cases: [(&str, AssignmentMap); 4] = [
        ("partition", assignment(&[("Farm", &["v1", "v2"]), ("Attack", &["v3"])])),
        ("duplicate", assignment(&[("Farm", &["v1", "v2", "v3"]), ("Attack", &["v3"])])),
        ("unknown ensemble", assignment(&[("Farm", &["v1", "v2"]), ("Defend", &["v3"])])),
        ("missing and foreign", assignment(&[("Farm", &["v1", "dragon"])])),
    ];
    for (label, a) in &cases {
        let found = check_assignment(0, &villagers, a, &catalog);
        println!("{label}: {} violation(s)", found.len());
        for v in found {
            println!("  {:?}: {}", v.category, v.detail);
        }
    }

    let config = ScenarioConfig::default();
    let mut am = BuiltinAm::new(BuiltinKind::FaultyUnknownEnsemble, PolicyRules::from(&config));
    let ep = run_episode(&mut am, &config, 1).expect("default scenario is valid");
    let found = check_run(&ep.run_log, &catalog);
    println!("faulty_unknown_ensemble, seed 1: {} violation(s) over {} exchanges", found.len(), ep.run_log.exchanges.len());
    for v in found.iter().take(3) {
        println!("  {}", serde_json::to_string(&v.to_json()).unwrap());
    }
}
