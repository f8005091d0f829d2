mod support;

use std::collections::BTreeSet;

use fclloop::am::{AdaptationManager, BuiltinAm, BuiltinKind, PolicyRules, ProtocolError, ResolveRequest, ResolveResponse};
use fclloop::generic::{check_assignment, GenericCategory};
use fclloop::sim::{run_episode, ScenarioConfig, VillagerSpec};
use fclloop::trace::{AssignmentMap, EntityId, EnsembleCatalog, Termination, Trace};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::Rng;
use support::{random_assignment, rng, villager_ids, ENSEMBLES};

/// Puts every villager in a random ensemble, now and then somewhere odd.
struct RandomAm(StdRng);

impl AdaptationManager for RandomAm {
    fn resolve(&mut self, req: &ResolveRequest) -> Result<ResolveResponse, ProtocolError> {
        let mut a = AssignmentMap::new();
        for v in &req.state.villagers {
            let ens = match self.0.random_range(0..30) {
                0 => "Wander",
                _ => ENSEMBLES[self.0.random_range(0..ENSEMBLES.len())],
            };
            a.insert(ens, EntityId::new(v.id.clone()));
        }
        if self.0.random_range(0..15) == 0 {
            a.insert("Attack", EntityId::new("v999"));
        }
        Ok(ResolveResponse { assignment: a })
    }
}

fn config(r: &mut StdRng) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        horizon: r.random_range(1..=40),
        dragon_hp0: r.random_range(1..=30),
        wheat0: r.random_range(0..=12),
        spawn_cost: r.random_range(1..=6),
        retaliate_prob: r.random_range(0.0..=1.0),
        ..ScenarioConfig::default()
    };
    c.initial_villagers = (0..r.random_range(1..=5))
        .map(|_| if r.random_bool(0.5) { VillagerSpec::farmer() } else { VillagerSpec::warrior() })
        .collect();
    c
}

fn run(seed: u64) -> (ScenarioConfig, Trace) {
    let mut r = rng(seed);
    let c = config(&mut r);
    let mut am = RandomAm(rng(seed ^ 0x5eed));
    let ep = run_episode(&mut am, &c, seed).unwrap();
    (c, ep.trace)
}

fn ids_at(trace: &Trace, i: usize) -> BTreeSet<String> {
    trace.steps[i].villagers().map(|e| e.id.to_string()).collect()
}

fn amounts(events: &[String], needle: &str) -> Vec<i64> {
    events
        .iter()
        .filter_map(|e| e.split_once(needle))
        .map(|(_, rest)| rest.split(|c: char| !c.is_ascii_digit()).next().unwrap().parse().unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn same_seed_same_trace(seed in any::<u64>()) {
        prop_assert_eq!(run(seed).1, run(seed).1);
    }

    #[test]
    fn transitions_are_accounted_for_by_events(seed in any::<u64>()) {
        let (c, trace) = run(seed);
        prop_assert!(trace.validate().is_ok());
        let mut seen: BTreeSet<String> = ids_at(&trace, 0);
        for i in 0..trace.len() - 1 {
            let (now, next) = (&trace.steps[i], &trace.steps[i + 1]);
            let ev = &now.events;
            let farmed = amounts(ev, " farms (+").iter().sum::<i64>();
            let spawns = ev.iter().filter(|e| e.contains(" spawn ")).count() as i64;
            prop_assert_eq!(
                next.env.wheat as i64,
                now.env.wheat as i64 + farmed - spawns * c.spawn_cost as i64,
                "wheat at step {}: {:?}", i, ev
            );
            let dealt: i64 = amounts(ev, "attacks the Dragon for ").iter().sum();
            prop_assert_eq!(next.env.dragon_hp, now.env.dragon_hp - dealt);
            prop_assert!(next.env.dragon_hp <= now.env.dragon_hp);

            let died: BTreeSet<String> = ev
                .iter()
                .filter_map(|e| e.strip_suffix(" dies"))
                .map(str::to_string)
                .collect();
            let (before, after) = (ids_at(&trace, i), ids_at(&trace, i + 1));
            let born: BTreeSet<String> = after.difference(&before).cloned().collect();
            prop_assert_eq!(born.len() as i64, spawns);
            for id in &born {
                prop_assert!(seen.insert(id.clone()), "id {} reused", id);
            }
            let expect: BTreeSet<String> = before.difference(&died).cloned().chain(born).collect();
            prop_assert_eq!(after, expect);

            let struck = ev.iter().filter(|e| e.starts_with("the Dragon strikes ")).count();
            prop_assert!(struck <= 1);
            let hp_changes = now
                .villagers()
                .filter(|v| next.entity(v.id.as_str()).is_some_and(|w| w.hp != v.hp))
                .count();
            prop_assert!(hp_changes <= struck);
        }
    }

    #[test]
    fn episodes_end_for_the_stated_reason(seed in any::<u64>()) {
        let (c, trace) = run(seed);
        prop_assert!(!trace.is_empty() && trace.len() <= c.horizon as usize);
        let last = trace.last().unwrap();
        let dragon_dead = last.env.dragon_hp <= 0;
        let nobody = last.villagers().next().is_none();
        match trace.terminated {
            Termination::Win => prop_assert!(dragon_dead),
            Termination::LossAllDead => prop_assert!(!dragon_dead && nobody),
            Termination::LossHorizon => {
                prop_assert!(!dragon_dead && !nobody);
                prop_assert_eq!(trace.len(), c.horizon as usize);
            }
            Termination::AbortedProtocolError => prop_assert!(false, "random AM never fails the protocol"),
        }
        for s in &trace.steps[..trace.len() - 1] {
            prop_assert!(s.env.dragon_hp > 0 && s.villagers().next().is_some());
        }
    }

    #[test]
    fn clean_assignments_are_exactly_partitions(seed in any::<u64>(), n in 0usize..6) {
        let mut r = rng(seed);
        let villagers = villager_ids(n);
        let a = random_assignment(&mut r, &villagers);
        let catalog = EnsembleCatalog::dragon_hunt();
        let keys_known = a.iter().all(|(k, _)| ENSEMBLES.contains(&k.as_str()));
        let all_ids: Vec<&EntityId> = a.iter().flat_map(|(_, m)| m.iter()).collect();
        let only_villagers = all_ids.iter().all(|id| villagers.contains(id));
        let each_once = villagers.iter().all(|v| all_ids.iter().filter(|id| **id == v).count() == 1);
        let violations = check_assignment(0, &villagers, &a, &catalog);
        prop_assert_eq!(violations.is_empty(), keys_known && only_villagers && each_once, "{:?}", violations);
        if !keys_known {
            prop_assert!(violations.iter().any(|v| v.category == GenericCategory::UnknownEnsemble));
        }
        if !only_villagers {
            prop_assert!(violations.iter().any(|v| v.category == GenericCategory::UnknownComponent));
        }
    }
}

#[test]
fn builtin_reference_wins_with_any_default_seed() {
    let c = ScenarioConfig::default();
    for seed in 1..=20 {
        let mut am = BuiltinAm::new(BuiltinKind::ReferenceGood, PolicyRules::from(&c));
        let ep = run_episode(&mut am, &c, seed).unwrap();
        assert!(ep.metrics.win, "seed {seed}: {:?}", ep.trace.terminated);
    }
}
