use std::collections::{BTreeMap, BTreeSet};

use super::{ScenarioConfig, SimError};
use crate::rng::SplitMix64;
use crate::trace::{
    AssignmentMap, EntityId, EntityState, EnvState, Location, Role, StepRecord,
};

/// Mutable world state between steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    /// Alive villagers keyed (and therefore ordered) by id.
    pub villagers: BTreeMap<EntityId, EntityState>,
    pub dragon_hp: i64,
    pub wheat: u64,
    /// Numeric suffix of the next spawned villager; ids are never reused.
    pub next_id: usize,
}

impl SimState {
    /// Snapshot for the trace, with an empty assignment.
    pub fn snapshot(&self, index: usize) -> StepRecord {
        let mut entities = vec![EntityState::dragon(self.dragon_hp)];
        entities.extend(self.villagers.values().cloned());
        StepRecord {
            index,
            entities,
            env: EnvState {
                wheat: self.wheat,
                dragon_hp: self.dragon_hp,
            },
            assignment: AssignmentMap::new(),
            events: vec![],
        }
    }

    pub fn dragon_alive(&self) -> bool {
        self.dragon_hp > 0
    }

    fn located(&self, id: &EntityId, at: Location) -> bool {
        self.villagers
            .get(id)
            .is_some_and(|v| v.location == Some(at))
    }

    fn spawn(&mut self, role: Role, hp: i64) -> EntityId {
        let id = EntityId::new(format!("v{}", self.next_id));
        self.next_id += 1;
        self.villagers.insert(
            id.clone(),
            EntityState::villager(id.as_str(), role, Location::Village, hp),
        );
        id
    }
}

/// Initial state (villagers `v1..vN` in list order, plus the dragon) and the
/// episode's random stream.
pub fn init_state(config: &ScenarioConfig, seed: u64) -> Result<(SimState, SplitMix64), SimError> {
    config.validate()?;
    let mut villagers = BTreeMap::new();
    for (i, spec) in config.initial_villagers.iter().enumerate() {
        let id = format!("v{}", i + 1);
        villagers.insert(
            EntityId::new(id.clone()),
            EntityState::villager(id, spec.role, spec.location, config.villager_hp0),
        );
    }
    let state = SimState {
        next_id: villagers.len() + 1,
        villagers,
        dragon_hp: config.dragon_hp0,
        wheat: config.wheat0,
    };
    Ok((state, SplitMix64::new(seed)))
}

/// Applies one step's assignment in the fixed phase order
/// Farm, Spawn, GoToCave, Attack, Retaliation, and returns the event log.
pub fn apply_effects(
    config: &ScenarioConfig,
    state: &mut SimState,
    assignment: &AssignmentMap,
    rng: &mut SplitMix64,
) -> Vec<String> {
    let mut events = Vec::new();
    let empty = BTreeSet::new();
    let members = |name: &str| assignment.members(name).unwrap_or(&empty);

    for (name, ids) in assignment.iter() {
        if !crate::trace::EnsembleCatalog::DRAGON_HUNT.contains(&name.as_str()) && !ids.is_empty() {
            events.push(format!("ensemble {name} is not part of the scenario; ignored"));
        }
        for id in ids {
            if !state.villagers.contains_key(id) {
                events.push(format!("{id} in {name} is not an alive villager; ignored"));
            }
        }
    }

    for id in members("Farm") {
        if state.located(id, Location::Village) {
            state.wheat += config.farm_yield;
            events.push(format!("{id} farms (+{} wheat)", config.farm_yield));
        } else if state.villagers.contains_key(id) {
            events.push(format!("{id} cannot farm outside the Village (no-op)"));
        }
    }

    for (ensemble, role) in [("SpawnFarmer", Role::Farmer), ("SpawnWarrior", Role::Warrior)] {
        let ids = members(ensemble);
        if ids.is_empty() {
            continue;
        }
        let eligible: Vec<&EntityId> = ids
            .iter()
            .filter(|id| state.located(id, Location::Village))
            .collect();
        if eligible.len() < 2 {
            events.push(format!(
                "{ensemble} needs two villagers in the Village, has {} (no-op)",
                eligible.len()
            ));
        } else if state.wheat < config.spawn_cost {
            events.push(format!(
                "{ensemble} needs {} wheat, has {} (no-op)",
                config.spawn_cost, state.wheat
            ));
        } else {
            state.wheat -= config.spawn_cost;
            let new_id = state.spawn(role, config.villager_hp0);
            events.push(format!(
                "{ensemble}: {} spawn {} {new_id} (-{} wheat)",
                join(&eligible),
                role.as_str(),
                config.spawn_cost
            ));
        }
    }

    for id in members("GoToCave") {
        let Some(v) = state.villagers.get_mut(id) else { continue };
        if v.location == Some(Location::Village) {
            v.location = Some(Location::Cave);
            events.push(format!("{id} moves to the Cave"));
        } else {
            events.push(format!("{id} is already in the Cave (no-op)"));
        }
    }

    for id in members("Attack") {
        let Some(v) = state.villagers.get(id) else { continue };
        if v.location == Some(Location::Cave) {
            let dmg = config.damage(v.role.expect("villagers have roles"));
            state.dragon_hp -= dmg;
            events.push(format!(
                "{id} attacks the Dragon for {dmg} (dragon hp {})",
                state.dragon_hp
            ));
        } else {
            events.push(format!("{id} cannot attack from the Village (no-op)"));
        }
    }

    let in_cave: Vec<EntityId> = state
        .villagers
        .values()
        .filter(|v| v.location == Some(Location::Cave))
        .map(|v| v.id.clone())
        .collect();
    if state.dragon_alive() && !in_cave.is_empty() {
        if rng.next_f64() < config.retaliate_prob {
            let target = &in_cave[rng.below(in_cave.len() as u64) as usize];
            let v = state.villagers.get_mut(target).expect("cave villager exists");
            v.hp -= config.retaliate_dmg;
            events.push(format!(
                "the Dragon strikes {target} for {} (hp {})",
                config.retaliate_dmg, v.hp
            ));
            if v.hp <= 0 {
                state.villagers.remove(target);
                events.push(format!("{target} dies"));
            }
        } else {
            events.push("the Dragon does not retaliate".to_string());
        }
    }
    if !state.dragon_alive() {
        events.push("the Dragon is defeated".to_string());
    }
    events
}

fn join(ids: &[&EntityId]) -> String {
    ids.iter().map(|i| i.as_str()).collect::<Vec<_>>().join(", ")
}
