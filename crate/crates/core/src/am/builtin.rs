//! In-process adaptation managers: one reference policy and one faulty
//! variant per failure category the verifier is expected to catch.

use serde_json::{json, Value as Json};

use super::protocol::{
    check_response, AdaptationManager, ProtocolError, ResolveRequest, ResolveResponse, StateView,
};
use crate::sim::ScenarioConfig;
use crate::trace::{Location, Role};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinKind {
    ReferenceGood,
    FaultyCrash,
    FaultyMalformed,
    FaultyUnknownEnsemble,
    FaultyDuplicateAssignment,
    FaultyUnassigned,
    FaultyNeverAttack,
    FaultyCaveIdle,
}

impl BuiltinKind {
    pub const ALL: [BuiltinKind; 8] = [
        BuiltinKind::ReferenceGood,
        BuiltinKind::FaultyCrash,
        BuiltinKind::FaultyMalformed,
        BuiltinKind::FaultyUnknownEnsemble,
        BuiltinKind::FaultyDuplicateAssignment,
        BuiltinKind::FaultyUnassigned,
        BuiltinKind::FaultyNeverAttack,
        BuiltinKind::FaultyCaveIdle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinKind::ReferenceGood => "reference_good",
            BuiltinKind::FaultyCrash => "faulty_crash",
            BuiltinKind::FaultyMalformed => "faulty_malformed",
            BuiltinKind::FaultyUnknownEnsemble => "faulty_unknown_ensemble",
            BuiltinKind::FaultyDuplicateAssignment => "faulty_duplicate_assignment",
            BuiltinKind::FaultyUnassigned => "faulty_unassigned",
            BuiltinKind::FaultyNeverAttack => "faulty_never_attack",
            BuiltinKind::FaultyCaveIdle => "faulty_cave_idle",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            BuiltinKind::ReferenceGood => {
                "farms, spawns warriors from surplus wheat, sends warriors to the Cave in pairs and attacks"
            }
            BuiltinKind::FaultyCrash => "raises an exception on the first request",
            BuiltinKind::FaultyMalformed => "answers with ensembles as a list instead of an object",
            BuiltinKind::FaultyUnknownEnsemble => "puts the first villager into a \"Defend\" ensemble",
            BuiltinKind::FaultyDuplicateAssignment => "puts the first villager into two ensembles",
            BuiltinKind::FaultyUnassigned => "leaves the last villager unassigned",
            BuiltinKind::FaultyNeverAttack => "farms forever",
            BuiltinKind::FaultyCaveIdle => "sends warriors to the Cave but never attacks",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Names and descriptions of every builtin AM.
pub fn builtin_catalog() -> Vec<(&'static str, &'static str)> {
    BuiltinKind::ALL
        .iter()
        .map(|k| (k.name(), k.description()))
        .collect()
}

/// Scenario numbers the policies depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolicyRules {
    pub spawn_cost: u64,
    pub dmg_warrior: i64,
    pub dmg_farmer: i64,
}

impl From<&ScenarioConfig> for PolicyRules {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            spawn_cost: c.spawn_cost,
            dmg_warrior: c.dmg_warrior,
            dmg_farmer: c.dmg_farmer,
        }
    }
}

pub struct BuiltinAm {
    kind: BuiltinKind,
    rules: PolicyRules,
}

impl BuiltinAm {
    pub fn new(kind: BuiltinKind, rules: PolicyRules) -> Self {
        Self { kind, rules }
    }

    pub fn kind(&self) -> BuiltinKind {
        self.kind
    }

    /// Raw response object, or the text the AM would print on stderr when it
    /// fails.
    pub fn respond(&self, state: &StateView) -> Result<Json, String> {
        use BuiltinKind::*;
        let ids: Vec<&str> = state.villagers.iter().map(|v| v.id.as_str()).collect();
        let mut plan = match self.kind {
            FaultyCrash => {
                return Err([
                    "Traceback (most recent call last):",
                    "  File \"am.py\", line 12, in resolve",
                    "    warriors = state[\"warriors\"]",
                    "KeyError: 'warriors'",
                ]
                .join("\n"))
            }
            FaultyNeverAttack => {
                let mut p = Plan::new(&state.ensembles);
                for id in &ids {
                    p.add("Farm", id);
                }
                p
            }
            FaultyCaveIdle => reference_plan(state, &self.rules, false),
            _ => reference_plan(state, &self.rules, true),
        };
        match self.kind {
            FaultyMalformed => return Ok(json!({"type": "assignment", "ensembles": ids})),
            FaultyUnknownEnsemble => {
                if let Some(first) = ids.first() {
                    plan.remove(first);
                    plan.add("Defend", first);
                }
            }
            FaultyDuplicateAssignment => {
                if let Some(first) = ids.first() {
                    let extra = if plan.contains("Attack", first) { "Farm" } else { "Attack" };
                    plan.add(extra, first);
                }
            }
            FaultyUnassigned => {
                if let Some(last) = ids.last() {
                    plan.remove(last);
                }
            }
            _ => {}
        }
        Ok(plan.to_json())
    }
}

impl AdaptationManager for BuiltinAm {
    fn resolve(&mut self, request: &ResolveRequest) -> Result<ResolveResponse, ProtocolError> {
        match self.respond(&request.state) {
            Ok(value) => check_response(&value, request.step),
            Err(stderr) => Err(ProtocolError::Crashed { stderr: String::new() }.with_stderr(&stderr)),
        }
    }
}

/// Ensemble name to ordered ids, keeping the request's ensemble order.
struct Plan(Vec<(String, Vec<String>)>);

impl Plan {
    fn new(ensembles: &[String]) -> Self {
        Plan(ensembles.iter().map(|e| (e.clone(), vec![])).collect())
    }

    fn add(&mut self, ensemble: &str, id: &str) {
        match self.0.iter_mut().find(|(e, _)| e == ensemble) {
            Some((_, ids)) => ids.push(id.to_string()),
            None => self.0.push((ensemble.to_string(), vec![id.to_string()])),
        }
    }

    fn remove(&mut self, id: &str) {
        for (_, ids) in &mut self.0 {
            ids.retain(|i| i != id);
        }
    }

    fn contains(&self, ensemble: &str, id: &str) -> bool {
        self.0.iter().any(|(e, ids)| e == ensemble && ids.iter().any(|i| i == id))
    }

    fn to_json(&self) -> Json {
        let map: serde_json::Map<String, Json> = self
            .0
            .iter()
            .map(|(e, ids)| (e.clone(), json!(ids)))
            .collect();
        json!({"type": "assignment", "ensembles": map})
    }
}

/// The reference strategy. Cave villagers attack (or idle in GoToCave when
/// `attack` is false). Village warriors go to the Cave in pairs, or alone to
/// reinforce, unless the Cave already deals a killing blow. Two farmers spawn
/// a warrior once wheat covers two spawns. Everyone else farms.
fn reference_plan(state: &StateView, rules: &PolicyRules, attack: bool) -> Plan {
    let mut p = Plan::new(&state.ensembles);
    let damage = |r: Role| match r {
        Role::Farmer => rules.dmg_farmer,
        Role::Warrior => rules.dmg_warrior,
    };
    let cave: Vec<_> = state
        .villagers
        .iter()
        .filter(|v| v.location == Location::Cave)
        .collect();
    let cave_damage: i64 = if attack {
        cave.iter().map(|v| damage(v.role)).sum()
    } else {
        0
    };
    for v in &cave {
        p.add(if attack { "Attack" } else { "GoToCave" }, &v.id);
    }
    let warriors: Vec<_> = state
        .villagers
        .iter()
        .filter(|v| v.location == Location::Village && v.role == Role::Warrior)
        .collect();
    let farmers: Vec<_> = state
        .villagers
        .iter()
        .filter(|v| v.location == Location::Village && v.role == Role::Farmer)
        .collect();
    let send = (warriors.len() >= 2 || (!cave.is_empty() && !warriors.is_empty()))
        && state.dragon_hp > cave_damage;
    for w in &warriors {
        p.add(if send { "GoToCave" } else { "Farm" }, &w.id);
    }
    let spawn = state.wheat >= 2 * rules.spawn_cost && farmers.len() >= 2;
    for (i, f) in farmers.iter().enumerate() {
        p.add(if spawn && i < 2 { "SpawnWarrior" } else { "Farm" }, &f.id);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::am::protocol::VillagerView;
    use crate::trace::EnsembleCatalog;

    fn view(villagers: &[(&str, Role, Location)], wheat: u64, dragon_hp: i64) -> StateView {
        StateView {
            villagers: villagers
                .iter()
                .map(|(id, role, location)| VillagerView {
                    id: id.to_string(),
                    role: *role,
                    location: *location,
                    hp: 5,
                })
                .collect(),
            wheat,
            dragon_hp,
            ensembles: EnsembleCatalog::dragon_hunt().names().to_vec(),
        }
    }

    fn resolve(kind: BuiltinKind, state: StateView) -> Result<ResolveResponse, ProtocolError> {
        let mut am = BuiltinAm::new(kind, PolicyRules::from(&ScenarioConfig::default()));
        am.resolve(&ResolveRequest::new(0, state))
    }

    fn members(r: &ResolveResponse, e: &str) -> Vec<String> {
        r.assignment
            .members(e)
            .map(|s| s.iter().map(|i| i.to_string()).collect())
            .unwrap_or_default()
    }

    use Location::*;
    use Role::*;

    fn default_view() -> StateView {
        view(
            &[("v1", Farmer, Village), ("v2", Farmer, Village), ("v3", Farmer, Village), ("v4", Warrior, Village)],
            3,
            50,
        )
    }

    #[test]
    fn reference_farms_at_start() {
        let r = resolve(BuiltinKind::ReferenceGood, default_view()).unwrap();
        assert_eq!(members(&r, "Farm"), ["v1", "v2", "v3", "v4"]);
        for e in ["Attack", "GoToCave", "SpawnFarmer", "SpawnWarrior"] {
            assert!(members(&r, e).is_empty());
        }
    }

    #[test]
    fn reference_spawns_and_sends_pairs() {
        let s = view(
            &[("v1", Farmer, Village), ("v2", Farmer, Village), ("v4", Warrior, Village), ("v5", Warrior, Village)],
            10,
            50,
        );
        let r = resolve(BuiltinKind::ReferenceGood, s).unwrap();
        assert_eq!(members(&r, "SpawnWarrior"), ["v1", "v2"]);
        assert_eq!(members(&r, "GoToCave"), ["v4", "v5"]);
    }

    #[test]
    fn reference_holds_back_when_cave_finishes_the_job() {
        let s = view(&[("v4", Warrior, Cave), ("v5", Warrior, Village)], 0, 3);
        let r = resolve(BuiltinKind::ReferenceGood, s).unwrap();
        assert_eq!(members(&r, "Attack"), ["v4"]);
        assert_eq!(members(&r, "Farm"), ["v5"]);
    }

    #[test]
    fn faulty_variants() {
        assert!(matches!(
            resolve(BuiltinKind::FaultyCrash, default_view()),
            Err(ProtocolError::Crashed { stderr }) if stderr.contains("Traceback")
        ));
        assert!(matches!(
            resolve(BuiltinKind::FaultyMalformed, default_view()),
            Err(ProtocolError::Malformed { .. })
        ));
        let r = resolve(BuiltinKind::FaultyUnknownEnsemble, default_view()).unwrap();
        assert_eq!(members(&r, "Defend"), ["v1"]);
        let r = resolve(BuiltinKind::FaultyDuplicateAssignment, default_view()).unwrap();
        assert_eq!(r.assignment.ensembles_of(&"v1".into()), ["Attack", "Farm"]);
        let r = resolve(BuiltinKind::FaultyUnassigned, default_view()).unwrap();
        assert!(r.assignment.ensembles_of(&"v4".into()).is_empty());
        let s = view(&[("v4", Warrior, Cave)], 0, 50);
        let r = resolve(BuiltinKind::FaultyCaveIdle, s).unwrap();
        assert_eq!(members(&r, "GoToCave"), ["v4"]);
    }

    #[test]
    fn catalog_names_round_trip() {
        assert_eq!(builtin_catalog().len(), 8);
        for k in BuiltinKind::ALL {
            assert_eq!(BuiltinKind::from_name(k.name()), Some(k));
        }
        assert_eq!(BuiltinKind::from_name("nope"), None);
    }
}
