//! Execution traces: the per-step record of entity attributes, environment
//! variables and ensemble assignments that constraints are evaluated over.
//!
//! Traces are produced by the simulator and consumed, read-only, by the
//! generic checker and the FCL evaluator. Step indices are 0-based here;
//! anything rendered for humans adds one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Current trace file schema.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("unknown set `{0}`")]
    UnknownSet(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("step {step} out of range for a trace of length {len}")]
    StepOutOfRange { step: usize, len: usize },
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error("trace json: {0}")]
    Json(String),
}

/// Opaque entity identifier, e.g. `v1` or `dragon`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl std::borrow::Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKind {
    Villager,
    Dragon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Farmer,
    Warrior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Village,
    Cave,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Villager => "Villager",
            EntityKind::Dragon => "Dragon",
        }
    }
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Farmer => "Farmer",
            Role::Warrior => "Warrior",
        }
    }
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::Village => "Village",
            Location::Cave => "Cave",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityState {
    pub id: EntityId,
    pub kind: EntityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    pub hp: i64,
}

impl EntityState {
    pub fn villager(id: impl Into<String>, role: Role, location: Location, hp: i64) -> Self {
        Self {
            id: EntityId::new(id),
            kind: EntityKind::Villager,
            role: Some(role),
            location: Some(location),
            hp,
        }
    }

    pub fn dragon(hp: i64) -> Self {
        Self {
            id: EntityId::new("dragon"),
            kind: EntityKind::Dragon,
            role: None,
            location: None,
            hp,
        }
    }

    pub fn is_villager(&self) -> bool {
        self.kind == EntityKind::Villager
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub wheat: u64,
    pub dragon_hp: i64,
}

/// Ensemble name to members for one step.
///
/// Raw AM output must be representable, so keys are not restricted to the
/// catalog and member sets may overlap; the generic checker judges that.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssignmentMap(BTreeMap<String, BTreeSet<EntityId>>);

impl AssignmentMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ensemble: impl Into<String>, member: EntityId) {
        self.0.entry(ensemble.into()).or_default().insert(member);
    }

    /// Makes sure `ensemble` is present, possibly with no members.
    pub fn touch(&mut self, ensemble: impl Into<String>) {
        self.0.entry(ensemble.into()).or_default();
    }

    pub fn members(&self, ensemble: &str) -> Option<&BTreeSet<EntityId>> {
        self.0.get(ensemble)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<EntityId>)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.values().all(BTreeSet::is_empty)
    }

    /// Every ensemble (in key order) that lists `id`.
    pub fn ensembles_of(&self, id: &EntityId) -> Vec<&str> {
        self.0
            .iter()
            .filter(|(_, m)| m.contains(id))
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

impl<S: Into<String>, I: IntoIterator<Item = EntityId>> FromIterator<(S, I)> for AssignmentMap {
    fn from_iter<T: IntoIterator<Item = (S, I)>>(iter: T) -> Self {
        let mut map = AssignmentMap::new();
        for (k, members) in iter {
            let key = k.into();
            map.touch(key.clone());
            for m in members {
                map.insert(key.clone(), m);
            }
        }
        map
    }
}

/// Ordered ensemble names; order is the deterministic iteration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnsembleCatalog(Vec<String>);

impl EnsembleCatalog {
    pub const DRAGON_HUNT: [&'static str; 5] =
        ["Farm", "Attack", "GoToCave", "SpawnFarmer", "SpawnWarrior"];

    pub fn dragon_hunt() -> Self {
        Self(Self::DRAGON_HUNT.iter().map(|s| s.to_string()).collect())
    }

    pub fn new(names: Vec<String>) -> Self {
        Self(names)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }
}

impl Default for EnsembleCatalog {
    fn default() -> Self {
        Self::dragon_hunt()
    }
}

/// Built-in sets derived from entity attributes.
pub const ROLE_SETS: [&str; 4] = ["Villagers", "Farmers", "Warriors", "Dragons"];

/// Attributes that can be read from an entity.
pub const ATTRIBUTES: [&str; 4] = ["hp", "role", "location", "kind"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub entities: Vec<EntityState>,
    pub env: EnvState,
    pub assignment: AssignmentMap,
    #[serde(default)]
    pub events: Vec<String>,
}

impl StepRecord {
    pub fn entity(&self, id: &str) -> Option<&EntityState> {
        self.entities.iter().find(|e| e.id.as_str() == id)
    }

    pub fn villagers(&self) -> impl Iterator<Item = &EntityState> {
        self.entities.iter().filter(|e| e.is_villager())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Win,
    #[serde(rename = "Loss-Horizon")]
    LossHorizon,
    #[serde(rename = "Loss-AllDead")]
    LossAllDead,
    #[serde(rename = "Aborted-ProtocolError")]
    AbortedProtocolError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Win => "Win",
            Termination::LossHorizon => "Loss-Horizon",
            Termination::LossAllDead => "Loss-AllDead",
            Termination::AbortedProtocolError => "Aborted-ProtocolError",
        }
    }
}

/// Value of an attribute or term at one step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Str(String),
    /// The entity is not present at that step.
    Absent,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::Absent => f.write_str("absent"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub seed: u64,
    pub terminated: Termination,
    pub steps: Vec<StepRecord>,
}

#[derive(Serialize, Deserialize)]
struct TraceDocument {
    schema_version: String,
    seed: u64,
    terminated: Termination,
    steps: Vec<StepRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn step(&self, step: usize) -> Result<&StepRecord, TraceError> {
        self.steps.get(step).ok_or(TraceError::StepOutOfRange {
            step,
            len: self.steps.len(),
        })
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.steps.last()
    }

    /// Members of a role set or ensemble at `step`.
    pub fn set_at(
        &self,
        step: usize,
        set_name: &str,
        catalog: &EnsembleCatalog,
    ) -> Result<BTreeSet<EntityId>, TraceError> {
        let rec = self.step(step)?;
        let pick = |pred: &dyn Fn(&EntityState) -> bool| {
            rec.entities
                .iter()
                .filter(|e| pred(e))
                .map(|e| e.id.clone())
                .collect()
        };
        match set_name {
            "Villagers" => Ok(pick(&|e| e.is_villager())),
            "Farmers" => Ok(pick(&|e| e.role == Some(Role::Farmer))),
            "Warriors" => Ok(pick(&|e| e.role == Some(Role::Warrior))),
            "Dragons" => Ok(pick(&|e| e.kind == EntityKind::Dragon)),
            name if catalog.contains(name) => Ok(rec
                .assignment
                .members(name)
                .cloned()
                .unwrap_or_default()),
            name => Err(TraceError::UnknownSet(name.to_string())),
        }
    }

    /// Attribute of `entity` at `step`, or [`Value::Absent`] if the entity is
    /// not present then (or the attribute does not apply to its kind).
    pub fn attr_at(&self, step: usize, entity: &str, attr: &str) -> Result<Value, TraceError> {
        if !ATTRIBUTES.contains(&attr) {
            return Err(TraceError::UnknownAttribute(attr.to_string()));
        }
        let rec = self.step(step)?;
        let Some(e) = rec.entity(entity) else {
            return Ok(Value::Absent);
        };
        Ok(entity_attr(e, attr))
    }

    /// Structural invariants that a loaded trace must satisfy.
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |msg: String| Err(TraceError::Invalid(msg));
        if self.steps.is_empty() {
            return bad("trace has no steps".into());
        }
        let mut gone: BTreeSet<&EntityId> = BTreeSet::new();
        let mut prev: Option<&StepRecord> = None;
        for (pos, rec) in self.steps.iter().enumerate() {
            if rec.index != pos {
                return bad(format!("step at position {pos} has index {}", rec.index));
            }
            let mut seen = BTreeSet::new();
            for e in &rec.entities {
                if e.id.as_str().is_empty() {
                    return bad(format!("empty entity id at step {pos}"));
                }
                if !seen.insert(&e.id) {
                    return bad(format!("duplicate entity {} at step {pos}", e.id));
                }
                if gone.contains(&e.id) {
                    return bad(format!("entity {} reappears at step {pos}", e.id));
                }
                match e.kind {
                    EntityKind::Dragon if e.role.is_some() || e.location.is_some() => {
                        return bad(format!("dragon {} has role/location", e.id));
                    }
                    EntityKind::Villager if e.role.is_none() || e.location.is_none() => {
                        return bad(format!("villager {} lacks role/location", e.id));
                    }
                    EntityKind::Villager if e.hp <= 0 => {
                        return bad(format!("villager {} present with hp {}", e.id, e.hp));
                    }
                    _ => {}
                }
            }
            for d in rec.entities.iter().filter(|e| e.kind == EntityKind::Dragon) {
                if d.hp != rec.env.dragon_hp {
                    return bad(format!("dragon hp mismatch at step {pos}"));
                }
            }
            if let Some(p) = prev {
                if rec.env.dragon_hp > p.env.dragon_hp {
                    return bad(format!("dragon hp increases at step {pos}"));
                }
                for e in &p.entities {
                    if rec.entity(e.id.as_str()).is_none() {
                        gone.insert(&e.id);
                    }
                }
            }
            prev = Some(rec);
        }
        let won = self.steps.last().is_some_and(|s| s.env.dragon_hp <= 0);
        if won != (self.terminated == Termination::Win) {
            return bad("terminated=Win must coincide with a dead dragon on the final step".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = TraceDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            seed: self.seed,
            terminated: self.terminated,
            steps: self.steps.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("trace serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let doc: TraceDocument =
            serde_json::from_str(text).map_err(|e| TraceError::Json(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(TraceError::Invalid(format!(
                "unsupported schema_version {:?}",
                doc.schema_version
            )));
        }
        let trace = Trace {
            seed: doc.seed,
            terminated: doc.terminated,
            steps: doc.steps,
        };
        trace.validate()?;
        Ok(trace)
    }
}

fn entity_attr(e: &EntityState, attr: &str) -> Value {
    match attr {
        "hp" => Value::Int(e.hp),
        "kind" => Value::Str(e.kind.as_str().to_string()),
        "role" => e
            .role
            .map_or(Value::Absent, |r| Value::Str(r.as_str().to_string())),
        "location" => e
            .location
            .map_or(Value::Absent, |l| Value::Str(l.as_str().to_string())),
        _ => Value::Absent,
    }
}
