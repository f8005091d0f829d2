//! Newline-delimited JSON exchanged with adaptation managers.
//!
//! Request: `{"v":1,"type":"resolve","step":0,"state":{"villagers":[...],
//! "wheat":3,"dragon_hp":50,"ensembles":[...]}}`.
//! Response: `{"type":"assignment","ensembles":{"Farm":["v1"],...}}`.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::generic::{truncate_diagnostic, MAX_DIAGNOSTIC_CHARS};
use crate::trace::{AssignmentMap, EntityId, Location, Role};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VillagerView {
    pub id: String,
    pub role: Role,
    pub location: Location,
    pub hp: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub villagers: Vec<VillagerView>,
    pub wheat: u64,
    pub dragon_hp: i64,
    pub ensembles: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveRequest {
    pub v: u32,
    #[serde(rename = "type")]
    pub kind: String,
    /// 0-based step index.
    pub step: usize,
    pub state: StateView,
}

impl ResolveRequest {
    pub fn new(step: usize, state: StateView) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            kind: "resolve".into(),
            step,
            state,
        }
    }

    /// Single-line JSON without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolveResponse {
    pub assignment: AssignmentMap,
}

impl ResolveResponse {
    pub fn to_line(&self) -> String {
        let ensembles: serde_json::Map<String, Json> = self
            .assignment
            .iter()
            .map(|(k, ids)| {
                (
                    k.clone(),
                    Json::Array(ids.iter().map(|i| Json::String(i.to_string())).collect()),
                )
            })
            .collect();
        serde_json::json!({"type": "assignment", "ensembles": ensembles}).to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProtocolError {
    Timeout { ms: u64, stderr: String },
    Eof { stderr: String },
    Malformed { detail: String, stderr: String },
    Crashed { stderr: String },
}

impl ProtocolError {
    pub fn stderr(&self) -> &str {
        match self {
            ProtocolError::Timeout { stderr, .. }
            | ProtocolError::Eof { stderr }
            | ProtocolError::Malformed { stderr, .. }
            | ProtocolError::Crashed { stderr } => stderr,
        }
    }

    pub fn malformed(detail: impl Into<String>) -> Self {
        ProtocolError::Malformed {
            detail: detail.into(),
            stderr: String::new(),
        }
    }

    pub(crate) fn with_stderr(mut self, captured: &str) -> Self {
        let text = truncate_diagnostic(captured.trim_end(), MAX_DIAGNOSTIC_CHARS);
        match &mut self {
            ProtocolError::Timeout { stderr, .. }
            | ProtocolError::Eof { stderr }
            | ProtocolError::Malformed { stderr, .. }
            | ProtocolError::Crashed { stderr } => *stderr = text,
        }
        self
    }
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::Timeout { ms, .. } => write!(f, "timeout: no response within {ms} ms")?,
            ProtocolError::Eof { .. } => f.write_str("the adaptation manager exited without responding")?,
            ProtocolError::Malformed { detail, .. } => write!(f, "malformed response: {detail}")?,
            ProtocolError::Crashed { .. } => f.write_str("the adaptation manager crashed")?,
        }
        let stderr = self.stderr();
        if !stderr.is_empty() {
            write!(f, "\nexception trace:\n{stderr}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ProtocolError {}

/// Parses and shape-checks one response line for `step`.
pub fn parse_response(line: &str, step: usize) -> Result<ResolveResponse, ProtocolError> {
    let value: Json = serde_json::from_str(line.trim()).map_err(|e| {
        ProtocolError::malformed(format!("not valid JSON ({e}): {}", excerpt(line)))
    })?;
    check_response(&value, step)
}

/// Shape check shared by external and in-process AMs.
pub fn check_response(value: &Json, step: usize) -> Result<ResolveResponse, ProtocolError> {
    let Some(obj) = value.as_object() else {
        return Err(ProtocolError::malformed(format!(
            "expected a JSON object, got {}",
            excerpt(&value.to_string())
        )));
    };
    match obj.get("type") {
        Some(Json::String(t)) if t == "assignment" => {}
        other => {
            return Err(ProtocolError::malformed(format!(
                "expected \"type\": \"assignment\", got {}",
                other.map_or("nothing".into(), |v| v.to_string())
            )))
        }
    }
    if let Some(s) = obj.get("step") {
        if s.as_u64() != Some(step as u64) {
            return Err(ProtocolError::malformed(format!(
                "response is for step {s}, expected {step}"
            )));
        }
    }
    let Some(Json::Object(ensembles)) = obj.get("ensembles") else {
        return Err(ProtocolError::malformed(
            "\"ensembles\" must be an object mapping ensemble names to lists of ids",
        ));
    };
    let mut assignment = AssignmentMap::new();
    for (name, members) in ensembles {
        let Json::Array(ids) = members else {
            return Err(ProtocolError::malformed(format!(
                "ensemble {name:?} must map to a list of ids, got {}",
                excerpt(&members.to_string())
            )));
        };
        assignment.touch(name.clone());
        for id in ids {
            let Json::String(id) = id else {
                return Err(ProtocolError::malformed(format!(
                    "ensemble {name:?} contains a non-string id {id}"
                )));
            };
            assignment.insert(name.clone(), EntityId::new(id.clone()));
        }
    }
    Ok(ResolveResponse { assignment })
}

fn excerpt(s: &str) -> String {
    let s = s.trim();
    if s.chars().count() > 120 {
        format!("{}...", s.chars().take(120).collect::<String>())
    } else {
        s.to_string()
    }
}

/// Something that assigns villagers to ensembles, one step at a time.
pub trait AdaptationManager: Send {
    fn resolve(&mut self, request: &ResolveRequest) -> Result<ResolveResponse, ProtocolError>;

    /// Releases resources; further calls to `resolve` are not allowed.
    fn shutdown(&mut self) {}
}

impl<T: AdaptationManager + ?Sized> AdaptationManager for Box<T> {
    fn resolve(&mut self, request: &ResolveRequest) -> Result<ResolveResponse, ProtocolError> {
        (**self).resolve(request)
    }

    fn shutdown(&mut self) {
        (**self).shutdown()
    }
}
