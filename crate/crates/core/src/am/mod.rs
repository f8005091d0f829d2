//! Adaptation managers: the wire protocol, builtin policies, and external
//! processes speaking the protocol.

mod builtin;
mod process;
mod protocol;

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub use builtin::{builtin_catalog, BuiltinAm, BuiltinKind, PolicyRules};
pub use process::{expand_command, ExternalAm};
pub use protocol::{
    check_response, parse_response, AdaptationManager, ProtocolError, ResolveRequest,
    ResolveResponse, StateView, VillagerView, PROTOCOL_VERSION,
};

pub const DEFAULT_STEP_TIMEOUT_MS: u64 = 2000;
pub const DEFAULT_COMMAND: &str = "python3 {source}";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AmError {
    #[error("could not start adaptation manager: {0}")]
    SpawnFailed(String),
    #[error("invalid adaptation manager spec: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AmKind {
    /// `command` contains one `{source}` placeholder.
    External { command: String, source: PathBuf },
    Builtin(BuiltinKind),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmSpec {
    pub kind: AmKind,
    pub per_step_timeout_ms: u64,
}

impl AmSpec {
    pub fn builtin(kind: BuiltinKind) -> Self {
        Self {
            kind: AmKind::Builtin(kind),
            per_step_timeout_ms: DEFAULT_STEP_TIMEOUT_MS,
        }
    }

    pub fn external(command: impl Into<String>, source: impl Into<PathBuf>) -> Self {
        Self {
            kind: AmKind::External {
                command: command.into(),
                source: source.into(),
            },
            per_step_timeout_ms: DEFAULT_STEP_TIMEOUT_MS,
        }
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Self {
        self.per_step_timeout_ms = ms;
        self
    }

    /// Parses `builtin:<name>` or a path to a source file run with
    /// [`DEFAULT_COMMAND`].
    pub fn parse(text: &str) -> Result<Self, AmError> {
        match text.strip_prefix("builtin:") {
            Some(name) => BuiltinKind::from_name(name)
                .map(Self::builtin)
                .ok_or_else(|| AmError::InvalidSpec(format!("unknown builtin AM {name:?}"))),
            None => Ok(Self::external(DEFAULT_COMMAND, text)),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            AmKind::Builtin(k) => format!("builtin:{}", k.name()),
            AmKind::External { command, source } => {
                command.replace("{source}", &source.to_string_lossy())
            }
        }
    }
}

/// Starts the AM described by `spec`. Builtins take their numbers from
/// `rules`.
pub fn spawn_am(spec: &AmSpec, rules: PolicyRules) -> Result<Box<dyn AdaptationManager>, AmError> {
    match &spec.kind {
        AmKind::Builtin(kind) => Ok(Box::new(BuiltinAm::new(*kind, rules))),
        AmKind::External { command, source } => Ok(Box::new(ExternalAm::spawn(
            command,
            source,
            Duration::from_millis(spec.per_step_timeout_ms),
        )?)),
    }
}

/// Stands in for an AM that could not be started, so the episode records a
/// protocol failure at its first step.
pub struct UnavailableAm {
    reason: String,
}

impl UnavailableAm {
    pub fn new(reason: impl Into<String>) -> Self {
        Self {
            reason: reason.into(),
        }
    }
}

impl AdaptationManager for UnavailableAm {
    fn resolve(&mut self, _request: &ResolveRequest) -> Result<ResolveResponse, ProtocolError> {
        Err(ProtocolError::Crashed {
            stderr: String::new(),
        }
        .with_stderr(&self.reason))
    }
}

const PRELUDE: &str = include_str!("../../assets/am/prelude.py");
const MAIN: &str = include_str!("../../assets/am/main.py");

fn variant_source(kind: BuiltinKind) -> &'static str {
    match kind {
        BuiltinKind::ReferenceGood => include_str!("../../assets/am/reference_good.py"),
        BuiltinKind::FaultyCrash => include_str!("../../assets/am/faulty_crash.py"),
        BuiltinKind::FaultyMalformed => include_str!("../../assets/am/faulty_malformed.py"),
        BuiltinKind::FaultyUnknownEnsemble => include_str!("../../assets/am/faulty_unknown_ensemble.py"),
        BuiltinKind::FaultyDuplicateAssignment => {
            include_str!("../../assets/am/faulty_duplicate_assignment.py")
        }
        BuiltinKind::FaultyUnassigned => include_str!("../../assets/am/faulty_unassigned.py"),
        BuiltinKind::FaultyNeverAttack => include_str!("../../assets/am/faulty_never_attack.py"),
        BuiltinKind::FaultyCaveIdle => include_str!("../../assets/am/faulty_cave_idle.py"),
    }
}

/// Standalone Python source behaving like the builtin `kind` under `rules`.
pub fn mirror_source(kind: BuiltinKind, rules: PolicyRules) -> String {
    let prelude = PRELUDE
        .replace("@SPAWN_COST@", &rules.spawn_cost.to_string())
        .replace("@DMG_FARMER@", &rules.dmg_farmer.to_string())
        .replace("@DMG_WARRIOR@", &rules.dmg_warrior.to_string());
    format!("{prelude}{}{MAIN}", variant_source(kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        assert_eq!(
            AmSpec::parse("builtin:reference_good").unwrap(),
            AmSpec::builtin(BuiltinKind::ReferenceGood)
        );
        assert!(AmSpec::parse("builtin:nope").is_err());
        let ext = AmSpec::parse("am.py").unwrap();
        assert_eq!(ext.describe(), "python3 am.py");
    }

    #[test]
    fn command_template_needs_one_placeholder() {
        let src = std::path::Path::new("x.py");
        assert_eq!(expand_command("python3 -u {source}", src).unwrap(), ["python3", "-u", "x.py"]);
        assert!(expand_command("python3", src).is_err());
        assert!(expand_command("{source} {source}", src).is_err());
    }

    #[test]
    fn missing_source_fails_to_spawn() {
        let spec = AmSpec::external(DEFAULT_COMMAND, "/nonexistent/am.py");
        let rules = PolicyRules::from(&crate::sim::ScenarioConfig::default());
        assert!(matches!(spawn_am(&spec, rules), Err(AmError::SpawnFailed(_))));
    }

    #[test]
    fn mirrors_substitute_rules() {
        let rules = PolicyRules {
            spawn_cost: 7,
            dmg_warrior: 4,
            dmg_farmer: 2,
        };
        let src = mirror_source(BuiltinKind::ReferenceGood, rules);
        assert!(src.contains("SPAWN_COST = 7\n"));
        assert!(src.contains(r#"DAMAGE = {"Farmer": 2, "Warrior": 4}"#));
        assert!(!src.contains('@'));
        assert!(src.contains("def resolve(state):"));
        assert!(src.trim_end().ends_with("main()"));
    }
}
