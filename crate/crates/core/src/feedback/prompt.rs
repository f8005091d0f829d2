use serde::Deserialize;

use super::FeedbackError;
use crate::am::DEFAULT_STEP_TIMEOUT_MS;
use crate::fcl::{render, Constraint};
use crate::sim::ScenarioConfig;
use crate::trace::EnsembleCatalog;

pub const DEFAULT_TEMPLATE: &str = include_str!("../../assets/prompt.toml");

/// Prompt sections, each a text fragment with `{slot}` placeholders.
#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub interface_contract: Option<String>,
    pub domain_rules: Option<String>,
    pub strategy_intent: Option<String>,
    pub constraints_summary: Option<String>,
    pub feedback_block: Option<String>,
}

impl PromptTemplate {
    pub fn from_toml(text: &str) -> Result<Self, FeedbackError> {
        toml::from_str(text).map_err(|e| FeedbackError::Config(format!("prompt template: {e}")))
    }

    pub fn default_template() -> Self {
        Self::from_toml(DEFAULT_TEMPLATE).expect("bundled template parses")
    }
}

/// What the prompt tells the generator about the scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDocs {
    pub config: ScenarioConfig,
    pub ensembles: EnsembleCatalog,
    pub step_timeout_ms: u64,
}

impl ScenarioDocs {
    pub fn new(config: ScenarioConfig) -> Self {
        Self {
            config,
            ensembles: EnsembleCatalog::dragon_hunt(),
            step_timeout_ms: DEFAULT_STEP_TIMEOUT_MS,
        }
    }

    fn slots(&self) -> Vec<(&'static str, String)> {
        let c = &self.config;
        let villagers: Vec<String> = c
            .initial_villagers
            .iter()
            .map(|v| format!("{} in the {}", v.role.as_str(), v.location.as_str()))
            .collect();
        let ensembles: Vec<String> = self
            .ensembles
            .names()
            .iter()
            .map(|n| format!("\"{n}\""))
            .collect();
        vec![
            ("horizon", c.horizon.to_string()),
            ("dragon_hp0", c.dragon_hp0.to_string()),
            ("villager_hp0", c.villager_hp0.to_string()),
            ("initial_villagers", villagers.join(", ")),
            ("wheat0", c.wheat0.to_string()),
            ("farm_yield", c.farm_yield.to_string()),
            ("spawn_cost", c.spawn_cost.to_string()),
            ("dmg_warrior", c.dmg_warrior.to_string()),
            ("dmg_farmer", c.dmg_farmer.to_string()),
            ("retaliate_prob", c.retaliate_prob.to_string()),
            ("retaliate_dmg", c.retaliate_dmg.to_string()),
            ("ensembles", ensembles.join(", ")),
            ("timeout_ms", self.step_timeout_ms.to_string()),
        ]
    }
}

fn fill(text: &str, slots: &[(&str, String)]) -> String {
    slots.iter().fold(text.trim().to_string(), |acc, (k, v)| {
        acc.replace(&format!("{{{k}}}"), v)
    })
}

fn required<'a>(section: &'a Option<String>, name: &str) -> Result<&'a str, FeedbackError> {
    match section {
        Some(s) if !s.trim().is_empty() => Ok(s),
        _ => Err(FeedbackError::MissingSection(name.to_string())),
    }
}

/// One entry per constraint: name, gloss, and canonical text.
pub fn constraints_listing(constraints: &[Constraint]) -> String {
    constraints
        .iter()
        .map(|c| {
            let bare = Constraint {
                gloss: None,
                ..c.clone()
            };
            let gloss = c.gloss.as_deref().unwrap_or("(no description)");
            format!("- {}: {gloss}\n  {}", c.name, render(&bare))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Assembles the prompt. Without feedback it ends with the constraints
/// summary; with feedback the same text is followed by the feedback section.
pub fn build_prompt(
    template: &PromptTemplate,
    docs: &ScenarioDocs,
    constraints: &[Constraint],
    feedback: Option<&str>,
) -> Result<String, FeedbackError> {
    let mut slots = docs.slots();
    let mut sections = vec![
        fill(required(&template.interface_contract, "interface_contract")?, &slots),
        fill(required(&template.domain_rules, "domain_rules")?, &slots),
        fill(required(&template.strategy_intent, "strategy_intent")?, &slots),
    ];
    if let Some(summary) = &template.constraints_summary {
        if !constraints.is_empty() {
            slots.push(("constraints", constraints_listing(constraints)));
            sections.push(fill(summary, &slots));
        }
    }
    if let Some(report) = feedback {
        let report = report.trim_end();
        match &template.feedback_block {
            Some(block) => {
                // the report goes in last so its text is never treated as slots
                let filled = fill(block, &slots);
                sections.push(filled.replace("{report}", report));
            }
            None => sections.push(report.to_string()),
        }
    }
    let mut out = sections.join("\n\n");
    out.push('\n');
    Ok(out)
}
