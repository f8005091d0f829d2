//! The generate, verify, repair loop around a code generator.

mod experiment;
mod generator;
mod looping;
mod prompt;
mod report;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use experiment::{histogram, run_experiment, ExperimentResult, ExperimentRow};
pub use generator::{
    extract_code, generator_catalog, make_generator, BuiltinGenerator, CodeGenerator,
    GeneratorSpec, HttpChatGenerator, HttpGeneratorConfig, ReplayGenerator,
};
pub use looping::{run_feedback_loop, IterationRecord, LoopOutcome, LoopSettings, DEFAULT_MAX_ITERATIONS};
pub use prompt::{build_prompt, constraints_listing, PromptTemplate, ScenarioDocs, DEFAULT_TEMPLATE};
pub use report::{
    metrics_bullet, render_report, MAX_EXCERPTS_PER_BULLET, MAX_GENERIC_PER_RUN, MAX_REPORT_BULLETS,
};

use crate::sim::SimError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeedbackError {
    #[error("prompt template is missing section `{0}`")]
    MissingSection(String),
    #[error("code generator unavailable: {0}")]
    GeneratorUnavailable(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<std::io::Error> for FeedbackError {
    fn from(e: std::io::Error) -> Self {
        FeedbackError::Io(e.to_string())
    }
}

/// How much verification detail goes back to the generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeedbackVariant {
    MetricsOnly,
    GenericOnly,
    FullConstraint,
}

impl FeedbackVariant {
    pub const ALL: [FeedbackVariant; 3] = [
        FeedbackVariant::MetricsOnly,
        FeedbackVariant::GenericOnly,
        FeedbackVariant::FullConstraint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeedbackVariant::MetricsOnly => "metrics",
            FeedbackVariant::GenericOnly => "generic",
            FeedbackVariant::FullConstraint => "full",
        }
    }
}

impl fmt::Display for FeedbackVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeedbackVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "metrics" | "MetricsOnly" => Ok(FeedbackVariant::MetricsOnly),
            "generic" | "GenericOnly" => Ok(FeedbackVariant::GenericOnly),
            "full" | "FullConstraint" => Ok(FeedbackVariant::FullConstraint),
            other => Err(format!("unknown feedback variant {other:?} (expected metrics, generic or full)")),
        }
    }
}
