//! Functional Constraints Logic: syntax tree, parser and canonical printer.
//!
//! The core operator is the counting window `F[>=n, t] body`: at step `i` it
//! holds when `body` is true at no fewer than `n` steps of `[i, i+t)` (or of
//! `[i+t, i)` when `t` is negative). `G[t] body` is shorthand for
//! `F[>=t, t] body` and `P[>=n, t] body` for `F[>=n, -t] body`. The counters
//! `BEG` and `MAX` give the distance to the start and end of a finite trace.

mod ast;
mod lexer;
mod parser;
mod render;

use std::fmt;

use thiserror::Error;

pub use ast::{CmpOp, Constraint, Counter, Formula, Mode, NumExpr, Term};
pub use parser::{is_reserved, parse_constraints, parse_formula};
pub use render::{render, render_constraints, render_formula};

use crate::trace::{EnsembleCatalog, ROLE_SETS};

/// The constraint file shipped with the crate: the Dragon Hunt strategy
/// requirements.
pub const BUNDLED_CONSTRAINTS: &str = include_str!("../../assets/dragon_hunt.fcl");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrType {
    Int,
    Str,
}

/// Sets and attributes that constraints may mention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalog {
    pub ensembles: EnsembleCatalog,
}

impl Catalog {
    pub fn new(ensembles: EnsembleCatalog) -> Self {
        Self { ensembles }
    }

    pub fn dragon_hunt() -> Self {
        Self::new(EnsembleCatalog::dragon_hunt())
    }

    pub fn has_set(&self, name: &str) -> bool {
        ROLE_SETS.contains(&name) || self.ensembles.contains(name)
    }

    /// Role sets first, then ensembles in catalog order.
    pub fn set_names(&self) -> Vec<String> {
        ROLE_SETS
            .iter()
            .map(|s| s.to_string())
            .chain(self.ensembles.names().iter().cloned())
            .collect()
    }

    pub fn attr_type(&self, attr: &str) -> Option<AttrType> {
        match attr {
            "hp" => Some(AttrType::Int),
            "role" | "location" | "kind" => Some(AttrType::Str),
            _ => None,
        }
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Self::dragon_hunt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    UnknownSet,
    UnknownAttribute,
    FreeVariable,
    NegativeCount,
    NegativeWindow,
    InvalidWindow,
    TypeMismatch,
    DuplicateName,
}

/// A parse problem with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn new(tok: &lexer::Token, kind: DiagnosticKind, message: String) -> Self {
        Self {
            line: tok.line,
            col: tok.col,
            kind,
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FclError {
    #[error("always-window length must not be negative")]
    NegativeWindow,
    #[error("always-window length must be a non-negative integer or MAX")]
    InvalidAlwaysWindow,
}

/// `G[t] body` as `F[>=t, t] body`: the body must hold at every step of the
/// window.
pub fn desugar_always(t: NumExpr, body: Formula) -> Result<Formula, FclError> {
    match t {
        NumExpr::Lit(_) | NumExpr::Counter(Counter::Max) => Ok(Formula::window(t.clone(), t, body)),
        NumExpr::Neg(_) => Err(FclError::NegativeWindow),
        NumExpr::Counter(_) => Err(FclError::InvalidAlwaysWindow),
    }
}

/// Parses [`BUNDLED_CONSTRAINTS`] against the Dragon Hunt catalog.
pub fn bundled_constraints() -> Vec<Constraint> {
    parse_constraints(BUNDLED_CONSTRAINTS, &Catalog::dragon_hunt())
        .expect("bundled constraint file parses")
}
