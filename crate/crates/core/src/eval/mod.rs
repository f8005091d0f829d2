//! Finite-trace evaluation of FCL constraints.
//!
//! Window arithmetic, for a trace of length `L` evaluated at step `i`:
//!
//! - `BEG = i`, `MAX = L - i` (the current step counts as remaining).
//! - `t >= 0` covers `[i, i+t)`, `t < 0` covers `[i+t, i)`; both are clipped to
//!   `[0, L)` and steps outside the trace never satisfy the body.
//! - any atom that mentions an entity absent at the evaluated step is false.

mod counterexample;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

pub use counterexample::{Counterexample, Excerpt};

use crate::fcl::{Catalog, CmpOp, Constraint, Counter, Formula, Mode, NumExpr, Term};
use crate::trace::{EntityId, Trace, TraceError, Value};

/// At most this many counterexamples are kept per constraint.
pub const MAX_COUNTEREXAMPLES: usize = 10;
/// At most this many failing steps are listed per counterexample.
pub const MAX_FAILING_STEPS: usize = 20;
/// At most this many failing steps get state excerpts.
pub const MAX_EXCERPT_STEPS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("INF is not supported on finite traces")]
    InfiniteTraceUnsupported,
    #[error("unknown set `{0}`")]
    UnknownSet(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("step {step} out of range for a trace of length {len}")]
    StepOutOfRange { step: usize, len: usize },
    #[error("cannot evaluate over an empty trace")]
    EmptyTrace,
}

impl From<TraceError> for EvalError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::UnknownSet(s) => EvalError::UnknownSet(s),
            TraceError::UnknownAttribute(a) => EvalError::UnknownAttribute(a),
            TraceError::StepOutOfRange { step, len } => EvalError::StepOutOfRange { step, len },
            other => EvalError::UnknownSet(other.to_string()),
        }
    }
}

/// Variable bindings. Later bindings shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    bindings: Vec<(String, EntityId)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&self, var: &str, id: EntityId) -> Env {
        let mut next = self.clone();
        next.bindings.push((var.to_string(), id));
        next
    }

    pub fn get(&self, var: &str) -> Option<&EntityId> {
        self.bindings
            .iter()
            .rev()
            .find(|(v, _)| v == var)
            .map(|(_, id)| id)
    }

    /// Visible bindings, one per variable, in binding order.
    pub fn visible(&self) -> Vec<(String, EntityId)> {
        let mut out: Vec<(String, EntityId)> = Vec::new();
        for (v, id) in &self.bindings {
            out.retain(|(w, _)| w != v);
            out.push((v.clone(), id.clone()));
        }
        out
    }
}

/// `BEG`, `MAX` or `INF` at `step` of a trace of length `trace_len`.
pub fn counter_value(kind: Counter, step: usize, trace_len: usize) -> Result<i64, EvalError> {
    match kind {
        Counter::Beg => Ok(step as i64),
        Counter::Max => Ok(trace_len as i64 - step as i64),
        Counter::Inf => Err(EvalError::InfiniteTraceUnsupported),
    }
}

/// Result of counting a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowCount {
    pub count: usize,
    /// Clipped to the trace; may be empty.
    pub window: Range<usize>,
    /// In-window steps where the body was false.
    pub false_steps: Vec<usize>,
}

/// Clipped window of length `t` anchored at `step`.
pub fn window_bounds(step: usize, t: i64, trace_len: usize) -> Range<usize> {
    let (lo, hi) = if t >= 0 {
        (step as i64, step as i64 + t)
    } else {
        (step as i64 + t, step as i64)
    };
    let lo = lo.clamp(0, trace_len as i64) as usize;
    let hi = hi.clamp(0, trace_len as i64) as usize;
    lo..hi.max(lo)
}

/// Evaluates formulas over one trace.
#[derive(Clone, Copy)]
pub struct Evaluator<'a> {
    trace: &'a Trace,
    catalog: &'a Catalog,
}

impl<'a> Evaluator<'a> {
    pub fn new(trace: &'a Trace, catalog: &'a Catalog) -> Self {
        Self { trace, catalog }
    }

    pub fn trace(&self) -> &'a Trace {
        self.trace
    }

    pub fn num(&self, n: &NumExpr, step: usize) -> Result<i64, EvalError> {
        match n {
            NumExpr::Lit(v) => Ok(*v as i64),
            NumExpr::Counter(c) => counter_value(*c, step, self.trace.len()),
            NumExpr::Neg(inner) => Ok(-self.num(inner, step)?),
        }
    }

    pub fn count_window(
        &self,
        step: usize,
        t: i64,
        body: &Formula,
        env: &Env,
    ) -> Result<WindowCount, EvalError> {
        let window = window_bounds(step, t, self.trace.len());
        let mut count = 0;
        let mut false_steps = Vec::new();
        for j in window.clone() {
            if self.eval(j, body, env)? {
                count += 1;
            } else {
                false_steps.push(j);
            }
        }
        Ok(WindowCount {
            count,
            window,
            false_steps,
        })
    }

    pub fn set_at(&self, step: usize, set: &str) -> Result<BTreeSet<EntityId>, EvalError> {
        if !self.catalog.has_set(set) {
            return Err(EvalError::UnknownSet(set.to_string()));
        }
        Ok(self.trace.set_at(step, set, &self.catalog.ensembles)?)
    }

    pub fn eval(&self, step: usize, f: &Formula, env: &Env) -> Result<bool, EvalError> {
        if step >= self.trace.len() {
            return Err(EvalError::StepOutOfRange {
                step,
                len: self.trace.len(),
            });
        }
        Ok(match f {
            Formula::Compare { lhs, op, rhs } => {
                let a = self.term(step, lhs, env)?;
                let b = self.term(step, rhs, env)?;
                compare(&a, *op, &b)
            }
            Formula::Member { var, set } => {
                let id = self.lookup(env, var)?;
                self.trace.steps[step].entity(id.as_str()).is_some()
                    && self.set_at(step, set)?.contains(id)
            }
            Formula::Window { n, t, body } => {
                let n = self.num(n, step)?;
                let t = self.num(t, step)?;
                self.count_window(step, t, body, env)?.count as i64 >= n
            }
            Formula::Not(g) => !self.eval(step, g, env)?,
            Formula::And(a, b) => self.eval(step, a, env)? && self.eval(step, b, env)?,
            Formula::Or(a, b) => self.eval(step, a, env)? || self.eval(step, b, env)?,
            Formula::Implies(a, b) => !self.eval(step, a, env)? || self.eval(step, b, env)?,
            Formula::Forall { var, domain, body } => {
                for id in self.set_at(step, domain)? {
                    if !self.eval(step, body, &env.bind(var, id))? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Exists { var, domain, body } => {
                for id in self.set_at(step, domain)? {
                    if self.eval(step, body, &env.bind(var, id))? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    fn lookup<'e>(&self, env: &'e Env, var: &str) -> Result<&'e EntityId, EvalError> {
        env.get(var)
            .ok_or_else(|| EvalError::UnboundVariable(var.to_string()))
    }

    pub fn term(&self, step: usize, t: &Term, env: &Env) -> Result<Value, EvalError> {
        Ok(match t {
            Term::Int(v) => Value::Int(*v),
            Term::Str(s) => Value::Str(s.clone()),
            Term::Counter(c) => Value::Int(counter_value(*c, step, self.trace.len())?),
            Term::Count(set) => Value::Int(self.set_at(step, set)?.len() as i64),
            Term::Attr { var, attr } => {
                if self.catalog.attr_type(attr).is_none() {
                    return Err(EvalError::UnknownAttribute(attr.clone()));
                }
                let id = self.lookup(env, var)?;
                self.trace.attr_at(step, id.as_str(), attr)?
            }
        })
    }
}

fn compare(a: &Value, op: CmpOp, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => op.holds(x, y),
        (Value::Str(x), Value::Str(y)) => match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            _ => false,
        },
        _ => false,
    }
}

/// Truth of `f` at `step` under `env`.
pub fn eval_formula(
    trace: &Trace,
    catalog: &Catalog,
    step: usize,
    f: &Formula,
    env: &Env,
) -> Result<bool, EvalError> {
    Evaluator::new(trace, catalog).eval(step, f, env)
}

/// Outcome of checking one constraint on one trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub constraint_name: String,
    pub satisfied: bool,
    pub violations: Vec<Counterexample>,
    /// Violating anchors beyond [`MAX_COUNTEREXAMPLES`].
    pub omitted: usize,
    /// Set when evaluation itself failed; such a verdict is never satisfied.
    pub error: Option<String>,
}

impl Verdict {
    fn errored(name: &str, e: EvalError) -> Self {
        Verdict {
            constraint_name: name.to_string(),
            satisfied: false,
            violations: vec![],
            omitted: 0,
            error: Some(e.to_string()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Doc<'a> {
            constraint: &'a str,
            satisfied: bool,
            violations: Vec<serde_json::Value>,
            #[serde(skip_serializing_if = "is_zero")]
            omitted: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            error: &'a Option<String>,
        }
        fn is_zero(n: &usize) -> bool {
            *n == 0
        }
        serde_json::to_value(Doc {
            constraint: &self.constraint_name,
            satisfied: self.satisfied,
            violations: self.violations.iter().map(Counterexample::to_json).collect(),
            omitted: self.omitted,
            error: &self.error,
        })
        .expect("verdict serializes")
    }
}

/// Checks `c` on `trace`: at step 0 for `at start`, at every step for
/// `at each step`.
pub fn eval_constraint(trace: &Trace, catalog: &Catalog, c: &Constraint) -> Verdict {
    if trace.is_empty() {
        return Verdict::errored(&c.name, EvalError::EmptyTrace);
    }
    let ev = Evaluator::new(trace, catalog);
    let anchors: Vec<usize> = match c.mode {
        Mode::AtStart => vec![0],
        Mode::AtEachStep => (0..trace.len()).collect(),
    };
    let mut violations = Vec::new();
    let mut omitted = 0;
    for anchor in anchors {
        match ev.eval(anchor, &c.formula, &Env::new()) {
            Ok(true) => {}
            Ok(false) if violations.len() >= MAX_COUNTEREXAMPLES => omitted += 1,
            Ok(false) => match counterexample::build(&ev, &c.name, anchor, &c.formula) {
                Ok(cx) => violations.push(cx),
                Err(e) => return Verdict::errored(&c.name, e),
            },
            Err(e) => return Verdict::errored(&c.name, e),
        }
    }
    Verdict {
        constraint_name: c.name.clone(),
        satisfied: violations.is_empty(),
        violations,
        omitted,
        error: None,
    }
}

/// Checks every constraint, in order.
pub fn eval_constraints(trace: &Trace, catalog: &Catalog, cs: &[Constraint]) -> Vec<Verdict> {
    cs.iter().map(|c| eval_constraint(trace, catalog, c)).collect()
}
