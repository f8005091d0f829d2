use std::collections::BTreeMap;
use std::ops::Range;

use serde::Serialize;

use super::{Env, EvalError, Evaluator, MAX_EXCERPT_STEPS, MAX_FAILING_STEPS};
use crate::fcl::{render_formula, Formula};
use crate::trace::{EntityId, Value};

/// One piece of state evidence: a set's contents or an attribute value at a
/// step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Excerpt {
    pub step: usize,
    pub subject: String,
    pub value: String,
}

/// Evidence for one failed evaluation anchor.
///
/// When the failure is a window, `window`, `required` and `achieved` describe
/// it and `body` is the window body; otherwise the window is the anchor step
/// alone, `required` is 1 and `body` is the subformula that was false there.
/// In both cases re-evaluating `body` at each of `failing_steps` under
/// `witnesses` gives false.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub constraint_name: String,
    pub anchor_step: usize,
    pub window: Range<usize>,
    pub required: u64,
    pub achieved: u64,
    /// Capped at [`MAX_FAILING_STEPS`].
    pub failing_steps: Vec<usize>,
    /// Uncapped number of failing steps.
    pub failing_total: usize,
    pub witnesses: BTreeMap<String, EntityId>,
    pub excerpts: Vec<Excerpt>,
    pub body: Formula,
    /// True when `window`/`required`/`achieved` come from a counting window.
    pub from_window: bool,
}

impl Counterexample {
    pub fn deficit(&self) -> u64 {
        self.required.saturating_sub(self.achieved)
    }

    /// Bindings as an evaluation environment, for re-checking `body`.
    pub fn witness_env(&self) -> Env {
        self.witnesses
            .iter()
            .fold(Env::new(), |env, (v, id)| env.bind(v, id.clone()))
    }

    /// 1-based inclusive window `[lo, hi]`; `hi < lo` for an empty window.
    pub fn window_1based(&self) -> (usize, usize) {
        (self.window.start + 1, self.window.end)
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct ExcerptDoc<'a> {
            step_1based: usize,
            subject: &'a str,
            value: &'a str,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            anchor_step_1based: usize,
            window_1based: [usize; 2],
            required: u64,
            achieved: u64,
            failing_steps_1based: Vec<usize>,
            failing_steps_total: usize,
            witnesses: &'a BTreeMap<String, EntityId>,
            excerpts: Vec<ExcerptDoc<'a>>,
            body: String,
        }
        let (lo, hi) = self.window_1based();
        serde_json::to_value(Doc {
            anchor_step_1based: self.anchor_step + 1,
            window_1based: [lo, hi],
            required: self.required,
            achieved: self.achieved,
            failing_steps_1based: self.failing_steps.iter().map(|s| s + 1).collect(),
            failing_steps_total: self.failing_total,
            witnesses: &self.witnesses,
            excerpts: self
                .excerpts
                .iter()
                .map(|e| ExcerptDoc {
                    step_1based: e.step + 1,
                    subject: &e.subject,
                    value: &e.value,
                })
                .collect(),
            body: render_formula(&self.body),
        })
        .expect("counterexample serializes")
    }
}

struct WindowFailure {
    required: i64,
    achieved: usize,
    window: Range<usize>,
    false_steps: Vec<usize>,
}

/// Where the explanation of a false formula bottomed out.
struct Explanation {
    formula: Formula,
    env: Env,
    window: Option<WindowFailure>,
    /// Subformulas that were true at the anchor and framed the failure
    /// (implication antecedents); their sets are shown as context.
    context: Vec<Formula>,
}

/// Builds the counterexample for `formula` being false at `anchor`.
pub(super) fn build(
    ev: &Evaluator<'_>,
    name: &str,
    anchor: usize,
    formula: &Formula,
) -> Result<Counterexample, EvalError> {
    let ex = explain(ev, anchor, formula, &Env::new(), Vec::new())?;
    let witnesses: BTreeMap<String, EntityId> = ex.env.visible().into_iter().collect();
    let (window, required, achieved, false_steps, body, from_window) = match ex.window {
        Some(w) => {
            let Formula::Window { body, .. } = &ex.formula else {
                unreachable!("window failure without a window formula")
            };
            (
                w.window,
                w.required.max(0) as u64,
                w.achieved as u64,
                w.false_steps,
                (**body).clone(),
                true,
            )
        }
        None => (anchor..anchor + 1, 1, 0, vec![anchor], ex.formula.clone(), false),
    };
    let failing_total = false_steps.len();
    let failing_steps: Vec<usize> = false_steps.into_iter().take(MAX_FAILING_STEPS).collect();

    // anchor state first, then what framed the failure, then failing steps
    let mut excerpts = state_excerpts(ev, anchor, &body, &ex.env)?;
    for ctx in &ex.context {
        excerpts.extend(state_excerpts(ev, anchor, ctx, &ex.env)?);
    }
    for &step in failing_steps.iter().take(MAX_EXCERPT_STEPS) {
        if step != anchor {
            excerpts.extend(state_excerpts(ev, step, &body, &ex.env)?);
        }
    }
    let mut seen = Vec::new();
    excerpts.retain(|e| {
        let fresh = !seen.contains(e);
        if fresh {
            seen.push(e.clone());
        }
        fresh
    });

    Ok(Counterexample {
        constraint_name: name.to_string(),
        anchor_step: anchor,
        window,
        required,
        achieved,
        failing_steps,
        failing_total,
        witnesses,
        excerpts,
        body,
        from_window,
    })
}

fn explain(
    ev: &Evaluator<'_>,
    step: usize,
    f: &Formula,
    env: &Env,
    mut context: Vec<Formula>,
) -> Result<Explanation, EvalError> {
    let stop = |context| Explanation {
        formula: f.clone(),
        env: env.clone(),
        window: None,
        context,
    };
    match f {
        Formula::Forall { var, domain, body } => {
            for id in ev.set_at(step, domain)? {
                let inner = env.bind(var, id);
                if !ev.eval(step, body, &inner)? {
                    return explain(ev, step, body, &inner, context);
                }
            }
            Ok(stop(context))
        }
        Formula::Exists { var, domain, body } => {
            // every element fails; the first one stands for all of them
            match ev.set_at(step, domain)?.into_iter().next() {
                Some(id) => explain(ev, step, body, &env.bind(var, id), context),
                None => Ok(stop(context)),
            }
        }
        Formula::Window { n, t, body } => {
            let required = ev.num(n, step)?;
            let t = ev.num(t, step)?;
            let wc = ev.count_window(step, t, body, env)?;
            Ok(Explanation {
                formula: f.clone(),
                env: env.clone(),
                window: Some(WindowFailure {
                    required,
                    achieved: wc.count,
                    window: wc.window,
                    false_steps: wc.false_steps,
                }),
                context,
            })
        }
        Formula::And(a, b) => {
            if !ev.eval(step, a, env)? {
                explain(ev, step, a, env, context)
            } else {
                explain(ev, step, b, env, context)
            }
        }
        Formula::Or(a, b) => {
            let left = explain(ev, step, a, env, context.clone())?;
            if left.window.is_some() {
                return Ok(left);
            }
            let right = explain(ev, step, b, env, context)?;
            Ok(if right.window.is_some() { right } else { left })
        }
        Formula::Implies(a, b) => {
            context.push((**a).clone());
            explain(ev, step, b, env, context)
        }
        Formula::Not(_) | Formula::Compare { .. } | Formula::Member { .. } => Ok(stop(context)),
    }
}

fn show_set(ids: &std::collections::BTreeSet<EntityId>) -> String {
    let inner: Vec<&str> = ids.iter().map(EntityId::as_str).collect();
    format!("{{{}}}", inner.join(", "))
}

fn state_excerpts(
    ev: &Evaluator<'_>,
    step: usize,
    f: &Formula,
    env: &Env,
) -> Result<Vec<Excerpt>, EvalError> {
    let mut out = Vec::new();
    for set in f.referenced_sets() {
        out.push(Excerpt {
            step,
            subject: set.clone(),
            value: show_set(&ev.set_at(step, &set)?),
        });
    }
    for (var, attr) in f.referenced_attrs() {
        // variables bound inside `f` itself have no single value here
        let Some(id) = env.get(&var) else { continue };
        let value = ev.trace().attr_at(step, id.as_str(), &attr)?;
        out.push(Excerpt {
            step,
            subject: format!("{id}.{attr}"),
            value: match value {
                Value::Absent => "absent".into(),
                v => v.to_string(),
            },
        });
    }
    Ok(out)
}
