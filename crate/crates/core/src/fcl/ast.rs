use std::fmt;

/// Trace-boundary counters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Counter {
    /// Steps elapsed since the beginning of the trace.
    Beg,
    /// Steps remaining to the end of the trace, current step included.
    Max,
    /// Infinite-trace marker; rejected when evaluating finite traces.
    Inf,
}

impl Counter {
    pub fn keyword(self) -> &'static str {
        match self {
            Counter::Beg => "BEG",
            Counter::Max => "MAX",
            Counter::Inf => "INF",
        }
    }
}

/// Count or length expression inside a window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NumExpr {
    Lit(u64),
    Counter(Counter),
    /// Only ever wraps `Lit` or `Counter`.
    Neg(Box<NumExpr>),
}

impl NumExpr {
    pub fn neg(inner: NumExpr) -> Self {
        NumExpr::Neg(Box::new(inner))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Int(i64),
    Counter(Counter),
    Attr { var: String, attr: String },
    /// `count(S)`, the cardinality of a set at the evaluated step.
    Count(String),
    Str(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Compare { lhs: Term, op: CmpOp, rhs: Term },
    Member { var: String, set: String },
    /// Holds iff `body` holds at least `n` times in the window of length `t`
    /// starting at the current step (or ending before it when `t < 0`).
    Window { n: NumExpr, t: NumExpr, body: Box<Formula> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall { var: String, domain: String, body: Box<Formula> },
    Exists { var: String, domain: String, body: Box<Formula> },
}

impl Formula {
    pub fn window(n: NumExpr, t: NumExpr, body: Formula) -> Self {
        Formula::Window {
            n,
            t,
            body: Box::new(body),
        }
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(var: &str, domain: &str, body: Formula) -> Self {
        Formula::Forall {
            var: var.into(),
            domain: domain.into(),
            body: Box::new(body),
        }
    }

    pub fn exists(var: &str, domain: &str, body: Formula) -> Self {
        Formula::Exists {
            var: var.into(),
            domain: domain.into(),
            body: Box::new(body),
        }
    }

    pub fn compare(lhs: Term, op: CmpOp, rhs: Term) -> Self {
        Formula::Compare { lhs, op, rhs }
    }

    pub fn member(var: &str, set: &str) -> Self {
        Formula::Member {
            var: var.into(),
            set: set.into(),
        }
    }

    /// Nesting depth; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Compare { .. } | Formula::Member { .. } => 0,
            Formula::Not(f)
            | Formula::Window { body: f, .. }
            | Formula::Forall { body: f, .. }
            | Formula::Exists { body: f, .. } => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Set names read by atoms (membership and `count`), in first-seen order.
    pub fn referenced_sets(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |f| {
            let names: Vec<&String> = match f {
                Formula::Member { set, .. } => vec![set],
                Formula::Compare { lhs, rhs, .. } => [lhs, rhs]
                    .into_iter()
                    .filter_map(|t| match t {
                        Term::Count(s) => Some(s),
                        _ => None,
                    })
                    .collect(),
                _ => vec![],
            };
            for n in names {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    /// `(var, attr)` pairs read by atoms, in first-seen order.
    pub fn referenced_attrs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |f| {
            if let Formula::Compare { lhs, rhs, .. } = f {
                for t in [lhs, rhs] {
                    if let Term::Attr { var, attr } = t {
                        let key = (var.clone(), attr.clone());
                        if !out.contains(&key) {
                            out.push(key);
                        }
                    }
                }
            }
        });
        out
    }

    fn visit_atoms(&self, visit: &mut dyn FnMut(&Formula)) {
        match self {
            Formula::Compare { .. } | Formula::Member { .. } => visit(self),
            Formula::Not(f)
            | Formula::Window { body: f, .. }
            | Formula::Forall { body: f, .. }
            | Formula::Exists { body: f, .. } => f.visit_atoms(visit),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_atoms(visit);
                b.visit_atoms(visit);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Evaluated once, at step 0.
    AtStart,
    /// Evaluated at every step.
    AtEachStep,
}

#[derive(Clone, Debug, Eq)]
pub struct Constraint {
    pub name: String,
    pub mode: Mode,
    pub formula: Formula,
    /// Plain-language description taken from `#|` lines above the constraint.
    pub gloss: Option<String>,
    /// The constraint as written in its source file.
    pub source_text: String,
}

/// Structural equality: `source_text` is ignored.
impl PartialEq for Constraint {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.mode == other.mode
            && self.formula == other.formula
            && self.gloss == other.gloss
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render_formula(self))
    }
}
