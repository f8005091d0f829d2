//! Random traces and formulas, plus a brute-force evaluator written
//! against the plain trace data, used as the oracle for the real evaluator.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fclloop::fcl::{CmpOp, Counter, Formula, NumExpr, Term};
use fclloop::trace::{
    AssignmentMap, EntityId, EntityKind, EntityState, EnvState, Location, Role, StepRecord, Termination,
    Trace,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const ROLE_SETS: [&str; 4] = ["Villagers", "Farmers", "Warriors", "Dragons"];
pub const ENSEMBLES: [&str; 5] = ["Farm", "Attack", "GoToCave", "SpawnFarmer", "SpawnWarrior"];
pub const VARS: [&str; 2] = ["x", "y"];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A trace of 1..=12 steps with up to 4 villagers that may die (and never
/// come back), a dragon whose hp only falls, and random ensemble members.
pub fn random_trace(rng: &mut StdRng) -> Trace {
    let len = rng.random_range(1..=12);
    let mut alive: Vec<(String, Role, Location, i64)> = (1..=rng.random_range(0..=4))
        .map(|i| {
            let role = if rng.random_bool(0.5) { Role::Farmer } else { Role::Warrior };
            let loc = if rng.random_bool(0.7) { Location::Village } else { Location::Cave };
            (format!("v{i}"), role, loc, rng.random_range(1..=5))
        })
        .collect();
    let mut dragon_hp: i64 = rng.random_range(0..=6);
    let mut steps = Vec::new();
    for index in 0..len {
        let mut entities = vec![EntityState::dragon(dragon_hp)];
        for (id, role, loc, hp) in &alive {
            entities.push(EntityState::villager(id.clone(), *role, *loc, *hp));
        }
        let mut assignment = AssignmentMap::new();
        for ens in ENSEMBLES {
            if rng.random_bool(0.8) {
                assignment.touch(ens);
                for (id, ..) in &alive {
                    if rng.random_bool(0.35) {
                        assignment.insert(ens, EntityId::new(id.clone()));
                    }
                }
            }
        }
        steps.push(StepRecord {
            index,
            entities,
            env: EnvState {
                wheat: rng.random_range(0..10),
                dragon_hp,
            },
            assignment,
            events: vec![],
        });
        if rng.random_bool(0.3) {
            dragon_hp = (dragon_hp - rng.random_range(1..=3)).max(0);
        }
        alive.retain(|_| rng.random_bool(0.85));
        for v in &mut alive {
            if rng.random_bool(0.2) {
                v.2 = Location::Cave;
            }
        }
    }
    Trace {
        seed: 0,
        terminated: Termination::LossHorizon,
        steps,
    }
}

fn pick<'a>(rng: &mut StdRng, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn any_set(rng: &mut StdRng) -> &'static str {
    if rng.random_bool(0.5) {
        pick(rng, &ROLE_SETS)
    } else {
        pick(rng, &ENSEMBLES)
    }
}

fn random_num(rng: &mut StdRng, allow_neg: bool) -> NumExpr {
    let base = match rng.random_range(0..6) {
        0 => NumExpr::Counter(Counter::Max),
        1 => NumExpr::Counter(Counter::Beg),
        _ => NumExpr::Lit(rng.random_range(0..=5)),
    };
    if allow_neg && rng.random_bool(0.3) {
        NumExpr::neg(base)
    } else {
        base
    }
}

const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt];

fn int_term(rng: &mut StdRng, bound: &[&str]) -> Term {
    match rng.random_range(0..5) {
        0 => Term::Int(rng.random_range(-2..=6)),
        1 => Term::Counter(if rng.random_bool(0.5) { Counter::Max } else { Counter::Beg }),
        2 => Term::Count(any_set(rng).to_string()),
        _ if !bound.is_empty() => Term::Attr {
            var: pick(rng, bound).to_string(),
            attr: "hp".into(),
        },
        _ => Term::Int(rng.random_range(0..=3)),
    }
}

fn atom(rng: &mut StdRng, bound: &[&str]) -> Formula {
    if !bound.is_empty() && rng.random_bool(0.4) {
        if rng.random_bool(0.5) {
            return Formula::member(pick(rng, bound), any_set(rng));
        }
        let var = pick(rng, bound).to_string();
        let (attr, values): (&str, &[&str]) = match rng.random_range(0..3) {
            0 => ("role", &["Farmer", "Warrior"]),
            1 => ("location", &["Village", "Cave"]),
            _ => ("kind", &["Villager", "Dragon"]),
        };
        let op = if rng.random_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
        return Formula::compare(
            Term::Attr {
                var,
                attr: attr.into(),
            },
            op,
            Term::Str(pick(rng, values).to_string()),
        );
    }
    let op = OPS[rng.random_range(0..OPS.len())];
    Formula::compare(int_term(rng, bound), op, int_term(rng, bound))
}

/// A well-typed formula whose variables are all bound.
pub fn random_formula(rng: &mut StdRng, depth: usize) -> Formula {
    formula_in(rng, depth, &[])
}

fn formula_in(rng: &mut StdRng, depth: usize, bound: &[&'static str]) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return atom(rng, bound);
    }
    let d = depth - 1;
    match rng.random_range(0..8) {
        0 => Formula::not(formula_in(rng, d, bound)),
        1 => Formula::and(formula_in(rng, d, bound), formula_in(rng, d, bound)),
        2 => Formula::or(formula_in(rng, d, bound), formula_in(rng, d, bound)),
        3 => Formula::implies(formula_in(rng, d, bound), formula_in(rng, d, bound)),
        4 | 5 => {
            let n = random_num(rng, false);
            let t = random_num(rng, true);
            Formula::window(n, t, formula_in(rng, d, bound))
        }
        _ => {
            let var = pick(rng, &VARS);
            let mut inner: Vec<&'static str> = bound.to_vec();
            if !inner.contains(&var) {
                inner.push(var);
            }
            let body = formula_in(rng, d, &inner);
            let dom = any_set(rng);
            if rng.random_bool(0.5) {
                Formula::forall(var, dom, body)
            } else {
                Formula::exists(var, dom, body)
            }
        }
    }
}

/// Brute-force evaluator. Reads entity and assignment data straight from
/// the step records and recomputes every window by scanning all steps.
pub struct Oracle<'a> {
    pub trace: &'a Trace,
}

#[derive(Debug, PartialEq, Eq)]
enum V {
    I(i64),
    S(String),
    Missing,
}

impl<'a> Oracle<'a> {
    pub fn new(trace: &'a Trace) -> Self {
        Self { trace }
    }

    fn members(&self, step: usize, set: &str) -> Vec<String> {
        let rec = &self.trace.steps[step];
        let ids = |f: &dyn Fn(&EntityState) -> bool| -> Vec<String> {
            let mut v: Vec<String> = rec.entities.iter().filter(|e| f(e)).map(|e| e.id.to_string()).collect();
            v.sort();
            v
        };
        match set {
            "Villagers" => ids(&|e| e.kind == EntityKind::Villager),
            "Farmers" => ids(&|e| e.role == Some(Role::Farmer)),
            "Warriors" => ids(&|e| e.role == Some(Role::Warrior)),
            "Dragons" => ids(&|e| e.kind == EntityKind::Dragon),
            ens => rec
                .assignment
                .members(ens)
                .map(|m| m.iter().map(|id| id.to_string()).collect())
                .unwrap_or_default(),
        }
    }

    fn num(&self, step: usize, n: &NumExpr) -> i64 {
        match n {
            NumExpr::Lit(v) => *v as i64,
            NumExpr::Counter(Counter::Beg) => step as i64,
            NumExpr::Counter(Counter::Max) => self.trace.steps.len() as i64 - step as i64,
            NumExpr::Counter(Counter::Inf) => panic!("oracle does not handle INF"),
            NumExpr::Neg(inner) => -self.num(step, inner),
        }
    }

    fn term(&self, step: usize, t: &Term, env: &BTreeMap<String, String>) -> V {
        match t {
            Term::Int(v) => V::I(*v),
            Term::Str(s) => V::S(s.clone()),
            Term::Counter(c) => V::I(self.num(step, &NumExpr::Counter(*c))),
            Term::Count(s) => V::I(self.members(step, s).len() as i64),
            Term::Attr { var, attr } => {
                let id = &env[var];
                let Some(e) = self.trace.steps[step].entities.iter().find(|e| e.id.as_str() == id) else {
                    return V::Missing;
                };
                match attr.as_str() {
                    "hp" => V::I(e.hp),
                    "kind" => V::S(if e.kind == EntityKind::Dragon { "Dragon" } else { "Villager" }.into()),
                    "role" => match e.role {
                        Some(Role::Farmer) => V::S("Farmer".into()),
                        Some(Role::Warrior) => V::S("Warrior".into()),
                        None => V::Missing,
                    },
                    "location" => match e.location {
                        Some(Location::Village) => V::S("Village".into()),
                        Some(Location::Cave) => V::S("Cave".into()),
                        None => V::Missing,
                    },
                    other => panic!("oracle: unknown attribute {other}"),
                }
            }
        }
    }

    /// Truth of `f` at `step`. Panics on malformed input instead of
    /// reporting it.
    pub fn holds(&self, step: usize, f: &Formula, env: &BTreeMap<String, String>) -> bool {
        let len = self.trace.steps.len() as i64;
        match f {
            Formula::Compare { lhs, op, rhs } => {
                match (self.term(step, lhs, env), self.term(step, rhs, env)) {
                    (V::I(a), V::I(b)) => match op {
                        CmpOp::Lt => a < b,
                        CmpOp::Le => a <= b,
                        CmpOp::Eq => a == b,
                        CmpOp::Ne => a != b,
                        CmpOp::Ge => a >= b,
                        CmpOp::Gt => a > b,
                    },
                    (V::S(a), V::S(b)) => match op {
                        CmpOp::Eq => a == b,
                        CmpOp::Ne => a != b,
                        _ => false,
                    },
                    _ => false,
                }
            }
            Formula::Member { var, set } => {
                let id = &env[var];
                let present = self.trace.steps[step].entities.iter().any(|e| e.id.as_str() == id);
                present && self.members(step, set).contains(id)
            }
            Formula::Window { n, t, body } => {
                let need = self.num(step, n);
                let t = self.num(step, t);
                let i = step as i64;
                let hits = (0..len)
                    .filter(|&j| if t >= 0 { i <= j && j < i + t } else { i + t <= j && j < i })
                    .filter(|&j| self.holds(j as usize, body, env))
                    .count() as i64;
                hits >= need
            }
            Formula::Not(g) => !self.holds(step, g, env),
            Formula::And(a, b) => self.holds(step, a, env) && self.holds(step, b, env),
            Formula::Or(a, b) => self.holds(step, a, env) || self.holds(step, b, env),
            Formula::Implies(a, b) => !self.holds(step, a, env) || self.holds(step, b, env),
            Formula::Forall { var, domain, body } => self.members(step, domain).into_iter().all(|id| {
                let mut e = env.clone();
                e.insert(var.clone(), id);
                self.holds(step, body, &e)
            }),
            Formula::Exists { var, domain, body } => self.members(step, domain).into_iter().any(|id| {
                let mut e = env.clone();
                e.insert(var.clone(), id);
                self.holds(step, body, &e)
            }),
        }
    }

    pub fn holds_closed(&self, step: usize, f: &Formula) -> bool {
        self.holds(step, f, &BTreeMap::new())
    }
}

/// A random assignment over `villagers`, sometimes with extra ensembles,
/// unknown ids, duplicates or missing villagers.
pub fn random_assignment(rng: &mut StdRng, villagers: &[EntityId]) -> AssignmentMap {
    let mut a = AssignmentMap::new();
    for v in villagers {
        let copies = match rng.random_range(0..10) {
            0 => 0,
            1 => 2,
            _ => 1,
        };
        let mut used = BTreeSet::new();
        for _ in 0..copies {
            let ens = if rng.random_range(0..20) == 0 { "Defend" } else { pick(rng, &ENSEMBLES) };
            if used.insert(ens) {
                a.insert(ens, v.clone());
            }
        }
    }
    if rng.random_range(0..10) == 0 {
        a.insert(pick(rng, &ENSEMBLES), EntityId::new("v99"));
    }
    if rng.random_range(0..10) == 0 {
        a.touch("Patrol");
    }
    a
}

pub fn villager_ids(n: usize) -> Vec<EntityId> {
    (1..=n).map(|i| EntityId::new(format!("v{i}"))).collect()
}
