//! Canonical printer. Parsing the output yields the same syntax tree.

use super::ast::*;

const QUANT: u8 = 0;
const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const UNARY: u8 = 4;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Forall { .. } | Formula::Exists { .. } => QUANT,
        Formula::Implies(..) => IMPLIES,
        Formula::Or(..) => OR,
        Formula::And(..) => AND,
        _ => UNARY,
    }
}

pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, QUANT);
    out
}

/// Canonical text of a constraint, preceded by its gloss lines.
pub fn render(c: &Constraint) -> String {
    let mut out = String::new();
    if let Some(g) = &c.gloss {
        out.push_str("#| ");
        out.push_str(g);
        out.push('\n');
    }
    let mode = match c.mode {
        Mode::AtStart => "at start",
        Mode::AtEachStep => "at each step",
    };
    out.push_str(&format!(
        "constraint {} {mode}: {}",
        quote(&c.name),
        render_formula(&c.formula)
    ));
    out
}

pub fn render_constraints(cs: &[Constraint]) -> String {
    cs.iter().map(|c| render(c) + "\n").collect::<Vec<_>>().join("\n")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn num(n: &NumExpr) -> String {
    match n {
        NumExpr::Lit(v) => v.to_string(),
        NumExpr::Counter(c) => c.keyword().to_string(),
        NumExpr::Neg(inner) => format!("-{}", num(inner)),
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Int(v) => v.to_string(),
        Term::Counter(c) => c.keyword().to_string(),
        Term::Attr { var, attr } => format!("{var}.{attr}"),
        Term::Count(s) => format!("count({s})"),
        Term::Str(s) => quote(s),
    }
}

fn write_formula(out: &mut String, f: &Formula, min: u8) {
    if precedence(f) < min {
        out.push('(');
        write_formula(out, f, QUANT);
        out.push(')');
        return;
    }
    match f {
        Formula::Compare { lhs, op, rhs } => {
            out.push_str(&format!("{} {} {}", term(lhs), op.symbol(), term(rhs)));
        }
        Formula::Member { var, set } => out.push_str(&format!("{var} in {set}")),
        Formula::Window { n, t, body } => {
            match t {
                NumExpr::Neg(len) => out.push_str(&format!("P[>={}, {}](", num(n), num(len))),
                _ => out.push_str(&format!("F[>={}, {}](", num(n), num(t))),
            }
            write_formula(out, body, QUANT);
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("not ");
            write_formula(out, g, UNARY);
        }
        Formula::And(a, b) => {
            write_formula(out, a, AND);
            out.push_str(" and ");
            write_formula(out, b, UNARY);
        }
        Formula::Or(a, b) => {
            write_formula(out, a, OR);
            out.push_str(" or ");
            write_formula(out, b, AND);
        }
        Formula::Implies(a, b) => {
            write_formula(out, a, OR);
            out.push_str(" implies ");
            write_formula(out, b, IMPLIES);
        }
        Formula::Forall { var, domain, body } | Formula::Exists { var, domain, body } => {
            let q = if matches!(f, Formula::Forall { .. }) {
                "forall"
            } else {
                "exists"
            };
            out.push_str(&format!("{q} {var} in {domain}: "));
            write_formula(out, body, QUANT);
        }
    }
}
