//! Recursive-descent parser for constraint files.
//!
//! ```text
//! file       := {constraint}
//! constraint := "constraint" STRING mode ":" formula
//! mode       := "at" ("start" | "each" "step")
//! formula    := quant | impl
//! quant      := ("forall" | "exists") IDENT "in" IDENT ":" formula
//! impl       := disj ["implies" impl]
//! disj       := conj {"or" conj}
//! conj       := unary {"and" unary}
//! unary      := "not" unary | window | atom | "(" formula ")"
//! window     := "F" "[" ">=" num "," num "]" unary
//!             | "G" "[" num "]" unary
//!             | "P" "[" ">=" num "," num "]" unary
//! num        := ["-"] (INT | "MAX" | "BEG" | "INF")
//! atom       := term cmp term | IDENT "in" IDENT
//! term       := ["-"] INT | "MAX" | "BEG" | IDENT "." IDENT | "count" "(" IDENT ")" | STRING
//! ```
//!
//! Syntax errors abandon the current constraint and resume at the next
//! `constraint` keyword, so one pass reports as many problems as possible.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{desugar_always, AttrType, Catalog, Diagnostic, DiagnosticKind};

const RESERVED: [&str; 15] = [
    "constraint", "at", "start", "each", "step", "forall", "exists", "in", "implies", "or", "and",
    "not", "MAX", "BEG", "INF",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Parses a whole constraint file. No partial results: any diagnostic fails
/// the file.
pub fn parse_constraints(text: &str, catalog: &Catalog) -> Result<Vec<Constraint>, Vec<Diagnostic>> {
    let tokens = tokenize(text).map_err(|d| vec![d])?;
    let mut glosses: HashMap<usize, Vec<String>> = HashMap::new();
    let mut pending = Vec::new();
    let mut toks = Vec::with_capacity(tokens.len());
    for t in tokens {
        match t.tok {
            Tok::Gloss(g) => pending.push(g),
            _ => {
                if matches!(&t.tok, Tok::Ident(s) if s == "constraint") && !pending.is_empty() {
                    glosses.insert(toks.len(), std::mem::take(&mut pending));
                }
                pending.clear();
                toks.push(t);
            }
        }
    }

    let mut p = Parser::new(text, toks, catalog);
    let mut out: Vec<Constraint> = Vec::new();
    let mut names = BTreeSet::new();
    while !p.at_eof() {
        let start_idx = p.pos;
        match p.constraint() {
            Ok(mut c) => {
                c.gloss = glosses
                    .get(&start_idx)
                    .map(|g| g.join(" "))
                    .filter(|g| !g.is_empty());
                if !names.insert(c.name.clone()) {
                    let t = &p.toks[start_idx];
                    p.diags.push(Diagnostic::new(
                        t,
                        DiagnosticKind::DuplicateName,
                        format!("duplicate constraint name {:?}", c.name),
                    ));
                }
                out.push(c);
            }
            Err(d) => {
                p.diags.push(d);
                p.recover();
            }
        }
    }
    if p.diags.is_empty() {
        Ok(out)
    } else {
        Err(p.diags)
    }
}

/// Parses a single closed formula.
pub fn parse_formula(text: &str, catalog: &Catalog) -> Result<Formula, Vec<Diagnostic>> {
    let toks: Vec<Token> = tokenize(text)
        .map_err(|d| vec![d])?
        .into_iter()
        .filter(|t| !matches!(t.tok, Tok::Gloss(_)))
        .collect();
    let mut p = Parser::new(text, toks, catalog);
    match p.formula() {
        Ok(f) => {
            if !p.at_eof() {
                let d = p.unexpected("end of formula");
                p.diags.push(d);
            }
            if p.diags.is_empty() {
                Ok(f)
            } else {
                Err(p.diags)
            }
        }
        Err(d) => {
            p.diags.push(d);
            Err(p.diags)
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    catalog: &'a Catalog,
    scope: Vec<String>,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    fn new(src: &'a str, toks: Vec<Token>, catalog: &'a Catalog) -> Self {
        Self {
            src,
            toks,
            pos: 0,
            catalog,
            scope: Vec::new(),
            diags: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let t = self.token();
        Diagnostic::new(
            t,
            DiagnosticKind::Syntax,
            format!("expected {expected}, found {}", t.tok.describe()),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Token> {
        if self.is_kw(kw) {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Token)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                let t = self.advance();
                Ok((s, t))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn semantic(&mut self, tok: &Token, kind: DiagnosticKind, message: String) {
        self.diags.push(Diagnostic::new(tok, kind, message));
    }

    fn recover(&mut self) {
        // always make progress
        self.advance();
        while !self.at_eof() && !self.is_kw("constraint") {
            self.advance();
        }
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        let first = self.expect_kw("constraint")?;
        let name = match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                s
            }
            _ => return Err(self.unexpected("constraint name string")),
        };
        self.expect_kw("at")?;
        let mode = if self.is_kw("start") {
            self.advance();
            Mode::AtStart
        } else if self.is_kw("each") {
            self.advance();
            self.expect_kw("step")?;
            Mode::AtEachStep
        } else {
            return Err(self.unexpected("`start` or `each step`"));
        };
        self.expect(Tok::Colon)?;
        self.scope.clear();
        let formula = self.formula()?;
        let end = self.toks[self.pos.saturating_sub(1)].end;
        Ok(Constraint {
            name,
            mode,
            formula,
            gloss: None,
            source_text: self.src[first.start..end].to_string(),
        })
    }

    fn formula(&mut self) -> PResult<Formula> {
        if self.is_kw("forall") || self.is_kw("exists") {
            let universal = self.is_kw("forall");
            self.advance();
            let (var, _) = self.ident("variable name")?;
            self.expect_kw("in")?;
            let (domain, dtok) = self.ident("set name")?;
            self.check_set(&domain, &dtok);
            self.expect(Tok::Colon)?;
            self.scope.push(var.clone());
            let body = self.formula();
            self.scope.pop();
            let body = Box::new(body?);
            return Ok(if universal {
                Formula::Forall { var, domain, body }
            } else {
                Formula::Exists { var, domain, body }
            });
        }
        self.implication()
    }

    fn implication(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.is_kw("implies") {
            self.advance();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut f = self.conjunction()?;
        while self.is_kw("or") {
            self.advance();
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut f = self.unary()?;
        while self.is_kw("and") {
            self.advance();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if self.is_kw("not") {
            self.advance();
            return Ok(Formula::not(self.unary()?));
        }
        if *self.peek() == Tok::LParen {
            self.advance();
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        if let (Tok::Ident(w), Tok::LBracket) = (self.peek(), self.peek_at(1)) {
            if matches!(w.as_str(), "F" | "G" | "P") {
                return self.window();
            }
        }
        self.atom()
    }

    fn window(&mut self) -> PResult<Formula> {
        let head = self.advance();
        let Tok::Ident(kind) = &head.tok else {
            unreachable!("window() called on a non-identifier")
        };
        let kind = kind.clone();
        self.expect(Tok::LBracket)?;
        if kind == "G" {
            let (t, ttok) = self.num()?;
            self.expect(Tok::RBracket)?;
            let body = self.unary()?;
            return match desugar_always(t.clone(), body.clone()) {
                Ok(f) => Ok(f),
                Err(e) => {
                    let kind = match t {
                        NumExpr::Neg(_) => DiagnosticKind::NegativeWindow,
                        _ => DiagnosticKind::InvalidWindow,
                    };
                    self.semantic(&ttok, kind, e.to_string());
                    Ok(Formula::window(t.clone(), t, body))
                }
            };
        }
        self.expect(Tok::Ge)?;
        let (n, ntok) = self.num()?;
        match &n {
            NumExpr::Neg(_) => self.semantic(
                &ntok,
                DiagnosticKind::NegativeCount,
                "window count must be non-negative".into(),
            ),
            NumExpr::Counter(Counter::Inf) => self.semantic(
                &ntok,
                DiagnosticKind::InvalidWindow,
                "INF is only allowed as a window length".into(),
            ),
            _ => {}
        }
        self.expect(Tok::Comma)?;
        let (t, ttok) = self.num()?;
        self.expect(Tok::RBracket)?;
        let body = self.unary()?;
        let t = if kind == "P" {
            if matches!(t, NumExpr::Neg(_)) {
                self.semantic(
                    &ttok,
                    DiagnosticKind::InvalidWindow,
                    "past window length must not be negated; use F[>=n, -t] instead".into(),
                );
                t
            } else {
                NumExpr::neg(t)
            }
        } else {
            t
        };
        Ok(Formula::window(n, t, body))
    }

    fn num(&mut self) -> PResult<(NumExpr, Token)> {
        let start = self.token().clone();
        let negated = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        let base = match self.peek().clone() {
            Tok::Int(v) => NumExpr::Lit(v),
            Tok::Ident(s) if s == "MAX" => NumExpr::Counter(Counter::Max),
            Tok::Ident(s) if s == "BEG" => NumExpr::Counter(Counter::Beg),
            Tok::Ident(s) if s == "INF" => NumExpr::Counter(Counter::Inf),
            _ => return Err(self.unexpected("integer, MAX, BEG or INF")),
        };
        self.advance();
        Ok((if negated { NumExpr::neg(base) } else { base }, start))
    }

    fn atom(&mut self) -> PResult<Formula> {
        if let (Tok::Ident(v), Tok::Ident(kw)) = (self.peek().clone(), self.peek_at(1).clone()) {
            if kw == "in" && !is_reserved(&v) {
                let vtok = self.advance();
                self.advance();
                self.check_var(&v, &vtok);
                let (set, stok) = self.ident("set name")?;
                self.check_set(&set, &stok);
                return Ok(Formula::Member { var: v, set });
            }
        }
        let ltok = self.token().clone();
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            _ => return Err(self.unexpected("comparison operator")),
        };
        self.advance();
        let rhs = self.term()?;
        self.check_comparison(&lhs, op, &rhs, &ltok);
        Ok(Formula::Compare { lhs, op, rhs })
    }

    fn term(&mut self) -> PResult<Term> {
        let tok = self.token().clone();
        match tok.tok.clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Term::Int(v as i64))
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Int(v) => {
                        self.advance();
                        Ok(Term::Int(-(v as i64)))
                    }
                    _ => Err(self.unexpected("integer")),
                }
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Term::Str(s))
            }
            Tok::Ident(s) if s == "MAX" || s == "BEG" || s == "INF" => {
                self.advance();
                let c = match s.as_str() {
                    "MAX" => Counter::Max,
                    "BEG" => Counter::Beg,
                    _ => {
                        self.semantic(
                            &tok,
                            DiagnosticKind::InvalidWindow,
                            "INF is only allowed as a window length".into(),
                        );
                        Counter::Inf
                    }
                };
                Ok(Term::Counter(c))
            }
            Tok::Ident(s) if s == "count" && *self.peek_at(1) == Tok::LParen => {
                self.advance();
                self.advance();
                let (set, stok) = self.ident("set name")?;
                self.check_set(&set, &stok);
                self.expect(Tok::RParen)?;
                Ok(Term::Count(set))
            }
            Tok::Ident(v) if !is_reserved(&v) && *self.peek_at(1) == Tok::Dot => {
                self.advance();
                self.advance();
                self.check_var(&v, &tok);
                let (attr, atok) = self.ident("attribute name")?;
                if self.catalog.attr_type(&attr).is_none() {
                    self.semantic(
                        &atok,
                        DiagnosticKind::UnknownAttribute,
                        format!("unknown attribute `{attr}`"),
                    );
                }
                Ok(Term::Attr { var: v, attr })
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn check_var(&mut self, var: &str, tok: &Token) {
        if !self.scope.iter().any(|v| v == var) {
            self.semantic(
                tok,
                DiagnosticKind::FreeVariable,
                format!("variable `{var}` is not bound by forall/exists"),
            );
        }
    }

    fn check_set(&mut self, set: &str, tok: &Token) {
        if !self.catalog.has_set(set) {
            self.semantic(tok, DiagnosticKind::UnknownSet, format!("unknown set `{set}`"));
        }
    }

    fn term_type(&self, t: &Term) -> Option<AttrType> {
        match t {
            Term::Int(_) | Term::Counter(_) | Term::Count(_) => Some(AttrType::Int),
            Term::Str(_) => Some(AttrType::Str),
            Term::Attr { attr, .. } => self.catalog.attr_type(attr),
        }
    }

    fn check_comparison(&mut self, lhs: &Term, op: CmpOp, rhs: &Term, tok: &Token) {
        let (Some(a), Some(b)) = (self.term_type(lhs), self.term_type(rhs)) else {
            return;
        };
        if a != b {
            self.semantic(
                tok,
                DiagnosticKind::TypeMismatch,
                "cannot compare a number with a string".into(),
            );
        } else if a == AttrType::Str && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
            self.semantic(
                tok,
                DiagnosticKind::TypeMismatch,
                format!("strings can only be compared with == or !=, not {}", op.symbol()),
            );
        }
    }
}
