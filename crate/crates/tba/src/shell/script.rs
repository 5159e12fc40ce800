//! The script front end: parameter bindings, domain definitions, named
//! formulas with bounded quantifier prefixes, and assumption blocks.
//!
//! A script is a sequence of `name = value` lines plus `assumptions`
//! statements. The right-hand side decides the kind: `range(...)`,
//! `perm(...)` or a `{...}` literal define a domain; a leading `A[` or `E[`
//! quantifier or any letter reference makes a formula; anything that
//! evaluates as integer arithmetic over earlier parameters is a parameter.
//! Formulas must be prenex: quantifiers appear only as a prefix. Every
//! identifier must be defined before use, and quantifier variables shadow
//! nothing.

use std::collections::BTreeMap;

use crate::boolcore::{Assignment, BoolTerm, Letter};

use super::lexer::{logical_lines, Cursor, ParseError, Span, Token, TokenKind};

/// Integer expression over parameters and bound index variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum IdxExpr {
    Int(i64),
    Name(String),
    Neg(Box<IdxExpr>),
    Add(Box<IdxExpr>, Box<IdxExpr>),
    Sub(Box<IdxExpr>, Box<IdxExpr>),
    Mul(Box<IdxExpr>, Box<IdxExpr>),
    Mod(Box<IdxExpr>, Box<IdxExpr>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DomExpr {
    Range(IdxExpr),
    Perm(Box<DomExpr>, usize),
    Literal(Vec<i64>),
    /// Reference to a previously defined domain.
    Ref(String),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Quant {
    pub universal: bool,
    pub vars: Vec<String>,
    pub domain: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ScriptFormula {
    Atom {
        family: String,
        indices: Vec<IdxExpr>,
    },
    Not(Box<ScriptFormula>),
    And(Box<ScriptFormula>, Box<ScriptFormula>),
    Or(Box<ScriptFormula>, Box<ScriptFormula>),
    Xor(Box<ScriptFormula>, Box<ScriptFormula>),
    Implies(Box<ScriptFormula>, Box<ScriptFormula>),
    Iff(Box<ScriptFormula>, Box<ScriptFormula>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AssumeBody {
    Entries(Vec<(String, Vec<IdxExpr>, bool)>),
    Comprehension {
        family: String,
        indices: Vec<IdxExpr>,
        value: bool,
        vars: Vec<String>,
        domain: String,
    },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ScriptStmt {
    Param {
        name: String,
        expr: IdxExpr,
    },
    Domain {
        name: String,
        expr: DomExpr,
    },
    Formula {
        name: String,
        quants: Vec<Quant>,
        body: ScriptFormula,
    },
    /// `assumptions = {...}` replaces, `.update({...})` merges on top.
    Assume {
        replace: bool,
        body: AssumeBody,
    },
}

#[derive(Clone, Debug, Default)]
pub struct Script {
    pub stmts: Vec<ScriptStmt>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum NameKind {
    Param,
    Domain,
    Formula,
}

struct ScriptParser {
    names: BTreeMap<String, NameKind>,
    families: BTreeMap<String, usize>,
}

/// Parses and statically checks a script: definitions before use, kinds in
/// the right positions, one arity per letter family, prenex quantification.
pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let lines = logical_lines(text)?;
    let mut parser = ScriptParser {
        names: BTreeMap::new(),
        families: BTreeMap::new(),
    };
    let mut stmts = Vec::new();
    for line in &lines {
        stmts.push(parser.parse_stmt(line)?);
    }
    Ok(Script { stmts })
}

impl ScriptParser {
    fn parse_stmt(&mut self, line: &[Token]) -> Result<ScriptStmt, ParseError> {
        let mut cur = Cursor::new(line);
        let (name, span) = cur.expect_ident("a statement name")?;
        if name == "assumptions" {
            return self.parse_assumptions(&mut cur);
        }
        cur.expect(&TokenKind::Assign)?;
        if self.names.contains_key(&name) {
            return Err(ParseError::new(
                span,
                format!("`{name}` is already defined"),
            ));
        }
        let stmt = match cur.peek().map(|t| &t.kind) {
            Some(TokenKind::LBrace) => {
                let expr = self.parse_domain(&mut cur)?;
                cur.expect_end()?;
                self.names.insert(name.clone(), NameKind::Domain);
                ScriptStmt::Domain { name, expr }
            }
            Some(TokenKind::Ident(id))
                if (id == "range" || id == "perm")
                    && matches!(cur.peek_at(1).map(|t| &t.kind), Some(TokenKind::LParen)) =>
            {
                let expr = self.parse_domain(&mut cur)?;
                cur.expect_end()?;
                self.names.insert(name.clone(), NameKind::Domain);
                ScriptStmt::Domain { name, expr }
            }
            _ => {
                // Parameter if the whole right side is integer arithmetic
                // over known parameters, otherwise a formula.
                let mut probe = Cursor::new(line);
                probe.expect_ident("name")?;
                probe.expect(&TokenKind::Assign)?;
                if let Ok(expr) = self.try_int_expr(&mut probe) {
                    self.names.insert(name.clone(), NameKind::Param);
                    ScriptStmt::Param { name, expr }
                } else {
                    let (quants, body) = self.parse_formula(&mut cur)?;
                    cur.expect_end()?;
                    self.names.insert(name.clone(), NameKind::Formula);
                    ScriptStmt::Formula { name, quants, body }
                }
            }
        };
        Ok(stmt)
    }

    fn parse_assumptions(&mut self, cur: &mut Cursor) -> Result<ScriptStmt, ParseError> {
        let replace = if cur.eat(&TokenKind::Assign) {
            true
        } else if cur.eat(&TokenKind::Dot) {
            let (method, span) = cur.expect_ident("`update`")?;
            if method != "update" {
                return Err(ParseError::new(
                    span,
                    format!("unknown assumptions method `{method}`"),
                ));
            }
            cur.expect(&TokenKind::LParen)?;
            false
        } else {
            return Err(cur.error("expected `=` or `.update(` after `assumptions`"));
        };
        let body = self.parse_assume_body(cur)?;
        if !replace {
            cur.expect(&TokenKind::RParen)?;
        }
        cur.expect_end()?;
        Ok(ScriptStmt::Assume { replace, body })
    }

    fn parse_assume_body(&mut self, cur: &mut Cursor) -> Result<AssumeBody, ParseError> {
        cur.expect(&TokenKind::LBrace)?;
        let (family, indices) = self.parse_letter_ref(cur, &[])?;
        cur.expect(&TokenKind::Colon)?;
        let (bit, bit_span) = cur.expect_int("a bit")?;
        let value = bit_value(bit, bit_span)?;
        if cur.eat_ident("for") {
            let mut vars = vec![cur.expect_ident("an index variable")?.0];
            while cur.eat(&TokenKind::Comma) {
                vars.push(cur.expect_ident("an index variable")?.0);
            }
            for v in &vars {
                if self.names.contains_key(v) {
                    return Err(
                        cur.error(format!("comprehension variable `{v}` shadows a definition"))
                    );
                }
            }
            if !cur.eat_ident("in") {
                return Err(cur.error("expected `in` in comprehension"));
            }
            let (domain, dspan) = cur.expect_ident("a domain name")?;
            self.check_kind(&domain, NameKind::Domain, dspan)?;
            cur.expect(&TokenKind::RBrace)?;
            // Index expressions may reference the comprehension variables.
            self.check_idx_names(&indices, &vars, cur)?;
            return Ok(AssumeBody::Comprehension {
                family,
                indices,
                value,
                vars,
                domain,
            });
        }
        self.check_idx_names(&indices, &[], cur)?;
        let mut entries = vec![(family, indices, value)];
        while cur.eat(&TokenKind::Comma) {
            let (family, indices) = self.parse_letter_ref(cur, &[])?;
            self.check_idx_names(&indices, &[], cur)?;
            cur.expect(&TokenKind::Colon)?;
            let (bit, bit_span) = cur.expect_int("a bit")?;
            entries.push((family, indices, bit_value(bit, bit_span)?));
        }
        cur.expect(&TokenKind::RBrace)?;
        Ok(AssumeBody::Entries(entries))
    }

    /// Letter reference `family` or `family(e1,...,ek)`; records and checks
    /// the family arity.
    fn parse_letter_ref(
        &mut self,
        cur: &mut Cursor,
        _scope: &[String],
    ) -> Result<(String, Vec<IdxExpr>), ParseError> {
        let (family, span) = cur.expect_ident("a letter")?;
        if let Some(kind) = self.names.get(&family) {
            return Err(ParseError::new(
                span,
                format!("`{family}` is a {}, not a letter", kind_name(*kind)),
            ));
        }
        let mut indices = Vec::new();
        if cur.eat(&TokenKind::LParen) {
            indices.push(self.parse_idx_expr(cur)?);
            while cur.eat(&TokenKind::Comma) {
                indices.push(self.parse_idx_expr(cur)?);
            }
            cur.expect(&TokenKind::RParen)?;
        }
        match self.families.get(&family) {
            Some(&arity) if arity != indices.len() => {
                return Err(ParseError::new(
                    span,
                    format!(
                        "letter family `{family}` used with arity {} but declared with {arity}",
                        indices.len()
                    ),
                ));
            }
            Some(_) => {}
            None => {
                self.families.insert(family.clone(), indices.len());
            }
        }
        Ok((family, indices))
    }

    fn check_kind(&self, name: &str, want: NameKind, span: Span) -> Result<(), ParseError> {
        match self.names.get(name) {
            Some(&k) if k == want => Ok(()),
            Some(&k) => Err(ParseError::new(
                span,
                format!(
                    "`{name}` is a {}, expected a {}",
                    kind_name(k),
                    kind_name(want)
                ),
            )),
            None => Err(ParseError::new(span, format!("`{name}` is not defined"))),
        }
    }

    /// Every name inside index expressions must be a parameter or one of
    /// the variables in scope.
    fn check_idx_names(
        &self,
        exprs: &[IdxExpr],
        scope: &[String],
        cur: &Cursor,
    ) -> Result<(), ParseError> {
        for e in exprs {
            self.check_idx_expr(e, scope, cur)?;
        }
        Ok(())
    }

    fn check_idx_expr(
        &self,
        e: &IdxExpr,
        scope: &[String],
        cur: &Cursor,
    ) -> Result<(), ParseError> {
        match e {
            IdxExpr::Int(_) => Ok(()),
            IdxExpr::Name(n) => {
                if scope.iter().any(|s| s == n) {
                    return Ok(());
                }
                match self.names.get(n) {
                    Some(NameKind::Param) => Ok(()),
                    Some(k) => Err(cur.error(format!(
                        "`{n}` is a {}, not usable in an index expression",
                        kind_name(*k)
                    ))),
                    None => Err(cur.error(format!("`{n}` is not defined"))),
                }
            }
            IdxExpr::Neg(a) => self.check_idx_expr(a, scope, cur),
            IdxExpr::Add(a, b) | IdxExpr::Sub(a, b) | IdxExpr::Mul(a, b) | IdxExpr::Mod(a, b) => {
                self.check_idx_expr(a, scope, cur)?;
                self.check_idx_expr(b, scope, cur)
            }
        }
    }

    fn parse_domain(&mut self, cur: &mut Cursor) -> Result<DomExpr, ParseError> {
        match cur.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::LBrace) => {
                cur.next();
                let mut items = Vec::new();
                if !cur.eat(&TokenKind::RBrace) {
                    loop {
                        let neg = cur.eat(&TokenKind::Minus);
                        let (v, _) = cur.expect_int("a domain element")?;
                        items.push(if neg { -v } else { v });
                        if cur.eat(&TokenKind::RBrace) {
                            break;
                        }
                        cur.expect(&TokenKind::Comma)?;
                    }
                }
                Ok(DomExpr::Literal(items))
            }
            Some(TokenKind::Ident(id)) if id == "range" => {
                cur.next();
                cur.expect(&TokenKind::LParen)?;
                let e = self.parse_idx_expr(cur)?;
                self.check_idx_expr(&e, &[], cur)?;
                cur.expect(&TokenKind::RParen)?;
                Ok(DomExpr::Range(e))
            }
            Some(TokenKind::Ident(id)) if id == "perm" => {
                cur.next();
                cur.expect(&TokenKind::LParen)?;
                let inner = self.parse_domain(cur)?;
                cur.expect(&TokenKind::Comma)?;
                let (r, rspan) = cur.expect_int("a tuple length")?;
                if r < 1 {
                    return Err(ParseError::new(rspan, "perm length must be at least 1"));
                }
                cur.expect(&TokenKind::RParen)?;
                Ok(DomExpr::Perm(Box::new(inner), r as usize))
            }
            Some(TokenKind::Ident(id)) if self.names.get(&id) == Some(&NameKind::Domain) => {
                let (name, _) = cur.expect_ident("a domain")?;
                Ok(DomExpr::Ref(name))
            }
            _ => Err(cur.error("expected a domain expression")),
        }
    }

    /// Strict integer expression: fails on anything that is not arithmetic
    /// over literals and known parameters, or does not consume the line.
    fn try_int_expr(&self, cur: &mut Cursor) -> Result<IdxExpr, ParseError> {
        let e = self.parse_idx_expr(cur)?;
        cur.expect_end()?;
        self.check_idx_expr(&e, &[], cur)?;
        Ok(e)
    }

    fn parse_idx_expr(&self, cur: &mut Cursor) -> Result<IdxExpr, ParseError> {
        let mut lhs = self.parse_idx_term(cur)?;
        loop {
            if cur.eat(&TokenKind::Plus) {
                lhs = IdxExpr::Add(Box::new(lhs), Box::new(self.parse_idx_term(cur)?));
            } else if cur.eat(&TokenKind::Minus) {
                lhs = IdxExpr::Sub(Box::new(lhs), Box::new(self.parse_idx_term(cur)?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_idx_term(&self, cur: &mut Cursor) -> Result<IdxExpr, ParseError> {
        let mut lhs = self.parse_idx_atom(cur)?;
        loop {
            if cur.eat(&TokenKind::Star) {
                lhs = IdxExpr::Mul(Box::new(lhs), Box::new(self.parse_idx_atom(cur)?));
            } else if cur.eat(&TokenKind::Percent) {
                lhs = IdxExpr::Mod(Box::new(lhs), Box::new(self.parse_idx_atom(cur)?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_idx_atom(&self, cur: &mut Cursor) -> Result<IdxExpr, ParseError> {
        match cur.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Int(v)) => {
                cur.next();
                Ok(IdxExpr::Int(v))
            }
            Some(TokenKind::Minus) => {
                cur.next();
                Ok(IdxExpr::Neg(Box::new(self.parse_idx_atom(cur)?)))
            }
            Some(TokenKind::Ident(name)) => {
                // A call shape means this is not an index expression.
                if matches!(cur.peek_at(1).map(|t| &t.kind), Some(TokenKind::LParen)) {
                    Err(cur.error("function application is not integer arithmetic"))
                } else {
                    cur.next();
                    Ok(IdxExpr::Name(name))
                }
            }
            Some(TokenKind::LParen) => {
                cur.next();
                let e = self.parse_idx_expr(cur)?;
                cur.expect(&TokenKind::RParen)?;
                Ok(e)
            }
            _ => Err(cur.error("expected an integer expression")),
        }
    }

    fn parse_formula(
        &mut self,
        cur: &mut Cursor,
    ) -> Result<(Vec<Quant>, ScriptFormula), ParseError> {
        let mut quants: Vec<Quant> = Vec::new();
        loop {
            let is_quant = matches!(
                (cur.peek(), cur.peek_at(1)),
                (
                    Some(Token { kind: TokenKind::Ident(id), .. }),
                    Some(Token { kind: TokenKind::LBracket, .. })
                ) if id == "A" || id == "E"
            );
            if !is_quant {
                break;
            }
            let (head, _) = cur.expect_ident("quantifier")?;
            cur.expect(&TokenKind::LBracket)?;
            let mut vars = vec![cur.expect_ident("an index variable")?.0];
            while cur.eat(&TokenKind::Comma) {
                vars.push(cur.expect_ident("an index variable")?.0);
            }
            cur.expect(&TokenKind::Colon)?;
            let (domain, dspan) = cur.expect_ident("a domain name")?;
            self.check_kind(&domain, NameKind::Domain, dspan)?;
            cur.expect(&TokenKind::RBracket)?;
            cur.eat(&TokenKind::Dot);
            for v in &vars {
                if self.names.contains_key(v) || quants.iter().any(|q| q.vars.contains(v)) {
                    return Err(
                        cur.error(format!("quantifier variable `{v}` shadows a definition"))
                    );
                }
            }
            quants.push(Quant {
                universal: head == "A",
                vars,
                domain,
            });
        }
        let scope: Vec<String> = quants.iter().flat_map(|q| q.vars.clone()).collect();
        let body = self.parse_bool_iff(cur, &scope)?;
        Ok((quants, body))
    }

    fn parse_bool_iff(
        &mut self,
        cur: &mut Cursor,
        scope: &[String],
    ) -> Result<ScriptFormula, ParseError> {
        let mut lhs = self.parse_bool_implies(cur, scope)?;
        while cur.eat(&TokenKind::DArrow) {
            let rhs = self.parse_bool_implies(cur, scope)?;
            lhs = ScriptFormula::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_bool_implies(
        &mut self,
        cur: &mut Cursor,
        scope: &[String],
    ) -> Result<ScriptFormula, ParseError> {
        let lhs = self.parse_bool_or(cur, scope)?;
        if cur.eat(&TokenKind::Arrow) {
            let rhs = self.parse_bool_implies(cur, scope)?;
            Ok(ScriptFormula::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn parse_bool_or(
        &mut self,
        cur: &mut Cursor,
        scope: &[String],
    ) -> Result<ScriptFormula, ParseError> {
        let mut lhs = self.parse_bool_xor(cur, scope)?;
        while cur.eat(&TokenKind::Pipe) {
            let rhs = self.parse_bool_xor(cur, scope)?;
            lhs = ScriptFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_bool_xor(
        &mut self,
        cur: &mut Cursor,
        scope: &[String],
    ) -> Result<ScriptFormula, ParseError> {
        let mut lhs = self.parse_bool_and(cur, scope)?;
        while cur.eat(&TokenKind::Caret) {
            let rhs = self.parse_bool_and(cur, scope)?;
            lhs = ScriptFormula::Xor(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_bool_and(
        &mut self,
        cur: &mut Cursor,
        scope: &[String],
    ) -> Result<ScriptFormula, ParseError> {
        let mut lhs = self.parse_bool_unary(cur, scope)?;
        while cur.eat(&TokenKind::Amp) {
            let rhs = self.parse_bool_unary(cur, scope)?;
            lhs = ScriptFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_bool_unary(
        &mut self,
        cur: &mut Cursor,
        scope: &[String],
    ) -> Result<ScriptFormula, ParseError> {
        if cur.eat(&TokenKind::Tilde) {
            return Ok(ScriptFormula::Not(Box::new(
                self.parse_bool_unary(cur, scope)?,
            )));
        }
        match cur.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::LParen) => {
                cur.next();
                let inner = self.parse_bool_iff(cur, scope)?;
                cur.expect(&TokenKind::RParen)?;
                Ok(inner)
            }
            Some(TokenKind::Ident(id)) if id == "A" || id == "E" => {
                if matches!(cur.peek_at(1).map(|t| &t.kind), Some(TokenKind::LBracket)) {
                    return Err(cur
                        .error("quantifiers are only allowed as a prefix (prenex form required)"));
                }
                let (family, indices) = self.parse_letter_ref(cur, scope)?;
                self.check_idx_names(&indices, scope, cur)?;
                Ok(ScriptFormula::Atom { family, indices })
            }
            Some(TokenKind::Ident(_)) => {
                let (family, indices) = self.parse_letter_ref(cur, scope)?;
                self.check_idx_names(&indices, scope, cur)?;
                Ok(ScriptFormula::Atom { family, indices })
            }
            _ => Err(cur.error("expected a letter reference, `~` or `(`")),
        }
    }
}

fn kind_name(k: NameKind) -> &'static str {
    match k {
        NameKind::Param => "parameter",
        NameKind::Domain => "domain",
        NameKind::Formula => "formula",
    }
}

fn bit_value(v: i64, span: Span) -> Result<bool, ParseError> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(ParseError::new(
            span,
            format!("expected 0 or 1, got {other}"),
        )),
    }
}

// ---------------------------------------------------------------------------
// Expansion

/// The letter families observed while expanding a script, with the full set
/// of letters in canonical order.
#[derive(Clone, Debug, Default)]
pub struct LetterNamespace {
    families: BTreeMap<String, usize>,
    letters: std::collections::BTreeSet<Letter>,
}

impl LetterNamespace {
    fn record(&mut self, family: &str, indices: Vec<i64>) -> Result<Letter, ParseError> {
        match self.families.get(family) {
            Some(&arity) if arity != indices.len() => Err(ParseError::new(
                Span { line: 0, col: 0 },
                format!(
                    "letter family `{family}` used with arity {} and {arity}",
                    indices.len()
                ),
            )),
            _ => {
                self.families.insert(family.to_string(), indices.len());
                let letter = Letter::indexed(family, indices);
                self.letters.insert(letter.clone());
                Ok(letter)
            }
        }
    }

    pub fn families(&self) -> &BTreeMap<String, usize> {
        &self.families
    }

    /// All letters, canonical order.
    pub fn letters(&self) -> Vec<Letter> {
        self.letters.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

#[derive(Clone, Debug)]
struct Domain {
    arity: usize,
    tuples: Vec<Vec<i64>>,
}

#[derive(Default)]
struct Expander {
    params: BTreeMap<String, i64>,
    domains: BTreeMap<String, Domain>,
    namespace: LetterNamespace,
}

/// Expands a parsed script: quantifiers unfold over their domains, named
/// formulas conjoin in declaration order, assumption blocks apply in order
/// with later updates overriding earlier values.
pub fn expand_script(
    script: &Script,
) -> Result<(BoolTerm, Assignment, LetterNamespace), ParseError> {
    let mut ex = Expander::default();
    let mut formulas: Vec<BoolTerm> = Vec::new();
    let mut assumptions = Assignment::new();
    for stmt in &script.stmts {
        match stmt {
            ScriptStmt::Param { name, expr } => {
                let value = ex.eval_idx(expr, &BTreeMap::new())?;
                ex.params.insert(name.clone(), value);
            }
            ScriptStmt::Domain { name, expr } => {
                let dom = ex.eval_domain(expr)?;
                ex.domains.insert(name.clone(), dom);
            }
            ScriptStmt::Formula { quants, body, .. } => {
                let env = BTreeMap::new();
                let term = ex.expand_quantified(quants, body, &env)?;
                formulas.push(term);
            }
            ScriptStmt::Assume { replace, body } => {
                if *replace {
                    assumptions.clear();
                }
                ex.apply_assume(body, &mut assumptions)?;
            }
        }
    }
    Ok((BoolTerm::and(formulas), assumptions, ex.namespace))
}

impl Expander {
    fn eval_idx(&self, e: &IdxExpr, env: &BTreeMap<String, i64>) -> Result<i64, ParseError> {
        let err = |msg: String| ParseError::new(Span { line: 0, col: 0 }, msg);
        match e {
            IdxExpr::Int(v) => Ok(*v),
            IdxExpr::Name(n) => env
                .get(n)
                .or_else(|| self.params.get(n))
                .copied()
                .ok_or_else(|| err(format!("`{n}` has no value"))),
            IdxExpr::Neg(a) => Ok(-self.eval_idx(a, env)?),
            IdxExpr::Add(a, b) => Ok(self.eval_idx(a, env)? + self.eval_idx(b, env)?),
            IdxExpr::Sub(a, b) => Ok(self.eval_idx(a, env)? - self.eval_idx(b, env)?),
            IdxExpr::Mul(a, b) => Ok(self.eval_idx(a, env)? * self.eval_idx(b, env)?),
            IdxExpr::Mod(a, b) => {
                let d = self.eval_idx(b, env)?;
                if d == 0 {
                    return Err(err("modulo by zero".into()));
                }
                Ok(self.eval_idx(a, env)?.rem_euclid(d))
            }
        }
    }

    fn eval_domain(&self, e: &DomExpr) -> Result<Domain, ParseError> {
        let err = |msg: String| ParseError::new(Span { line: 0, col: 0 }, msg);
        match e {
            DomExpr::Ref(n) => self
                .domains
                .get(n)
                .cloned()
                .ok_or_else(|| err(format!("`{n}` is not a domain"))),
            DomExpr::Range(e) => {
                let v = self.eval_idx(e, &BTreeMap::new())?;
                Ok(Domain {
                    arity: 1,
                    tuples: (0..v.max(0)).map(|i| vec![i]).collect(),
                })
            }
            DomExpr::Literal(items) => {
                let mut sorted = items.clone();
                sorted.sort_unstable();
                sorted.dedup();
                Ok(Domain {
                    arity: 1,
                    tuples: sorted.into_iter().map(|i| vec![i]).collect(),
                })
            }
            DomExpr::Perm(inner, r) => {
                let base = self.eval_domain(inner)?;
                if base.arity != 1 {
                    return Err(err("perm expects a domain of single elements".into()));
                }
                let elements: Vec<i64> = base.tuples.iter().map(|t| t[0]).collect();
                if *r > elements.len() {
                    return Ok(Domain {
                        arity: *r,
                        tuples: Vec::new(),
                    });
                }
                use itertools::Itertools;
                let tuples: Vec<Vec<i64>> = elements.iter().copied().permutations(*r).collect();
                Ok(Domain { arity: *r, tuples })
            }
        }
    }

    fn expand_quantified(
        &mut self,
        quants: &[Quant],
        body: &ScriptFormula,
        env: &BTreeMap<String, i64>,
    ) -> Result<BoolTerm, ParseError> {
        let Some(q) = quants.first() else {
            return self.expand_bool(body, env);
        };
        let dom = self.domains.get(&q.domain).cloned().ok_or_else(|| {
            ParseError::new(
                Span { line: 0, col: 0 },
                format!("`{}` is not a domain", q.domain),
            )
        })?;
        if dom.arity != q.vars.len() {
            return Err(ParseError::new(
                Span { line: 0, col: 0 },
                format!(
                    "quantifier binds {} variables but domain `{}` holds {}-tuples",
                    q.vars.len(),
                    q.domain,
                    dom.arity
                ),
            ));
        }
        let mut parts = Vec::with_capacity(dom.tuples.len());
        for tuple in &dom.tuples {
            let mut env2 = env.clone();
            for (v, &val) in q.vars.iter().zip(tuple) {
                env2.insert(v.clone(), val);
            }
            parts.push(self.expand_quantified(&quants[1..], body, &env2)?);
        }
        Ok(if q.universal {
            BoolTerm::and(parts)
        } else {
            BoolTerm::or(parts)
        })
    }

    fn expand_bool(
        &mut self,
        f: &ScriptFormula,
        env: &BTreeMap<String, i64>,
    ) -> Result<BoolTerm, ParseError> {
        Ok(match f {
            ScriptFormula::Atom { family, indices } => {
                let values = indices
                    .iter()
                    .map(|e| self.eval_idx(e, env))
                    .collect::<Result<Vec<_>, _>>()?;
                BoolTerm::Var(self.namespace.record(family, values)?)
            }
            ScriptFormula::Not(c) => self.expand_bool(c, env)?.not(),
            ScriptFormula::And(a, b) => {
                BoolTerm::and(vec![self.expand_bool(a, env)?, self.expand_bool(b, env)?])
            }
            ScriptFormula::Or(a, b) => {
                BoolTerm::or(vec![self.expand_bool(a, env)?, self.expand_bool(b, env)?])
            }
            ScriptFormula::Xor(a, b) => self.expand_bool(a, env)?.xor(self.expand_bool(b, env)?),
            ScriptFormula::Implies(a, b) => {
                self.expand_bool(a, env)?.implies(self.expand_bool(b, env)?)
            }
            ScriptFormula::Iff(a, b) => self.expand_bool(a, env)?.iff(self.expand_bool(b, env)?),
        })
    }

    fn apply_assume(
        &mut self,
        body: &AssumeBody,
        assumptions: &mut Assignment,
    ) -> Result<(), ParseError> {
        match body {
            AssumeBody::Entries(entries) => {
                for (family, indices, value) in entries {
                    let values = indices
                        .iter()
                        .map(|e| self.eval_idx(e, &BTreeMap::new()))
                        .collect::<Result<Vec<_>, _>>()?;
                    let letter = self.namespace.record(family, values)?;
                    assumptions.set(letter, *value);
                }
            }
            AssumeBody::Comprehension {
                family,
                indices,
                value,
                vars,
                domain,
            } => {
                let dom = self.domains.get(domain).cloned().ok_or_else(|| {
                    ParseError::new(
                        Span { line: 0, col: 0 },
                        format!("`{domain}` is not a domain"),
                    )
                })?;
                if dom.arity != vars.len() {
                    return Err(ParseError::new(
                        Span { line: 0, col: 0 },
                        format!(
                            "comprehension binds {} variables but domain `{domain}` holds {}-tuples",
                            vars.len(),
                            dom.arity
                        ),
                    ));
                }
                for tuple in &dom.tuples {
                    let mut env = BTreeMap::new();
                    for (v, &val) in vars.iter().zip(tuple) {
                        env.insert(v.clone(), val);
                    }
                    let values = indices
                        .iter()
                        .map(|e| self.eval_idx(e, &env))
                        .collect::<Result<Vec<_>, _>>()?;
                    let letter = self.namespace.record(family, values)?;
                    assumptions.set(letter, *value);
                }
            }
        }
        Ok(())
    }
}
