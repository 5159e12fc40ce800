//! The theory file front end: a signature header, a domain size, first-order
//! axioms, optional named unary definitions, an optional partition block
//! with an orientation table, and assumption lines.
//!
//! Formula syntax follows the script operators (`~ & | -> <->`, no xor) with
//! `A[x,y].`/`E[x].` quantifiers allowed on any parenthesized subformula;
//! terms are variables, integer element names, constants and function
//! applications. A `def name(x): ...` line makes a unary formula available
//! as a macro in later axioms and defs — references inline with
//! capture-avoiding substitution. Declarations are used top-to-bottom, so
//! declare symbols and defs before their first use.

use crate::boolcore::Letter;
use crate::countlab::{GoodPartitionSpec, LayerFormula, Orientation};
use crate::fol::{
    ground_theory, substitute_free_var, FolFormula, FolTerm, PropTheory, Signature, SymbolKind,
};

use super::lexer::{logical_lines, Cursor, ParseError, Span, Token, TokenKind};
use super::ShellError;

#[derive(Clone, Debug)]
pub struct TheoryFile {
    pub signature: Signature,
    pub n: usize,
    pub axioms: Vec<(Option<String>, FolFormula)>,
    pub defs: Vec<(String, LayerFormula)>,
    pub partition: Option<Vec<String>>,
    pub orients: Vec<(String, String, Orientation)>,
    pub assumes: Vec<(Letter, bool)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum RawTerm {
    Name(String),
    Int(i64),
    App(String, Vec<RawTerm>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum RawFol {
    Eq(RawTerm, RawTerm),
    Atom(String, Vec<RawTerm>),
    Not(Box<RawFol>),
    And(Box<RawFol>, Box<RawFol>),
    Or(Box<RawFol>, Box<RawFol>),
    Implies(Box<RawFol>, Box<RawFol>),
    Iff(Box<RawFol>, Box<RawFol>),
    Quant {
        universal: bool,
        vars: Vec<String>,
        body: Box<RawFol>,
    },
}

/// Parses and elaborates a theory file.
pub fn parse_theory(text: &str) -> Result<TheoryFile, ParseError> {
    let lines = logical_lines(text)?;
    let mut signature = Signature::new();
    let mut n: Option<(usize, Span)> = None;
    let mut axioms = Vec::new();
    let mut defs: Vec<(String, LayerFormula)> = Vec::new();
    let mut partition = None;
    let mut orients = Vec::new();
    let mut assumes = Vec::new();

    for line in &lines {
        let mut cur = Cursor::new(line);
        let (head, head_span) = cur.expect_ident("a statement keyword")?;
        match head.as_str() {
            "rel" | "fun" => {
                let (name, span) = cur.expect_ident("a symbol name")?;
                let (arity, aspan) = cur.expect_int("an arity")?;
                if arity < 0 {
                    return Err(ParseError::new(aspan, "arity must be nonnegative"));
                }
                cur.expect_end()?;
                let result = if head == "rel" {
                    signature.add_relation(name, arity as usize)
                } else {
                    signature.add_function(name, arity as usize)
                };
                result.map_err(|e| ParseError::new(span, e.to_string()))?;
            }
            "const" => {
                let (name, span) = cur.expect_ident("a constant name")?;
                cur.expect_end()?;
                signature
                    .add_constant(name)
                    .map_err(|e| ParseError::new(span, e.to_string()))?;
            }
            "n" => {
                cur.expect(&TokenKind::Assign)?;
                let (value, vspan) = cur.expect_int("the domain size")?;
                cur.expect_end()?;
                if value < 1 {
                    return Err(ParseError::new(vspan, "domain size must be at least 1"));
                }
                if n.is_some() {
                    return Err(ParseError::new(vspan, "domain size declared twice"));
                }
                n = Some((value as usize, vspan));
            }
            "axiom" => {
                let name = match (cur.peek(), cur.peek_at(1)) {
                    (
                        Some(Token {
                            kind: TokenKind::Ident(id),
                            ..
                        }),
                        Some(Token {
                            kind: TokenKind::Colon,
                            ..
                        }),
                    ) => {
                        let id = id.clone();
                        cur.next();
                        cur.next();
                        Some(id)
                    }
                    _ => None,
                };
                let raw = parse_fol(&mut cur)?;
                cur.expect_end()?;
                let formula = elaborate(&raw, &signature, &defs, &mut Vec::new(), head_span)?;
                axioms.push((name, formula));
            }
            "def" => {
                let (name, nspan) = cur.expect_ident("a definition name")?;
                if defs.iter().any(|(d, _)| d == &name) {
                    return Err(ParseError::new(
                        nspan,
                        format!("`{name}` is already defined"),
                    ));
                }
                if signature.lookup(&name).is_some() {
                    return Err(ParseError::new(
                        nspan,
                        format!("`{name}` collides with a signature symbol"),
                    ));
                }
                cur.expect(&TokenKind::LParen)?;
                let (var, _) = cur.expect_ident("the free variable")?;
                cur.expect(&TokenKind::RParen)?;
                cur.expect(&TokenKind::Colon)?;
                let raw = parse_fol(&mut cur)?;
                cur.expect_end()?;
                let mut scope = vec![var.clone()];
                let formula = elaborate(&raw, &signature, &defs, &mut scope, head_span)?;
                let layer = LayerFormula::new(var, formula)
                    .map_err(|e| ParseError::new(nspan, e.to_string()))?;
                defs.push((name, layer));
            }
            "partition" => {
                let mut names = Vec::new();
                while let Some(Token {
                    kind: TokenKind::Ident(id),
                    span,
                }) = cur.peek()
                {
                    if !defs.iter().any(|(d, _)| d == id) {
                        return Err(ParseError::new(
                            *span,
                            format!("`{id}` is not a defined layer formula"),
                        ));
                    }
                    names.push(id.clone());
                    cur.next();
                }
                cur.expect_end()?;
                if names.is_empty() {
                    return Err(ParseError::new(
                        head_span,
                        "partition block names no layers",
                    ));
                }
                if partition.is_some() {
                    return Err(ParseError::new(head_span, "partition declared twice"));
                }
                partition = Some(names);
            }
            "orient" => {
                let (a, aspan) = cur.expect_ident("a layer name")?;
                let (b, bspan) = cur.expect_ident("a layer name")?;
                let (kind, kspan) = cur.expect_ident("an orientation")?;
                cur.expect_end()?;
                for (name, span) in [(&a, aspan), (&b, bspan)] {
                    if !defs.iter().any(|(d, _)| d == name) {
                        return Err(ParseError::new(
                            span,
                            format!("`{name}` is not a defined layer formula"),
                        ));
                    }
                }
                let orientation = match kind.as_str() {
                    "fwd" => Orientation::Forward,
                    "back" => Orientation::Backward,
                    "not_fwd" => Orientation::NotForward,
                    "not_back" => Orientation::NotBackward,
                    "free" => Orientation::Unconstrained,
                    other => return Err(ParseError::new(
                        kspan,
                        format!(
                            "unknown orientation `{other}` (fwd, back, not_fwd, not_back, free)"
                        ),
                    )),
                };
                orients.push((a, b, orientation));
            }
            "assume" => {
                let (family, _) = cur.expect_ident("a letter")?;
                let mut indices = Vec::new();
                if cur.eat(&TokenKind::LParen) {
                    loop {
                        let neg = cur.eat(&TokenKind::Minus);
                        let (v, _) = cur.expect_int("an index")?;
                        indices.push(if neg { -v } else { v });
                        if cur.eat(&TokenKind::RParen) {
                            break;
                        }
                        cur.expect(&TokenKind::Comma)?;
                    }
                }
                cur.expect(&TokenKind::Assign)?;
                let (bit, bspan) = cur.expect_int("a bit")?;
                let value = match bit {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(ParseError::new(
                            bspan,
                            format!("expected 0 or 1, got {other}"),
                        ))
                    }
                };
                cur.expect_end()?;
                assumes.push((Letter::indexed(family, indices), value));
            }
            other => {
                return Err(ParseError::new(
                    head_span,
                    format!("unknown statement `{other}`"),
                ))
            }
        }
    }

    let (n, _) = n.ok_or_else(|| {
        ParseError::new(
            Span { line: 1, col: 1 },
            "theory file must declare `n = <size>`",
        )
    })?;
    Ok(TheoryFile {
        signature,
        n,
        axioms,
        defs,
        partition,
        orients,
        assumes,
    })
}

impl TheoryFile {
    /// Grounds the axioms and assembles the partition spec, if any.
    pub fn ground(&self) -> Result<(PropTheory, Option<GoodPartitionSpec>), ShellError> {
        let sentences: Vec<FolFormula> = self.axioms.iter().map(|(_, f)| f.clone()).collect();
        let mut theory = ground_theory(&sentences, self.n, &self.signature)?;
        for (letter, value) in &self.assumes {
            if theory.letters().binary_search(letter).is_err() {
                return Err(ShellError::BadInput(format!(
                    "assume names letter {letter} outside the grounded letter set"
                )));
            }
            theory.assumptions.set(letter.clone(), *value);
        }
        let spec = match &self.partition {
            None => None,
            Some(names) => {
                let mut layers = Vec::with_capacity(names.len());
                for name in names {
                    let layer = self
                        .defs
                        .iter()
                        .find(|(d, _)| d == name)
                        .map(|(_, l)| l.clone())
                        .expect("checked at parse time");
                    layers.push(layer);
                }
                let mut spec = GoodPartitionSpec::new(layers);
                for (a, b, orientation) in &self.orients {
                    let pos = |s: &str| names.iter().position(|n| n == s);
                    let (Some(i), Some(j)) = (pos(a), pos(b)) else {
                        return Err(ShellError::BadInput(format!(
                            "orient references `{a}`/`{b}` outside the partition block"
                        )));
                    };
                    spec.set_orientation(i, j, *orientation)?;
                }
                Some(spec)
            }
        };
        Ok((theory, spec))
    }
}

fn parse_fol(cur: &mut Cursor) -> Result<RawFol, ParseError> {
    if let (
        Some(Token {
            kind: TokenKind::Ident(id),
            ..
        }),
        Some(Token {
            kind: TokenKind::LBracket,
            ..
        }),
    ) = (cur.peek(), cur.peek_at(1))
    {
        if id == "A" || id == "E" {
            let universal = id == "A";
            cur.next();
            cur.next();
            let mut vars = vec![cur.expect_ident("a variable")?.0];
            while cur.eat(&TokenKind::Comma) {
                vars.push(cur.expect_ident("a variable")?.0);
            }
            cur.expect(&TokenKind::RBracket)?;
            cur.eat(&TokenKind::Dot);
            let body = parse_fol(cur)?;
            return Ok(RawFol::Quant {
                universal,
                vars,
                body: Box::new(body),
            });
        }
    }
    parse_fol_iff(cur)
}

fn parse_fol_iff(cur: &mut Cursor) -> Result<RawFol, ParseError> {
    let mut lhs = parse_fol_implies(cur)?;
    while cur.eat(&TokenKind::DArrow) {
        let rhs = parse_fol_implies(cur)?;
        lhs = RawFol::Iff(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_fol_implies(cur: &mut Cursor) -> Result<RawFol, ParseError> {
    let lhs = parse_fol_or(cur)?;
    if cur.eat(&TokenKind::Arrow) {
        let rhs = parse_fol_implies(cur)?;
        Ok(RawFol::Implies(Box::new(lhs), Box::new(rhs)))
    } else {
        Ok(lhs)
    }
}

fn parse_fol_or(cur: &mut Cursor) -> Result<RawFol, ParseError> {
    let mut lhs = parse_fol_and(cur)?;
    while cur.eat(&TokenKind::Pipe) {
        let rhs = parse_fol_and(cur)?;
        lhs = RawFol::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_fol_and(cur: &mut Cursor) -> Result<RawFol, ParseError> {
    let mut lhs = parse_fol_unary(cur)?;
    while cur.eat(&TokenKind::Amp) {
        let rhs = parse_fol_unary(cur)?;
        lhs = RawFol::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_fol_unary(cur: &mut Cursor) -> Result<RawFol, ParseError> {
    if cur.eat(&TokenKind::Tilde) {
        return Ok(RawFol::Not(Box::new(parse_fol_unary(cur)?)));
    }
    if matches!(cur.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
        cur.next();
        let inner = parse_fol(cur)?;
        cur.expect(&TokenKind::RParen)?;
        return Ok(inner);
    }
    // An atom: a term, optionally equated with another term.
    let lhs = parse_raw_term(cur)?;
    if cur.eat(&TokenKind::Assign) {
        let rhs = parse_raw_term(cur)?;
        return Ok(RawFol::Eq(lhs, rhs));
    }
    match lhs {
        RawTerm::App(name, args) => Ok(RawFol::Atom(name, args)),
        RawTerm::Name(name) => Ok(RawFol::Atom(name, Vec::new())),
        RawTerm::Int(_) => Err(cur.error("an integer is not a formula")),
    }
}

fn parse_raw_term(cur: &mut Cursor) -> Result<RawTerm, ParseError> {
    match cur.peek().map(|t| t.kind.clone()) {
        Some(TokenKind::Int(v)) => {
            cur.next();
            Ok(RawTerm::Int(v))
        }
        Some(TokenKind::Ident(name)) => {
            cur.next();
            if cur.eat(&TokenKind::LParen) {
                let mut args = vec![parse_raw_term(cur)?];
                while cur.eat(&TokenKind::Comma) {
                    args.push(parse_raw_term(cur)?);
                }
                cur.expect(&TokenKind::RParen)?;
                Ok(RawTerm::App(name, args))
            } else {
                Ok(RawTerm::Name(name))
            }
        }
        _ => Err(cur.error("expected a term")),
    }
}

fn elaborate(
    raw: &RawFol,
    sig: &Signature,
    defs: &[(String, LayerFormula)],
    scope: &mut Vec<String>,
    span: Span,
) -> Result<FolFormula, ParseError> {
    let err = |msg: String| ParseError::new(span, msg);
    Ok(match raw {
        RawFol::Eq(l, r) => FolFormula::Eq(
            elaborate_term(l, sig, scope, span)?,
            elaborate_term(r, sig, scope, span)?,
        ),
        RawFol::Atom(name, args) => {
            if let Some((SymbolKind::Relation, arity)) = sig.lookup(name) {
                if args.len() != arity {
                    return Err(err(format!(
                        "relation `{name}` expects {arity} arguments, got {}",
                        args.len()
                    )));
                }
                let terms = args
                    .iter()
                    .map(|a| elaborate_term(a, sig, scope, span))
                    .collect::<Result<Vec<_>, _>>()?;
                FolFormula::Rel(name.clone(), terms)
            } else if let Some((_, layer)) = defs.iter().find(|(d, _)| d == name) {
                if args.len() != 1 {
                    return Err(err(format!(
                        "definition `{name}` takes exactly one argument, got {}",
                        args.len()
                    )));
                }
                let arg = elaborate_term(&args[0], sig, scope, span)?;
                substitute_free_var(layer.formula(), layer.var(), &arg)
            } else {
                return Err(err(format!("`{name}` is not a relation or definition")));
            }
        }
        RawFol::Not(c) => elaborate(c, sig, defs, scope, span)?.not(),
        RawFol::And(a, b) => FolFormula::And(vec![
            elaborate(a, sig, defs, scope, span)?,
            elaborate(b, sig, defs, scope, span)?,
        ]),
        RawFol::Or(a, b) => FolFormula::Or(vec![
            elaborate(a, sig, defs, scope, span)?,
            elaborate(b, sig, defs, scope, span)?,
        ]),
        RawFol::Implies(a, b) => {
            elaborate(a, sig, defs, scope, span)?.implies(elaborate(b, sig, defs, scope, span)?)
        }
        RawFol::Iff(a, b) => {
            elaborate(a, sig, defs, scope, span)?.iff(elaborate(b, sig, defs, scope, span)?)
        }
        RawFol::Quant {
            universal,
            vars,
            body,
        } => {
            for v in vars {
                if scope.contains(v) {
                    return Err(err(format!(
                        "quantifier variable `{v}` shadows an outer one"
                    )));
                }
                scope.push(v.clone());
            }
            let inner = elaborate(body, sig, defs, scope, span)?;
            for _ in vars {
                scope.pop();
            }
            let mut out = inner;
            for v in vars.iter().rev() {
                out = if *universal {
                    FolFormula::forall(v.clone(), out)
                } else {
                    FolFormula::exists(v.clone(), out)
                };
            }
            out
        }
    })
}

fn elaborate_term(
    raw: &RawTerm,
    sig: &Signature,
    scope: &[String],
    span: Span,
) -> Result<FolTerm, ParseError> {
    let err = |msg: String| ParseError::new(span, msg);
    Ok(match raw {
        RawTerm::Int(v) => {
            if *v < 0 {
                return Err(err(format!("element name {v} must be nonnegative")));
            }
            FolTerm::Element(*v as usize)
        }
        RawTerm::Name(name) => {
            if scope.iter().any(|s| s == name) {
                FolTerm::var(name.clone())
            } else if let Some((SymbolKind::Function, 0)) = sig.lookup(name) {
                FolTerm::constant(name.clone())
            } else {
                return Err(err(format!(
                    "`{name}` is not a bound variable or constant symbol"
                )));
            }
        }
        RawTerm::App(name, args) => {
            match sig.lookup(name) {
                Some((SymbolKind::Function, arity)) => {
                    if args.len() != arity {
                        return Err(err(format!(
                            "function `{name}` expects {arity} arguments, got {}",
                            args.len()
                        )));
                    }
                }
                Some((SymbolKind::Relation, _)) => {
                    return Err(err(format!("relation `{name}` used as a term")))
                }
                None => return Err(err(format!("`{name}` is not a function symbol"))),
            }
            let terms = args
                .iter()
                .map(|a| elaborate_term(a, sig, scope, span))
                .collect::<Result<Vec<_>, _>>()?;
            FolTerm::App(name.clone(), terms)
        }
    })
}
