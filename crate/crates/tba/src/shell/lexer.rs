//! Line-oriented tokenizer shared by the script and theory front ends.
//!
//! Input is split into logical lines: `#` starts a comment, blank lines are
//! skipped, and a line with unbalanced brackets continues onto the next.
//! Tokens carry their original line and column for error messages.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, col {}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Assign,
    Tilde,
    Amp,
    Caret,
    Pipe,
    Arrow,
    DArrow,
    Plus,
    Minus,
    Star,
    Percent,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "`{s}`"),
            TokenKind::Int(i) => write!(f, "`{i}`"),
            TokenKind::LParen => write!(f, "`(`"),
            TokenKind::RParen => write!(f, "`)`"),
            TokenKind::LBrace => write!(f, "`{{`"),
            TokenKind::RBrace => write!(f, "`}}`"),
            TokenKind::LBracket => write!(f, "`[`"),
            TokenKind::RBracket => write!(f, "`]`"),
            TokenKind::Comma => write!(f, "`,`"),
            TokenKind::Colon => write!(f, "`:`"),
            TokenKind::Dot => write!(f, "`.`"),
            TokenKind::Assign => write!(f, "`=`"),
            TokenKind::Tilde => write!(f, "`~`"),
            TokenKind::Amp => write!(f, "`&`"),
            TokenKind::Caret => write!(f, "`^`"),
            TokenKind::Pipe => write!(f, "`|`"),
            TokenKind::Arrow => write!(f, "`->`"),
            TokenKind::DArrow => write!(f, "`<->`"),
            TokenKind::Plus => write!(f, "`+`"),
            TokenKind::Minus => write!(f, "`-`"),
            TokenKind::Star => write!(f, "`*`"),
            TokenKind::Percent => write!(f, "`%`"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// One statement's worth of tokens, possibly joined from several physical
/// lines when brackets were left open.
pub type LogicalLine = Vec<Token>;

pub fn logical_lines(text: &str) -> Result<Vec<LogicalLine>, ParseError> {
    let mut lines = Vec::new();
    let mut pending: LogicalLine = Vec::new();
    let mut depth: i64 = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let tokens = tokenize_line(raw, lineno + 1)?;
        for t in &tokens {
            match t.kind {
                TokenKind::LParen | TokenKind::LBrace | TokenKind::LBracket => depth += 1,
                TokenKind::RParen | TokenKind::RBrace | TokenKind::RBracket => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(ParseError::new(t.span, format!("unmatched {}", t.kind)));
                    }
                }
                _ => {}
            }
        }
        pending.extend(tokens);
        if depth == 0 && !pending.is_empty() {
            lines.push(std::mem::take(&mut pending));
        }
    }
    if depth > 0 {
        let span = pending
            .last()
            .map(|t| t.span)
            .unwrap_or(Span { line: 1, col: 1 });
        return Err(ParseError::new(span, "unclosed bracket at end of file"));
    }
    if !pending.is_empty() {
        lines.push(pending);
    }
    Ok(lines)
}

fn tokenize_line(raw: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let bytes: Vec<char> = raw.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col: i + 1 };
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(bytes[start..i].iter().collect()),
                    span,
                });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let value = text
                    .parse::<i64>()
                    .map_err(|_| ParseError::new(span, format!("integer {text} out of range")))?;
                out.push(Token {
                    kind: TokenKind::Int(value),
                    span,
                });
            }
            '-' => {
                if bytes.get(i + 1) == Some(&'>') {
                    out.push(Token {
                        kind: TokenKind::Arrow,
                        span,
                    });
                    i += 2;
                } else {
                    out.push(Token {
                        kind: TokenKind::Minus,
                        span,
                    });
                    i += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&'-') && bytes.get(i + 2) == Some(&'>') {
                    out.push(Token {
                        kind: TokenKind::DArrow,
                        span,
                    });
                    i += 3;
                } else {
                    return Err(ParseError::new(span, "expected `<->`"));
                }
            }
            _ => {
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ',' => TokenKind::Comma,
                    ':' => TokenKind::Colon,
                    '.' => TokenKind::Dot,
                    '=' => TokenKind::Assign,
                    '~' => TokenKind::Tilde,
                    '&' => TokenKind::Amp,
                    '^' => TokenKind::Caret,
                    '|' => TokenKind::Pipe,
                    '+' => TokenKind::Plus,
                    '*' => TokenKind::Star,
                    '%' => TokenKind::Percent,
                    other => {
                        return Err(ParseError::new(
                            span,
                            format!("unexpected character {other:?}"),
                        ))
                    }
                };
                out.push(Token { kind, span });
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Cursor over one logical line.
pub struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(tokens: &'a [Token]) -> Self {
        Cursor { tokens, pos: 0 }
    }

    pub fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    pub fn peek_at(&self, offset: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + offset)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Span for "here": the next token, or just past the last one.
    pub fn here(&self) -> Span {
        self.peek()
            .map(|t| t.span)
            .or_else(|| {
                self.tokens.last().map(|t| Span {
                    line: t.span.line,
                    col: t.span.col + 1,
                })
            })
            .unwrap_or(Span { line: 1, col: 1 })
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.here(), message)
    }

    pub fn expect(&mut self, kind: &TokenKind) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if &t.kind == kind => Ok(self.next().unwrap()),
            Some(t) => Err(ParseError::new(
                t.span,
                format!("expected {kind}, found {}", t.kind),
            )),
            None => Err(self.error(format!("expected {kind}, found end of line"))),
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                span,
            }) => {
                let out = (s.clone(), *span);
                self.next();
                Ok(out)
            }
            Some(t) => Err(ParseError::new(
                t.span,
                format!("expected {what}, found {}", t.kind),
            )),
            None => Err(self.error(format!("expected {what}, found end of line"))),
        }
    }

    pub fn expect_int(&mut self, what: &str) -> Result<(i64, Span), ParseError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Int(v),
                span,
            }) => {
                let out = (*v, *span);
                self.next();
                Ok(out)
            }
            Some(t) => Err(ParseError::new(
                t.span,
                format!("expected {what}, found {}", t.kind),
            )),
            None => Err(self.error(format!("expected {what}, found end of line"))),
        }
    }

    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, name: &str) -> bool {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                ..
            }) if s == name => {
                self.next();
                true
            }
            _ => false,
        }
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(ParseError::new(
                t.span,
                format!("unexpected {} after the end of the statement", t.kind),
            )),
        }
    }
}
