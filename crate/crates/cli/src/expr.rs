//! Operator expressions: lexer, parser with source spans, and printer.
//!
//! Precedence, tightest first: `^` (right associative, the exponent may carry
//! leading minus signs), unary `-`, `*`, binary `+`/`-`.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { name: String, pos: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    P,
    /// Coordinate; 0 means the bare `x`.
    X(usize),
    /// Derivation; 0 means the bare `d`.
    D(usize),
    /// Inverse derivation; 0 means the bare `dinv`.
    Dinv(usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, i) = match *self {
            Symbol::P => return write!(f, "p"),
            Symbol::X(i) => ("x", i),
            Symbol::D(i) => ("d", i),
            Symbol::Dinv(i) => ("dinv", i),
        };
        if i == 0 {
            write!(f, "{name}")
        } else {
            write!(f, "{name}{i}")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompKind {
    Prod,
    Sum,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i128),
    /// Rational literal `a/b`, kept as written.
    Rat(i128, i128),
    Sym(Symbol),
    /// Comprehension index.
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Comp {
        kind: CompKind,
        var: String,
        lo: Box<Expr>,
        hi: Box<Expr>,
        body: Box<Expr>,
    },
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Structural equality; spans are ignored.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i128),
    Rat(i128, i128),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
    Eq,
    DotDot,
    End,
}

fn syntax(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { pos, msg: msg.into() }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let number = |start: usize, i: &mut usize| -> Result<i128, ParseError> {
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        src[start..*i]
            .parse::<i128>()
            .map_err(|_| syntax(start, "integer literal too large"))
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' => {
                let n = number(start, &mut i)?;
                if i < bytes.len() && bytes[i] == b'/' {
                    let dstart = i + 1;
                    if dstart >= bytes.len() || !bytes[dstart].is_ascii_digit() {
                        return Err(syntax(dstart, "expected denominator after `/`"));
                    }
                    i = dstart;
                    let d = number(dstart, &mut i)?;
                    if d == 0 {
                        return Err(syntax(dstart, "zero denominator"));
                    }
                    Tok::Rat(n, d)
                } else {
                    Tok::Int(n)
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), Span { start, end: i }));
                continue;
            }
            b'.' if bytes.get(i + 1) == Some(&b'.') => {
                i += 2;
                out.push((Tok::DotDot, Span { start, end: i }));
                continue;
            }
            _ => {
                i += 1;
                match c {
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'^' => Tok::Caret,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b',' => Tok::Comma,
                    b'=' => Tok::Eq,
                    _ => {
                        let ch = src[start..].chars().next().unwrap_or('?');
                        return Err(syntax(start, format!("unexpected character `{ch}`")));
                    }
                }
            }
        };
        out.push((tok, Span { start, end: i }));
    }
    out.push((Tok::End, Span { start: src.len(), end: src.len() }));
    Ok(out)
}

fn indexed(name: &str, prefix: &str) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() {
        return Some(0);
    }
    if rest.starts_with('0') {
        return None;
    }
    rest.parse::<usize>().ok()
}

fn symbol(name: &str) -> Option<Symbol> {
    if name == "p" {
        return Some(Symbol::P);
    }
    // `dinv` must be tried before `d`
    if let Some(i) = indexed(name, "dinv") {
        return Some(Symbol::Dinv(i));
    }
    if let Some(i) = indexed(name, "d") {
        return Some(Symbol::D(i));
    }
    indexed(name, "x").map(Symbol::X)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Span, ParseError> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            Err(syntax(self.span().start, format!("expected {what}")))
        }
    }

    fn node(kind: ExprKind, start: usize, end: usize) -> Expr {
        Expr { kind, span: Span { start, end } }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let neg = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let (s, e) = (lhs.span.start, rhs.span.end);
            let kind = if neg {
                ExprKind::Sub(Box::new(lhs), Box::new(rhs))
            } else {
                ExprKind::Add(Box::new(lhs), Box::new(rhs))
            };
            lhs = Self::node(kind, s, e);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.unary()?;
            let (s, e) = (lhs.span.start, rhs.span.end);
            lhs = Self::node(ExprKind::Mul(Box::new(lhs), Box::new(rhs)), s, e);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            let s = self.bump().1.start;
            let inner = self.unary()?;
            let e = inner.span.end;
            return Ok(Self::node(ExprKind::Neg(Box::new(inner)), s, e));
        }
        self.power()
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            let s = self.bump().1.start;
            let inner = self.exponent()?;
            let e = inner.span.end;
            return Ok(Self::node(ExprKind::Neg(Box::new(inner)), s, e));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exp = self.exponent()?;
        let (s, e) = (base.span.start, exp.span.end);
        Ok(Self::node(ExprKind::Pow(Box::new(base), Box::new(exp)), s, e))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Int(n) => Ok(Self::node(ExprKind::Int(n), span.start, span.end)),
            Tok::Rat(a, b) => Ok(Self::node(ExprKind::Rat(a, b), span.start, span.end)),
            Tok::LParen => {
                let inner = self.sum()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Expr { kind: inner.kind, span: Span { start: span.start, end: close.end } })
            }
            Tok::Ident(name) => {
                if (name == "prod" || name == "sum") && *self.peek() == Tok::LParen {
                    let kind = if name == "prod" { CompKind::Prod } else { CompKind::Sum };
                    return self.comprehension(kind, span.start);
                }
                if self.scope.iter().any(|v| *v == name) {
                    return Ok(Self::node(ExprKind::Var(name), span.start, span.end));
                }
                match symbol(&name) {
                    Some(s) => Ok(Self::node(ExprKind::Sym(s), span.start, span.end)),
                    None => Err(ParseError::UnknownSymbol { name, pos: span.start }),
                }
            }
            Tok::End => Err(syntax(span.start, "unexpected end of input")),
            _ => Err(syntax(span.start, "expected an operand")),
        }
    }

    fn comprehension(&mut self, kind: CompKind, start: usize) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let (tok, span) = self.bump();
        let var = match tok {
            Tok::Ident(v) if symbol(&v).is_none() && v != "prod" && v != "sum" => v,
            _ => return Err(syntax(span.start, "expected an index name")),
        };
        self.expect(Tok::Eq, "`=`")?;
        let lo = self.sum()?;
        self.expect(Tok::DotDot, "`..`")?;
        let hi = self.sum()?;
        self.expect(Tok::Comma, "`,`")?;
        self.scope.push(var.clone());
        let body = self.sum();
        self.scope.pop();
        let body = body?;
        let close = self.expect(Tok::RParen, "`)`")?;
        Ok(Self::node(
            ExprKind::Comp {
                kind,
                var,
                lo: Box::new(lo),
                hi: Box::new(hi),
                body: Box::new(body),
            },
            start,
            close.end,
        ))
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        scope: Vec::new(),
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.span().start, "unexpected trailing input"));
    }
    Ok(e)
}

const SUM: u8 = 1;
const TERM: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Add(..) | ExprKind::Sub(..) => SUM,
        ExprKind::Mul(..) => TERM,
        ExprKind::Neg(..) => UNARY,
        ExprKind::Pow(..) => POWER,
        _ => ATOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_exponent(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match &e.kind {
        ExprKind::Neg(inner) => {
            write!(f, "-")?;
            write_exponent(f, inner)
        }
        _ => write_at(f, e, POWER),
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match &e.kind {
        ExprKind::Int(n) => write!(f, "{n}"),
        ExprKind::Rat(a, b) => write!(f, "{a}/{b}"),
        ExprKind::Sym(s) => write!(f, "{s}"),
        ExprKind::Var(v) => write!(f, "{v}"),
        ExprKind::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, UNARY)
        }
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
            write_at(f, a, SUM)?;
            let op = if matches!(e.kind, ExprKind::Add(..)) { "+" } else { "-" };
            write!(f, " {op} ")?;
            write_at(f, b, TERM)
        }
        ExprKind::Mul(a, b) => {
            write_at(f, a, TERM)?;
            write!(f, "*")?;
            write_at(f, b, UNARY)
        }
        ExprKind::Pow(a, b) => {
            write_at(f, a, ATOM)?;
            write!(f, "^")?;
            write_exponent(f, b)
        }
        ExprKind::Comp { kind, var, lo, hi, body } => {
            let name = match kind {
                CompKind::Prod => "prod",
                CompKind::Sum => "sum",
            };
            write!(f, "{name}({var}=")?;
            write_expr(f, lo)?;
            write!(f, "..")?;
            write_expr(f, hi)?;
            write!(f, ", ")?;
            write_expr(f, body)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
