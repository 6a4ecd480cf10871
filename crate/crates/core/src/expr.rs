//! The expression language used for series, coefficients, and CLI input.
//!
//! ```text
//! expr   := ['-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' nat)?
//! atom   := rational | ident | '(' expr ')'
//! ```
//!
//! Rationals are written `p` or `p/q`; there is no implicit multiplication.
//! Products are kept in the order written and the sign rule is applied when
//! the expression is evaluated in a domain.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::Scalar;
use crate::series::{DomainSpec, GradedSeries};

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(BigRational),
    Var(String, Pos),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Number of top-level summands.
    pub fn num_terms(&self) -> usize {
        match self {
            Expr::Add(a, _) | Expr::Sub(a, _) => a.num_terms() + 1,
            _ => 1,
        }
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Number(_) => {}
            Expr::Var(name, _) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn evaluate<E: Evaluator>(&self, ev: &E) -> Result<E::Value> {
        match self {
            Expr::Number(r) => ev.number(r),
            Expr::Var(name, pos) => ev.variable(name, *pos),
            Expr::Neg(a) => ev.neg(a.evaluate(ev)?),
            Expr::Add(a, b) => ev.add(a.evaluate(ev)?, b.evaluate(ev)?),
            Expr::Sub(a, b) => ev.sub(a.evaluate(ev)?, b.evaluate(ev)?),
            Expr::Mul(a, b) => ev.mul(a.evaluate(ev)?, b.evaluate(ev)?),
            Expr::Pow(a, k) => {
                let base = a.evaluate(ev)?;
                let mut acc = ev.number(&BigRational::one())?;
                for _ in 0..*k {
                    acc = ev.mul(acc, base.clone())?;
                }
                Ok(acc)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(r) => {
                if r.is_neg() {
                    write!(f, "(-{})", -r)
                } else {
                    write!(f, "{r}")
                }
            }
            Expr::Var(name, _) => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Pow(a, k) => write!(f, "{a}^{k}"),
        }
    }
}

/// Interprets an [`Expr`] in some algebra.
pub trait Evaluator {
    type Value: Clone;

    fn number(&self, r: &BigRational) -> Result<Self::Value>;
    fn variable(&self, name: &str, pos: Pos) -> Result<Self::Value>;
    fn add(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value>;
    fn sub(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value>;
    fn neg(&self, a: Self::Value) -> Result<Self::Value>;
    fn mul(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value>;
}

fn unknown(name: &str, pos: Pos) -> Error {
    Error::Parse {
        line: pos.line,
        column: pos.column,
        message: format!("unknown variable `{name}`"),
    }
}

/// Evaluates into a [`GradedSeries`], with optional named bindings that
/// shadow the domain's coordinates.
pub struct SeriesEvaluator<'a, S> {
    pub domain: &'a Arc<DomainSpec>,
    pub bindings: Option<&'a HashMap<String, GradedSeries<S>>>,
}

impl<S: Scalar> Evaluator for SeriesEvaluator<'_, S> {
    type Value = GradedSeries<S>;

    fn number(&self, r: &BigRational) -> Result<Self::Value> {
        Ok(GradedSeries::constant(self.domain, S::from_rational(r)))
    }

    fn variable(&self, name: &str, pos: Pos) -> Result<Self::Value> {
        if let Some(v) = self.bindings.and_then(|b| b.get(name)) {
            return Ok(v.clone());
        }
        GradedSeries::named(self.domain, name).map_err(|_| unknown(name, pos))
    }

    fn add(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        a.add(&b)
    }

    fn sub(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        a.sub(&b)
    }

    fn neg(&self, a: Self::Value) -> Result<Self::Value> {
        Ok(a.neg())
    }

    fn mul(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        a.mul(&b)
    }
}

/// Evaluates into a polynomial in the named variables.
pub struct PolyEvaluator<'a> {
    pub vars: &'a [String],
}

impl PolyEvaluator<'_> {
    pub fn eval<S: Scalar>(&self, e: &Expr) -> Result<Polynomial<S>> {
        e.evaluate(&TypedPoly::<S> {
            vars: self.vars,
            _marker: std::marker::PhantomData,
        })
    }
}

struct TypedPoly<'a, S> {
    vars: &'a [String],
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> Evaluator for TypedPoly<'_, S> {
    type Value = Polynomial<S>;

    fn number(&self, r: &BigRational) -> Result<Self::Value> {
        Ok(Polynomial::constant(self.vars.len(), S::from_rational(r)))
    }

    fn variable(&self, name: &str, pos: Pos) -> Result<Self::Value> {
        self.vars
            .iter()
            .position(|v| v == name)
            .map(|i| Polynomial::var(self.vars.len(), i))
            .ok_or_else(|| unknown(name, pos))
    }

    fn add(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        Ok(a.add(&b))
    }

    fn sub(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        Ok(a.sub(&b))
    }

    fn neg(&self, a: Self::Value) -> Result<Self::Value> {
        Ok(a.neg())
    }

    fn mul(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        Ok(a.mul(&b))
    }
}

/// Parses and evaluates `text` as a series in `domain`.
pub fn parse_series<S: Scalar>(domain: &Arc<DomainSpec>, text: &str) -> Result<GradedSeries<S>> {
    parse_expression(text)?.evaluate(&SeriesEvaluator {
        domain,
        bindings: None,
    })
}

/// Parses and evaluates `text` as a polynomial in `vars`.
pub fn parse_polynomial<S: Scalar>(vars: &[String], text: &str) -> Result<Polynomial<S>> {
    PolyEvaluator { vars }.eval(&parse_expression(text)?)
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer {
    tokens: Vec<(Token, Pos)>,
}

impl Lexer {
    fn tokenize(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let (mut line, mut column) = (1, 1);
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line, column };
            if c == '\n' {
                line += 1;
                column = 1;
                i += 1;
                continue;
            }
            if c.is_whitespace() {
                column += 1;
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                column += i - start;
                tokens.push((Token::Int(s.parse().unwrap()), pos));
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                column += i - start;
                tokens.push((Token::Ident(s), pos));
                continue;
            }
            let tok = match c {
                '+' => Token::Plus,
                '-' => Token::Minus,
                '*' => Token::Star,
                '/' => Token::Slash,
                '^' => Token::Caret,
                '(' => Token::LParen,
                ')' => Token::RParen,
                other => {
                    return Err(Error::Parse {
                        line,
                        column,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            };
            tokens.push((tok, pos));
            column += 1;
            i += 1;
        }
        tokens.push((Token::End, Pos { line, column }));
        Ok(Lexer { tokens })
    }
}

struct Parser {
    tokens: Vec<(Token, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].1
    }

    fn bump(&mut self) -> (Token, Pos) {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let pos = self.pos();
        Error::Parse {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = if *self.peek() == Token::Minus {
            self.bump();
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Token::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while *self.peek() == Token::Star {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Token::Caret {
            self.bump();
            match self.bump() {
                (Token::Int(k), pos) => {
                    let k: u32 = k.try_into().map_err(|_| Error::Parse {
                        line: pos.line,
                        column: pos.column,
                        message: "exponent too large".into(),
                    })?;
                    return Ok(Expr::Pow(Box::new(base), k));
                }
                (_, pos) => {
                    return Err(Error::Parse {
                        line: pos.line,
                        column: pos.column,
                        message: "expected a natural number exponent".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Token::Int(n) => {
                self.bump();
                if *self.peek() == Token::Slash {
                    self.bump();
                    match self.bump() {
                        (Token::Int(d), pos) => {
                            if d == BigInt::from(0) {
                                return Err(Error::Parse {
                                    line: pos.line,
                                    column: pos.column,
                                    message: "zero denominator".into(),
                                });
                            }
                            Ok(Expr::Number(BigRational::new(n, d)))
                        }
                        (_, pos) => Err(Error::Parse {
                            line: pos.line,
                            column: pos.column,
                            message: "expected a denominator".into(),
                        }),
                    }
                } else {
                    Ok(Expr::Number(BigRational::from_integer(n)))
                }
            }
            Token::Ident(name) => {
                let pos = self.pos();
                self.bump();
                Ok(Expr::Var(name, pos))
            }
            Token::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Token::RParen {
                    return Err(self.error("expected `)`"));
                }
                self.bump();
                Ok(e)
            }
            Token::End => Err(self.error("unexpected end of input")),
            other => Err(self.error(format!("unexpected token {other:?}"))),
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr> {
    let lexer = Lexer::tokenize(text)?;
    let mut p = Parser {
        tokens: lexer.tokens,
        at: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Token::End {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}
