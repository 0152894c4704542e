//! A small arithmetic language for `f(t)`, `g(t)` and `c(t)` in config files.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, the variable `t`, the
//! constants `pi` and `e`, and the functions `exp`, `log` (alias `ln`), `sqrt` and
//! `pow(a, b)`. Expressions are evaluated with second-order dual numbers so the
//! first two derivatives come for free.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use projflat_core::phi_family::{Jet2, SmoothFn};

/// Parse failure with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{msg} at offset {pos}")]
pub struct ParseError {
    /// Byte offset into the source.
    pub pos: usize,
    /// What went wrong.
    pub msg: String,
}

/// `(value, d/dt, d²/dt²)` carried through every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub const fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    pub const fn variable(t: f64) -> Self {
        Self { v: t, d1: 1.0, d2: 0.0 }
    }

    fn is_constant(&self) -> bool {
        self.d1 == 0.0 && self.d2 == 0.0
    }

    // chain rule for a scalar function with known h, h', h''
    fn chain(self, h: f64, dh: f64, ddh: f64) -> Self {
        Self { v: h, d1: dh * self.d1, d2: ddh * self.d1 * self.d1 + dh * self.d2 }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    /// `self^p`. Constant exponents use the power rule so negative bases with
    /// integer exponents work; otherwise `exp(p ln self)`.
    pub fn pow(self, p: Dual2) -> Self {
        if p.is_constant() {
            let k = p.v;
            if k == 0.0 {
                return Self::constant(1.0);
            }
            let h = self.v.powf(k);
            let dh = if k == 1.0 { 1.0 } else { k * self.v.powf(k - 1.0) };
            let ddh = if k == 1.0 {
                0.0
            } else if k == 2.0 {
                2.0
            } else {
                k * (k - 1.0) * self.v.powf(k - 2.0)
            };
            return self.chain(h, dh, ddh);
        }
        (p * self.ln()).exp()
    }
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Dual2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if o.is_constant() {
            let r = 1.0 / o.v;
            return Self { v: self.v * r, d1: self.d1 * r, d2: self.d2 * r };
        }
        self * o.recip()
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Log,
    Sqrt,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, t: Dual2) -> Dual2 {
        match self {
            Node::Num(v) => Dual2::constant(*v),
            Node::Var => t,
            Node::Neg(a) => -a.eval(t),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(t), b.eval(t));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.pow(b),
                }
            }
            Node::Call(f, args) => {
                let a = args[0].eval(t);
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Pow => a.pow(args[1].eval(t)),
                }
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Var => f.write_str("t"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {op} {b})"),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part: 1e-3, 2.5E+4
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v = text
                .parse::<f64>()
                .map_err(|_| ParseError { pos: start, msg: format!("bad number {text:?}") })?;
            out.push((start, Tok::Num(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(ch) {
            out.push((i, Tok::Op(ch)));
            i += 1;
        } else {
            return Err(ParseError { pos: i, msg: format!("unexpected character {ch:?}") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            self.err(format!("expected '{op}'"))
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(c @ ('+' | '-'))) => *c,
                _ => return Ok(lhs),
            };
            self.at += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(c @ ('*' | '/'))) => *c,
                _ => return Ok(lhs),
            };
            self.at += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    // right-associative, binds tighter than unary minus on its left: -t^2 = -(t^2)
    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of expression"),
        };
        self.at += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "t" => Ok(Node::Var),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                "e" => Ok(Node::Num(std::f64::consts::E)),
                _ => {
                    let Some(func) = Func::lookup(&name) else {
                        self.at -= 1;
                        return self.err(format!("unknown name {name:?}"));
                    };
                    self.expect('(')?;
                    let mut args = vec![self.sum()?];
                    while self.eat(',') {
                        args.push(self.sum()?);
                    }
                    self.expect(')')?;
                    if args.len() != func.arity() {
                        return self.err(format!("{} takes {} argument(s)", func.name(), func.arity()));
                    }
                    Ok(Node::Call(func, args))
                }
            },
            Tok::Op(c) => {
                self.at -= 1;
                self.err(format!("unexpected '{c}'"))
            }
        }
    }
}

/// A parsed expression in the single variable `t`.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Arc<Node>,
}

impl Expr {
    /// Parses `src`.
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(ParseError { pos: 0, msg: "empty expression".into() });
        }
        let mut p = Parser { toks, at: 0, end: src.len() };
        let root = p.sum()?;
        if p.at != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(Self { source: src.to_string(), root: Arc::new(root) })
    }

    /// The text the expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value and first two derivatives at `t`.
    pub fn eval(&self, t: f64) -> Dual2 {
        self.root.eval(Dual2::variable(t))
    }

    /// Plain value at `t`.
    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).v
    }

    /// Wraps the expression as a [`SmoothFn`].
    pub fn to_smooth_fn(&self) -> SmoothFn {
        let root = Arc::clone(&self.root);
        SmoothFn::new(move |t| {
            let d = root.eval(Dual2::variable(t));
            Jet2::new(d.v, d.d1, d.d2)
        })
    }

    /// Like [`to_smooth_fn`](Self::to_smooth_fn) but with explicitly supplied
    /// derivatives. A missing `d2` is taken as the derivative of `d1`.
    pub fn with_derivatives(&self, d1: &Expr, d2: Option<&Expr>) -> SmoothFn {
        let (f, d1, d2) = (Arc::clone(&self.root), Arc::clone(&d1.root), d2.map(|e| Arc::clone(&e.root)));
        SmoothFn::new(move |t| {
            let v = f.eval(Dual2::constant(t)).v;
            let first = d1.eval(Dual2::variable(t));
            let second = match &d2 {
                Some(e) => e.eval(Dual2::constant(t)).v,
                None => first.d1,
            };
            Jet2::new(v, first.v, second)
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}
