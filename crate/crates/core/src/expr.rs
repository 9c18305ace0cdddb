//! Closed-form real functions of the 2n real coordinates.
//!
//! A [`Function`] is the "analytic source" carried by sampled fields. It is
//! parsed from a small infix language:
//!
//! ```text
//! x1, y1, x2, y2, ...     coordinates, z_j = x_j + i y_j
//! norm2                   sum of squares of all coordinates
//! pi
//! + - * / ^               (^ binds tighter than unary minus: -x^2 = -(x^2))
//! abs sqrt exp log sin cos min(a, b) max(a, b)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unary {
    Neg,
    Abs,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binary {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Index into the real coordinate vector (x1 = 0, y1 = 1, x2 = 2, ...).
    Coord(usize),
    Norm2,
    Unary(Unary, Box<Expr>),
    Binary(Binary, Box<Expr>, Box<Expr>),
    PowI(Box<Expr>, i32),
}

impl Expr {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(i) => x[*i],
            Expr::Norm2 => x.iter().map(|v| v * v).sum(),
            Expr::Unary(op, a) => {
                let a = a.eval(x);
                match op {
                    Unary::Neg => -a,
                    Unary::Abs => a.abs(),
                    Unary::Sqrt => a.sqrt(),
                    Unary::Exp => a.exp(),
                    Unary::Log => a.ln(),
                    Unary::Sin => a.sin(),
                    Unary::Cos => a.cos(),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval(x);
                let b = b.eval(x);
                match op {
                    Binary::Add => a + b,
                    Binary::Sub => a - b,
                    Binary::Mul => a * b,
                    Binary::Div => a / b,
                    Binary::Pow => a.powf(b),
                    Binary::Min => a.min(b),
                    Binary::Max => a.max(b),
                }
            }
            Expr::PowI(a, k) => a.eval(x).powi(*k),
        }
    }

    fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Const(_) | Expr::Norm2 => None,
            Expr::Coord(i) => Some(*i),
            Expr::Unary(_, a) | Expr::PowI(a, _) => a.max_coord(),
            Expr::Binary(_, a, b) => match (a.max_coord(), b.max_coord()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }
}

/// A real-valued function of a point of C^n, given in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    expr: Expr,
}

impl Function {
    pub fn new(expr: Expr) -> Self {
        Self { expr }
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Expr::Const(c))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    #[inline]
    pub fn eval(&self, coords: &[f64]) -> f64 {
        self.expr.eval(coords)
    }

    /// Smallest complex dimension in which every referenced coordinate exists.
    pub fn min_dimension(&self) -> usize {
        self.expr.max_coord().map_or(1, |i| i / 2 + 1)
    }

    pub fn check_dimension(&self, n: usize) -> Result<()> {
        let need = self.min_dimension();
        if need > n {
            return Err(Error::Argument(format!(
                "function `{self}` references z{need} but the dimension is {n}"
            )));
        }
        Ok(())
    }

    fn combine(op: Binary, a: &Function, b: &Function) -> Function {
        Function::new(Expr::Binary(
            op,
            Box::new(a.expr.clone()),
            Box::new(b.expr.clone()),
        ))
    }

    pub fn add(&self, other: &Function) -> Function {
        Self::combine(Binary::Add, self, other)
    }

    pub fn sub(&self, other: &Function) -> Function {
        Self::combine(Binary::Sub, self, other)
    }

    pub fn scale(&self, factor: f64) -> Function {
        Self::combine(Binary::Mul, &Function::constant(factor), self)
    }

    /// `sum_j |z_j - c_j|^2` written out over coordinates.
    pub fn distance_squared_to(center: &[f64]) -> Function {
        let mut acc: Option<Expr> = None;
        for (i, c) in center.iter().enumerate() {
            let diff = if *c == 0.0 {
                Expr::Coord(i)
            } else {
                Expr::Binary(
                    Binary::Sub,
                    Box::new(Expr::Coord(i)),
                    Box::new(Expr::Const(*c)),
                )
            };
            let sq = Expr::PowI(Box::new(diff), 2);
            acc = Some(match acc {
                None => sq,
                Some(prev) => Expr::Binary(Binary::Add, Box::new(prev), Box::new(sq)),
            });
        }
        Function::new(acc.unwrap_or(Expr::Const(0.0)))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Coord(i) => write!(f, "{}{}", if i % 2 == 0 { 'x' } else { 'y' }, i / 2 + 1),
            Expr::Norm2 => f.write_str("norm2"),
            Expr::Unary(Unary::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => {
                let name = match op {
                    Unary::Abs => "abs",
                    Unary::Sqrt => "sqrt",
                    Unary::Exp => "exp",
                    Unary::Log => "log",
                    Unary::Sin => "sin",
                    Unary::Cos => "cos",
                    Unary::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            Expr::Binary(op, a, b) => match op {
                Binary::Min => write!(f, "min({a}, {b})"),
                Binary::Max => write!(f, "max({a}, {b})"),
                _ => {
                    let sym = match op {
                        Binary::Add => "+",
                        Binary::Sub => "-",
                        Binary::Mul => "*",
                        Binary::Div => "/",
                        _ => "^",
                    };
                    write!(f, "({a} {sym} {b})")
                }
            },
            Expr::PowI(a, k) => {
                if *k < 0 {
                    write!(f, "({a}^({k}))")
                } else {
                    write!(f, "({a}^{k})")
                }
            }
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

impl FromStr for Function {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let expr = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Function::new(expr))
    }
}

impl Serialize for Function {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Function {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => Binary::Add,
                Some(b'-') => Binary::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => Binary::Mul,
                Some(b'/') => Binary::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Unary(Unary::Neg, Box::new(other)),
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let exponent = self.unary()?;
        Ok(match exponent {
            Expr::Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => {
                Expr::PowI(Box::new(base), c as i32)
            }
            other => Expr::Binary(Binary::Pow, Box::new(base), Box::new(other)),
        })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < s.len() && (s[look] == b'+' || s[look] == b'-') {
                look += 1;
            }
            if look < s.len() && s[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii slice");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::Parse {
                offset: start,
                message: format!("bad number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match name {
            "norm2" => return Ok(Expr::Norm2),
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            _ => {}
        }
        let unary = match name {
            "abs" => Some(Unary::Abs),
            "sqrt" => Some(Unary::Sqrt),
            "exp" => Some(Unary::Exp),
            "log" => Some(Unary::Log),
            "sin" => Some(Unary::Sin),
            "cos" => Some(Unary::Cos),
            _ => None,
        };
        if let Some(op) = unary {
            self.expect(b'(')?;
            let a = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::Unary(op, Box::new(a)));
        }
        let binary = match name {
            "min" => Some(Binary::Min),
            "max" => Some(Binary::Max),
            _ => None,
        };
        if let Some(op) = binary {
            self.expect(b'(')?;
            let a = self.expr()?;
            self.expect(b',')?;
            let b = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::Binary(op, Box::new(a), Box::new(b)));
        }
        let (axis, digits) = name.split_at(1);
        let imag = match axis {
            "x" => false,
            "y" => true,
            _ => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unknown identifier `{name}`"),
                })
            }
        };
        match digits.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Expr::Coord(2 * (k - 1) + usize::from(imag))),
            _ => Err(Error::Parse {
                offset: start,
                message: format!("unknown identifier `{name}`"),
            }),
        }
    }
}
