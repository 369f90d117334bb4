//! A small closed expression vocabulary for symbols `a(x, xi)`.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' integer)?
//! atom    := number | 'x' | 'xi' | 'ξ' | 'i'
//!          | 'bracket' '(' rational ')'       # (1 + x^2 + xi^2)^(p/2)
//!          | '(' sum ')'
//! rational := '-'? number ('/' number)?
//! ```
//!
//! The vocabulary is closed under `d/dx` and `d/dxi`, so every symbol built
//! from it carries exact derivatives of all orders.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Complex64),
    X,
    Xi,
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, u32),
    /// `(1 + x^2 + xi^2)^(p/2)`.
    Bracket(f64),
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Expr {
    pub fn real(v: f64) -> Self {
        Expr::Const(Complex64::new(v, 0.0))
    }

    pub fn constant(v: Complex64) -> Self {
        Expr::Const(v)
    }

    pub fn zero() -> Self {
        Expr::Const(ZERO)
    }

    pub fn one() -> Self {
        Expr::Const(ONE)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        let e = p.sum()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e.simplify())
    }

    pub fn eval(&self, x: f64, xi: f64) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::X => Complex64::new(x, 0.0),
            Expr::Xi => Complex64::new(xi, 0.0),
            Expr::Sum(terms) => terms.iter().map(|t| t.eval(x, xi)).sum(),
            Expr::Product(factors) => factors.iter().map(|f| f.eval(x, xi)).product(),
            Expr::Pow(base, k) => base.eval(x, xi).powu(*k),
            Expr::Bracket(p) => Complex64::new((1.0 + x * x + xi * xi).powf(0.5 * p), 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == ZERO)
    }

    /// `d/dx` when `wrt_x`, otherwise `d/dxi`.
    pub fn derivative(&self, wrt_x: bool) -> Expr {
        let d = match self {
            Expr::Const(_) => Expr::zero(),
            Expr::X => {
                if wrt_x {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Xi => {
                if wrt_x {
                    Expr::zero()
                } else {
                    Expr::one()
                }
            }
            Expr::Sum(terms) => Expr::Sum(terms.iter().map(|t| t.derivative(wrt_x)).collect()),
            Expr::Product(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for i in 0..factors.len() {
                    let di = factors[i].derivative(wrt_x);
                    if di.is_zero() {
                        continue;
                    }
                    let mut prod = factors.clone();
                    prod[i] = di;
                    terms.push(Expr::Product(prod));
                }
                Expr::Sum(terms)
            }
            Expr::Pow(base, k) => Expr::Product(vec![
                Expr::real(*k as f64),
                Expr::Pow(base.clone(), k - 1),
                base.derivative(wrt_x),
            ]),
            Expr::Bracket(p) => Expr::Product(vec![
                Expr::real(*p),
                if wrt_x { Expr::X } else { Expr::Xi },
                Expr::Bracket(p - 2.0),
            ]),
        };
        d.simplify()
    }

    /// `d^alpha/dx^alpha d^beta/dxi^beta`.
    pub fn partial(&self, alpha: usize, beta: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..alpha {
            e = e.derivative(true);
        }
        for _ in 0..beta {
            e = e.derivative(false);
        }
        e
    }

    /// Constant folding, flattening and removal of neutral elements.
    pub fn simplify(self) -> Expr {
        match self {
            Expr::Sum(terms) => {
                let mut constant = ZERO;
                let mut rest = Vec::new();
                for t in terms.into_iter().map(Expr::simplify) {
                    match t {
                        Expr::Const(c) => constant += c,
                        Expr::Sum(inner) => {
                            for u in inner {
                                match u {
                                    Expr::Const(c) => constant += c,
                                    other => rest.push(other),
                                }
                            }
                        }
                        other => rest.push(other),
                    }
                }
                if constant != ZERO {
                    rest.push(Expr::Const(constant));
                }
                match rest.len() {
                    0 => Expr::zero(),
                    1 => rest.pop().unwrap(),
                    _ => Expr::Sum(rest),
                }
            }
            Expr::Product(factors) => {
                let mut constant = ONE;
                let mut rest = Vec::new();
                for f in factors.into_iter().map(Expr::simplify) {
                    match f {
                        Expr::Const(c) => constant *= c,
                        Expr::Product(inner) => {
                            for u in inner {
                                match u {
                                    Expr::Const(c) => constant *= c,
                                    other => rest.push(other),
                                }
                            }
                        }
                        other => rest.push(other),
                    }
                }
                if constant == ZERO {
                    return Expr::zero();
                }
                if rest.is_empty() {
                    return Expr::Const(constant);
                }
                if constant != ONE {
                    rest.insert(0, Expr::Const(constant));
                }
                if rest.len() == 1 {
                    rest.pop().unwrap()
                } else {
                    Expr::Product(rest)
                }
            }
            Expr::Pow(base, k) => {
                let base = base.simplify();
                match (k, base) {
                    (0, _) => Expr::one(),
                    (1, b) => b,
                    (k, Expr::Const(c)) => Expr::Const(c.powu(k)),
                    (k, b) => Expr::Pow(Box::new(b), k),
                }
            }
            Expr::Bracket(p) if p == 0.0 => Expr::one(),
            other => other,
        }
    }

    /// Highest power of `(1 + |x| + |xi|)` the expression can grow like;
    /// an upper bound used as a default declared order.
    pub fn growth_order(&self) -> f64 {
        match self {
            Expr::Const(c) => {
                if *c == ZERO {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
            Expr::X | Expr::Xi => 1.0,
            Expr::Sum(terms) => terms
                .iter()
                .map(Expr::growth_order)
                .fold(f64::NEG_INFINITY, f64::max),
            Expr::Product(factors) => factors.iter().map(Expr::growth_order).sum(),
            Expr::Pow(base, k) => *k as f64 * base.growth_order(),
            Expr::Bracket(p) => *p,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", c.re)
                } else if c.re == 0.0 {
                    write!(f, "({}*i)", c.im)
                } else {
                    write!(f, "({} + {}*i)", c.re, c.im)
                }
            }
            Expr::X => write!(f, "x"),
            Expr::Xi => write!(f, "xi"),
            Expr::Sum(terms) => {
                write!(f, "(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Expr::Product(factors) => {
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            Expr::Pow(base, k) => write!(f, "({base})^{k}"),
            Expr::Bracket(p) => write!(f, "bracket({p})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
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
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut terms = vec![self.product()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.product()?);
            } else if self.eat(b'-') {
                let t = self.product()?;
                terms.push(Expr::Product(vec![Expr::real(-1.0), t]));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn product(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        while self.eat(b'*') {
            factors.push(self.unary()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Expr::Product(vec![Expr::real(-1.0), inner]));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            let k = self.number()?;
            if k.fract() != 0.0 || k < 0.0 || k > u32::MAX as f64 {
                self.pos = start;
                return Err(self.error("exponent must be a non-negative integer"));
            }
            return Ok(Expr::Pow(Box::new(base), k as u32));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // optional exponent
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        self.src[start..self.pos].parse::<f64>().map_err(|_| {
            self.pos = start;
            self.error("expected a number")
        })
    }

    fn rational(&mut self) -> Result<f64> {
        let sign = if self.eat(b'-') { -1.0 } else { 1.0 };
        let num = self.number()?;
        if self.eat(b'/') {
            let den = self.number()?;
            if den == 0.0 {
                return Err(self.error("zero denominator"));
            }
            return Ok(sign * num / den);
        }
        Ok(sign * num)
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::real(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                match self.ident() {
                    "x" => Ok(Expr::X),
                    "xi" => Ok(Expr::Xi),
                    "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
                    "bracket" => {
                        self.expect(b'(')?;
                        let p = self.rational()?;
                        self.expect(b')')?;
                        Ok(Expr::Bracket(p))
                    }
                    other => {
                        let msg = format!("unknown identifier '{other}'");
                        self.pos = start;
                        Err(self.error(&msg))
                    }
                }
            }
            Some(_) if self.src[self.pos..].starts_with('ξ') => {
                self.pos += 'ξ'.len_utf8();
                Ok(Expr::Xi)
            }
            Some(c) => Err(self.error(&format!("unexpected character '{}'", c as char))),
        }
    }
}
