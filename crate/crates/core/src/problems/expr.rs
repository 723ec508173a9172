//! Arithmetic expressions in `x` and `y` with symbolic differentiation.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'y' | 'pi' | 'π' | 'e'
//!          | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | tan | exp | ln | log | sqrt | abs
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-x^2 = -(x^2)`. `log` is the natural logarithm.

use std::fmt;

use thiserror::Error;

use crate::mesh::Point;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("expression error at column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr<T> {
    Num(T),
    Var(Var),
    Neg(Box<Expr<T>>),
    Add(Box<Expr<T>>, Box<Expr<T>>),
    Sub(Box<Expr<T>>, Box<Expr<T>>),
    Mul(Box<Expr<T>>, Box<Expr<T>>),
    Div(Box<Expr<T>>, Box<Expr<T>>),
    Pow(Box<Expr<T>>, Box<Expr<T>>),
    Call(Func, Box<Expr<T>>),
}

impl<T: Scalar> Expr<T> {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser { chars: src.chars().collect(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn num(v: f64) -> Self {
        Expr::Num(T::lit(v))
    }

    pub fn x() -> Self {
        Expr::Var(Var::X)
    }

    pub fn y() -> Self {
        Expr::Var(Var::Y)
    }

    pub fn eval(&self, p: Point<T>) -> T {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => p[0],
            Expr::Var(Var::Y) => p[1],
            Expr::Neg(a) => -a.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, b) => {
                let base = a.eval(p);
                match **b {
                    Expr::Num(n) if n == n.round() && n.abs() < T::lit(64.0) => {
                        base.powi(n.to_i32().expect("small integer exponent"))
                    }
                    _ => base.powf(b.eval(p)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(p)),
        }
    }

    pub fn constant(&self) -> Option<T> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Partial derivative, simplified.
    pub fn derivative(&self, var: Var) -> Self {
        use Expr::*;
        match self {
            Num(_) => Expr::num(0.0),
            Var(v) => Expr::num(if *v == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
            Div(a, b) => div(
                sub(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
                pow((**b).clone(), Expr::num(2.0)),
            ),
            Pow(a, b) => match b.constant() {
                Some(n) => mul(
                    mul(Num(n), pow((**a).clone(), Num(n - T::one()))),
                    a.derivative(var),
                ),
                None => mul(
                    self.clone(),
                    add(
                        mul(b.derivative(var), call(Func::Ln, (**a).clone())),
                        div(mul((**b).clone(), a.derivative(var)), (**a).clone()),
                    ),
                ),
            },
            Call(f, a) => {
                let inner = (**a).clone();
                let da = a.derivative(var);
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Tan => add(Expr::num(1.0), pow(call(Func::Tan, inner), Expr::num(2.0))),
                    Func::Exp => self.clone(),
                    Func::Ln => div(Expr::num(1.0), inner),
                    Func::Sqrt => div(Expr::num(0.5), self.clone()),
                    Func::Abs => div(inner, self.clone()),
                };
                mul(outer, da)
            }
        }
    }

    pub fn gradient(&self) -> [Self; 2] {
        [self.derivative(Var::X), self.derivative(Var::Y)]
    }
}

pub fn add<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    match (a.constant(), b.constant()) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x.is_zero() => b,
        (_, Some(y)) if y.is_zero() => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    match (a.constant(), b.constant()) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(x), _) if x.is_zero() => neg(b),
        (_, Some(y)) if y.is_zero() => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    match (a.constant(), b.constant()) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) | (_, Some(x)) if x.is_zero() => Expr::Num(T::zero()),
        (Some(x), _) if x == T::one() => b,
        (_, Some(y)) if y == T::one() => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    match (a.constant(), b.constant()) {
        (Some(x), _) if x.is_zero() => Expr::Num(T::zero()),
        (_, Some(y)) if y == T::one() => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    match b.constant() {
        Some(n) if n.is_zero() => Expr::Num(T::one()),
        Some(n) if n == T::one() => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub fn neg<T: Scalar>(a: Expr<T>) -> Expr<T> {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn call<T: Scalar>(f: Func, a: Expr<T>) -> Expr<T> {
    Expr::Call(f, Box::new(a))
}

impl<T: Scalar> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < T::zero() => write!(f, "({v})"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> ExprError {
        ExprError { column: self.pos + 1, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr<T: Scalar>(&mut self) -> Result<Expr<T>, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term<T: Scalar>(&mut self) -> Result<Expr<T>, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary<T: Scalar>(&mut self) -> Result<Expr<T>, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power<T: Scalar>(&mut self) -> Result<Expr<T>, ExprError> {
        let base = self.primary()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn primary<T: Scalar>(&mut self) -> Result<Expr<T>, ExprError> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of expression"));
        };
        if c == '(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(e);
        }
        if c == 'π' {
            self.pos += 1;
            return Ok(Expr::num(std::f64::consts::PI));
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_alphabetic() {
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let name: String = self.chars[start..self.pos].iter().collect();
            return match name.as_str() {
                "x" => Ok(Expr::x()),
                "y" => Ok(Expr::y()),
                "pi" => Ok(Expr::num(std::f64::consts::PI)),
                "e" => Ok(Expr::num(std::f64::consts::E)),
                _ => match Func::from_name(&name) {
                    Some(f) => {
                        if !self.eat('(') {
                            return Err(self.error("expected '(' after function name"));
                        }
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(call(f, arg))
                    }
                    None => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier '{name}'")))
                    }
                },
            };
        }
        Err(self.error(&format!("unexpected character '{c}'")))
    }

    fn number<T: Scalar>(&mut self) -> Result<Expr<T>, ExprError> {
        let start = self.pos;
        let at = |p: &Self, i: usize| p.chars.get(i).copied();
        while at(self, self.pos).is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if at(self, self.pos).is_some_and(|c| c == 'e' || c == 'E') {
            let mut q = self.pos + 1;
            if at(self, q).is_some_and(|c| c == '+' || c == '-') {
                q += 1;
            }
            if at(self, q).is_some_and(|c| c.is_ascii_digit()) {
                self.pos = q;
                while at(self, self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map(Expr::num).map_err(|_| ExprError {
            column: start + 1,
            message: format!("invalid number '{text}'"),
        })
    }
}
