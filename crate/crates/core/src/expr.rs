//! Coefficient expressions: a small arithmetic language over `t`, `x`, `y`.
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;      (* exponent must be constant *)
//! primary = number | "pi" | var | func , "(" , expr , ")" | "(" , expr , ")" ;
//! ```

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    #[error("exponent at offset {offset} must be constant")]
    NonConstantExponent { offset: usize },

    #[error("domain error in `{subexpr}`: {detail}")]
    Domain { subexpr: String, detail: String },

    #[error("coordinate `{0}` is not available at this point")]
    MissingCoordinate(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    X,
    Y,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ExprError> {
        parse(source)
    }

    pub fn uses(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses(v),
            Expr::Binary(_, a, b) => a.uses(v) || b.uses(v),
        }
    }

    pub fn is_constant(&self) -> bool {
        !self.uses(Var::T) && !self.uses(Var::X) && !self.uses(Var::Y)
    }

    /// Evaluates at time `t` and spatial point `point` (`x`, then `y`).
    pub fn eval(&self, t: f64, point: &[f64]) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => PI,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X) => *point.first().ok_or(ExprError::MissingCoordinate('x'))?,
            Expr::Var(Var::Y) => *point.get(1).ok_or(ExprError::MissingCoordinate('y'))?,
            Expr::Neg(e) => -e.eval(t, point)?,
            Expr::Call(f, e) => {
                let a = e.eval(t, point)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(self.domain(format!("sqrt of negative argument {a}")));
                        }
                        a.sqrt()
                    }
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval(t, point)?;
                let b = r.eval(t, point)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(self.domain(format!("negative base {a} with fractional exponent")));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(self.domain("zero raised to a negative power".into()));
                        }
                        a.powf(b)
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(self.domain(format!("non-finite result {v}")));
        }
        Ok(v)
    }

    fn domain(&self, detail: String) -> ExprError {
        ExprError::Domain {
            subexpr: self.to_string(),
            detail,
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized output; reparsing yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.expected("operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
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

    fn expected(&self, what: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            expected: what.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let at = self.pos;
        let exponent = self.unary()?;
        if !exponent.is_constant() {
            return Err(ExprError::NonConstantExponent { offset: at });
        }
        Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.expected("`)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.expected("number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.expected("digits"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark + 1;
                return Err(self.expected("exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ExprError::Syntax {
            offset: start,
            expected: "a number".into(),
        })
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "t" => return Ok(Expr::Var(Var::T)),
            "x" => return Ok(Expr::Var(Var::X)),
            "y" => return Ok(Expr::Var(Var::Y)),
            "pi" => return Ok(Expr::Pi),
            _ => {}
        }
        let Some(func) = Func::lookup(name) else {
            return Err(ExprError::UnknownIdentifier {
                offset: start,
                name: name.to_string(),
            });
        };
        if !self.eat(b'(') {
            return Err(self.expected("`(` after function name"));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.expected("`)`"));
        }
        Ok(Expr::Call(func, Box::new(arg)))
    }
}

/// Samples per axis used by [`CoefficientField::sup_bound`].
pub const SUP_SAMPLES: usize = 64;
/// Inflation applied to sampled maxima.
pub const SUP_SAFETY: f64 = 1.05;

/// An expression together with the box `∏[0, L_i] × [0, T]` it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub expr: Expr,
    pub lengths: Vec<f64>,
    pub horizon: f64,
}

impl CoefficientField {
    pub fn new(expr: Expr, lengths: Vec<f64>, horizon: f64) -> Self {
        CoefficientField { expr, lengths, horizon }
    }

    pub fn constant(value: f64, lengths: Vec<f64>, horizon: f64) -> Self {
        Self::new(Expr::Num(value), lengths, horizon)
    }

    pub fn eval(&self, t: f64, point: &[f64]) -> Result<f64, ExprError> {
        self.expr.eval(t, point)
    }

    /// `1.05 · max |f|` over a tensor grid with [`SUP_SAMPLES`] points per
    /// axis (endpoints included). Axes the expression ignores are not sampled.
    pub fn sup_bound(&self) -> Result<f64, ExprError> {
        let axis = |len: f64, used: bool| -> Vec<f64> {
            if used {
                (0..SUP_SAMPLES)
                    .map(|i| len * i as f64 / (SUP_SAMPLES - 1) as f64)
                    .collect()
            } else {
                vec![0.0]
            }
        };
        let ts = axis(self.horizon, self.expr.uses(Var::T));
        let xs = axis(self.lengths.first().copied().unwrap_or(0.0), self.expr.uses(Var::X));
        let ys = axis(self.lengths.get(1).copied().unwrap_or(0.0), self.expr.uses(Var::Y));
        let mut max = 0.0f64;
        for &t in &ts {
            for &x in &xs {
                for &y in &ys {
                    max = max.max(self.expr.eval(t, &[x, y])?.abs());
                }
            }
        }
        Ok(SUP_SAFETY * max)
    }
}
