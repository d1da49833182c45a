//! Perturbation DSL.
//!
//! A perturbation `F(t, r, u, v, w)` is written as an infix expression over
//! the variables `t`, `r`, `u`, `v` (= ∂_t u) and `w` (= ∂_r u). Grammar:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right-associative *)
//! primary = number | "i" | var | func "(" expr ")" | "(" expr ")" ;
//! var     = "t" | "r" | "u" | "v" | "w" ;
//! func    = "exp" | "sin" | "cos" | "abs" | "conj" | "re" | "im" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! ```
//!
//! `i` is the imaginary unit. Unary minus binds looser than `^`, so `-u^2`
//! is `-(u^2)`.

mod assumption;
mod decompose;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

pub use assumption::{validate_assumption, AssumptionReport, SampleBox, Violation};
pub use decompose::{decompose_abc, Decomposition};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdent { pos: usize, name: String },
    #[error("singular operation: {0}")]
    Singular(&'static str),
    #[error("perturbation is not affine in (v, w): {0}")]
    NonlinearInDerivatives(String),
    #[error("unknown preset `{0}` (available: mass, damping, power_q[:q], paper_random_example, zero)")]
    UnknownPreset(String),
    #[error("invalid assumption parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    T,
    R,
    U,
    V,
    W,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::R => "r",
            Var::U => "u",
            Var::V => "v",
            Var::W => "w",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Abs,
    Conj,
    Re,
    Im,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Sin,
        Func::Cos,
        Func::Abs,
        Func::Conj,
        Func::Re,
        Func::Im,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Conj => "conj",
            Func::Re => "re",
            Func::Im => "im",
        }
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Func::Exp => z.exp(),
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Abs => C64::new(z.norm(), 0.0),
            Func::Conj => z.conj(),
            Func::Re => C64::new(z.re, 0.0),
            Func::Im => C64::new(z.im, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree. Numeric literals are non-negative; negation is a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Num(f64),
    ImagUnit,
    Var(Var),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Evaluation point. `t` and `r` are real, the field slots complex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub t: f64,
    pub r: f64,
    pub u: C64,
    pub v: C64,
    pub w: C64,
}

impl Point {
    pub fn new(t: f64, r: f64, u: C64, v: C64, w: C64) -> Self {
        Self { t, r, u, v, w }
    }

    fn var(&self, var: Var) -> C64 {
        match var {
            Var::T => C64::new(self.t, 0.0),
            Var::R => C64::new(self.r, 0.0),
            Var::U => self.u,
            Var::V => self.v,
            Var::W => self.w,
        }
    }
}

impl Node {
    pub fn num(x: f64) -> Node {
        if x < 0.0 {
            Node::Neg(Box::new(Node::Num(-x)))
        } else {
            Node::Num(x)
        }
    }

    pub fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
        Node::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eval(&self, pt: &Point) -> Result<C64, ExprError> {
        Ok(match self {
            Node::Num(x) => C64::new(*x, 0.0),
            Node::ImagUnit => C64::i(),
            Node::Var(v) => pt.var(*v),
            Node::Neg(a) => -a.eval(pt)?,
            Node::Call(f, a) => f.apply(a.eval(pt)?),
            Node::Binary(op, a, b) => {
                let x = a.eval(pt)?;
                let y = b.eval(pt)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == C64::new(0.0, 0.0) {
                            return Err(ExprError::Singular("division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => complex_pow(x, y)?,
                }
            }
        })
    }

    /// Number of occurrences of `var` in the tree.
    pub fn count_var(&self, var: Var) -> usize {
        match self {
            Node::Var(v) => usize::from(*v == var),
            Node::Num(_) | Node::ImagUnit => 0,
            Node::Neg(a) | Node::Call(_, a) => a.count_var(var),
            Node::Binary(_, a, b) => a.count_var(var) + b.count_var(var),
        }
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Node) -> Node {
        match self {
            Node::Var(v) if *v == var => with.clone(),
            Node::Num(_) | Node::ImagUnit | Node::Var(_) => self.clone(),
            Node::Neg(a) => Node::Neg(Box::new(a.substitute(var, with))),
            Node::Call(f, a) => Node::Call(*f, Box::new(a.substitute(var, with))),
            Node::Binary(op, a, b) => Node::binary(*op, a.substitute(var, with), b.substitute(var, with)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn fmt_min(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.fmt_min(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Node::Num(x) => write!(f, "{x}"),
            Node::ImagUnit => write!(f, "i"),
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Neg(a) => {
                write!(f, "-")?;
                a.fmt_min(f, 3)
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_min(f, 0)?;
                write!(f, ")")
            }
            Node::Binary(op, a, b) => {
                let (sym, lhs_min, rhs_min) = match op {
                    BinOp::Add => ("+", 1, 2),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                a.fmt_min(f, lhs_min)?;
                write!(f, "{sym}")?;
                b.fmt_min(f, rhs_min)
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_min(f, 0)
    }
}

fn complex_pow(base: C64, exp: C64) -> Result<C64, ExprError> {
    let zero = C64::new(0.0, 0.0);
    if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= i32::MAX as f64 {
        let n = exp.re as i32;
        if base == zero {
            return match n.cmp(&0) {
                std::cmp::Ordering::Less => Err(ExprError::Singular("zero to a negative power")),
                std::cmp::Ordering::Equal => Ok(C64::new(1.0, 0.0)),
                std::cmp::Ordering::Greater => Ok(zero),
            };
        }
        return Ok(base.powi(n));
    }
    if base == zero {
        return if exp.re > 0.0 {
            Ok(zero)
        } else {
            Err(ExprError::Singular("zero to a non-positive power"))
        };
    }
    if base.im == 0.0 && base.re > 0.0 && exp.im == 0.0 {
        return Ok(C64::new(base.re.powf(exp.re), 0.0));
    }
    Ok(base.powc(exp))
}

/// A parsed perturbation `F(t, r, u, v, w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationExpr {
    root: Node,
}

impl PerturbationExpr {
    pub fn new(root: Node) -> Self {
        Self { root }
    }

    pub fn zero() -> Self {
        Self::new(Node::Num(0.0))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn evaluate(&self, pt: &Point) -> Result<C64, ExprError> {
        self.root.eval(pt)
    }

    /// True when the tree is the literal `0`.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Num(x) if x == 0.0)
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.root.count_var(var) > 0
    }

    /// Resolves a named preset or parses `source` as an expression.
    pub fn from_preset_or_source(source: &str) -> Result<Self, ExprError> {
        match preset_source(source) {
            Some(Ok(text)) => parse(&text),
            Some(Err(e)) => Err(e),
            None => parse(source),
        }
    }
}

impl fmt::Display for PerturbationExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

pub const PRESET_NAMES: [&str; 5] = ["mass", "damping", "power_q", "paper_random_example", "zero"];

/// Source text of a named preset. `power_q` takes an optional `:q`
/// suffix (default q = 2) and expands to `u*abs(u)^(q-1)`.
pub fn preset_source(name: &str) -> Option<Result<String, ExprError>> {
    let (base, arg) = match name.split_once(':') {
        Some((b, a)) => (b.trim(), Some(a.trim())),
        None => (name.trim(), None),
    };
    let text = match (base, arg) {
        ("mass", None) => "u".to_string(),
        ("damping", None) => "v".to_string(),
        ("zero", None) => "0".to_string(),
        ("paper_random_example", None) => "t^5*exp(i*t+r^2)*u*v + u^6".to_string(),
        ("power_q", arg) => {
            let q = match arg.map(str::parse::<f64>) {
                None => 2.0,
                Some(Ok(q)) if q >= 1.0 && q.is_finite() => q,
                Some(_) => return Some(Err(ExprError::UnknownPreset(name.to_string()))),
            };
            format!("u*abs(u)^{}", q - 1.0)
        }
        (b, Some(_)) if PRESET_NAMES.contains(&b) => {
            return Some(Err(ExprError::UnknownPreset(name.to_string())))
        }
        _ => return None,
    };
    Some(Ok(text))
}
