//! Arithmetic expressions over state, input and parameter symbols.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := base ('^' INT)?
//! base   := NUMBER | SYMBOL | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. The exponent must
//! be a positive integer literal. Chains of `+`/`-` and of `*` flatten into a
//! single n-ary node; a binary `-` becomes a `Negate` child of the sum. `/` is
//! binary and left-associative.

mod parse;
mod split;
mod validate;

use std::collections::HashMap;
use std::fmt;

pub use parse::{parse_expr, ParseError};
pub use split::{signed_addends, split_terms, strip_sign, Factors, TermSplit};
pub use validate::{
    validate_synthesizable, validate_with, Diagnostic, SymbolClass,
};

/// Absolute magnitude below which a denominator is treated as zero.
pub const DIVISION_EPSILON: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Symbol(String),
    Negate(Box<Expr>),
    /// Two or more addends.
    Add(Vec<Expr>),
    /// Two or more factors.
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Exponent is at least 1.
    PowInt(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("division by zero")]
    DivisionByZero,
}

pub fn is_valid_symbol(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Constant(value)
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        Expr::Symbol(name.into())
    }

    pub fn negate(e: Expr) -> Self {
        Expr::Negate(Box::new(e))
    }

    pub fn div(num: Expr, den: Expr) -> Self {
        Expr::Div(Box::new(num), Box::new(den))
    }

    pub fn pow(base: Expr, exponent: u32) -> Self {
        Expr::PowInt(Box::new(base), exponent)
    }

    /// Sum of `terms`; a single term is returned unwrapped.
    pub fn sum(mut terms: Vec<Expr>) -> Self {
        match terms.len() {
            0 => Expr::Constant(0.0),
            1 => terms.pop().unwrap(),
            _ => Expr::Add(terms),
        }
    }

    /// Product of `factors`; a single factor is returned unwrapped.
    pub fn product(mut factors: Vec<Expr>) -> Self {
        match factors.len() {
            0 => Expr::Constant(1.0),
            1 => factors.pop().unwrap(),
            _ => Expr::Mul(factors),
        }
    }

    /// Evaluate with symbols resolved by `lookup`.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        self.eval_guarded(lookup, DIVISION_EPSILON)
    }

    /// As [`Expr::eval_with`], dividing by any value with IEEE semantics.
    /// Circuit-scale expressions may divide by products of small currents.
    pub fn eval_unguarded(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        self.eval_guarded(lookup, 0.0)
    }

    fn eval_guarded(
        &self,
        lookup: &dyn Fn(&str) -> Option<f64>,
        epsilon: f64,
    ) -> Result<f64, EvalError> {
        let rec = |e: &Expr| e.eval_guarded(lookup, epsilon);
        Ok(match self {
            Expr::Constant(c) => *c,
            Expr::Symbol(name) => {
                lookup(name).ok_or_else(|| EvalError::UnboundSymbol(name.clone()))?
            }
            Expr::Negate(e) => -rec(e)?,
            Expr::Add(children) => {
                let mut acc = 0.0;
                for c in children {
                    acc += rec(c)?;
                }
                acc
            }
            Expr::Mul(children) => {
                let mut acc = 1.0;
                for c in children {
                    acc *= rec(c)?;
                }
                acc
            }
            Expr::Div(n, d) => {
                let num = rec(n)?;
                let den = rec(d)?;
                if den.abs() < epsilon {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::PowInt(b, n) => rec(b)?.powi(*n as i32),
        })
    }

    pub fn eval(&self, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|name| env.get(name).copied())
    }

    /// All symbol names in first-occurrence order, without duplicates.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit_symbols(&mut |s| {
            if !out.iter().any(|o: &String| o == s) {
                out.push(s.to_string());
            }
        });
        out
    }

    fn visit_symbols(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Expr::Constant(_) => {}
            Expr::Symbol(s) => f(s),
            Expr::Negate(e) | Expr::PowInt(e, _) => e.visit_symbols(f),
            Expr::Add(cs) | Expr::Mul(cs) => cs.iter().for_each(|c| c.visit_symbols(f)),
            Expr::Div(n, d) => {
                n.visit_symbols(f);
                d.visit_symbols(f);
            }
        }
    }

    /// True when no symbol satisfying `is_signal` occurs in the tree.
    pub fn is_constant_under(&self, is_signal: &dyn Fn(&str) -> bool) -> bool {
        let mut constant = true;
        self.visit_symbols(&mut |s| constant &= !is_signal(s));
        constant
    }

    /// Replace symbols through `f`; symbols mapped to `None` are left alone.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Constant(_) => self.clone(),
            Expr::Symbol(s) => f(s).unwrap_or_else(|| self.clone()),
            Expr::Negate(e) => Expr::negate(e.substitute(f)),
            Expr::Add(cs) => Expr::Add(cs.iter().map(|c| c.substitute(f)).collect()),
            Expr::Mul(cs) => Expr::Mul(cs.iter().map(|c| c.substitute(f)).collect()),
            Expr::Div(n, d) => Expr::div(n.substitute(f), d.substitute(f)),
            Expr::PowInt(b, n) => Expr::pow(b.substitute(f), *n),
        }
    }

    /// Resolve symbols to slot indices for repeated evaluation.
    pub fn compile(
        &self,
        slot_of: &dyn Fn(&str) -> Option<usize>,
    ) -> Result<CompiledExpr, EvalError> {
        let mut ops = Vec::new();
        self.emit(slot_of, &mut ops)?;
        Ok(CompiledExpr { ops })
    }

    fn emit(
        &self,
        slot_of: &dyn Fn(&str) -> Option<usize>,
        ops: &mut Vec<Op>,
    ) -> Result<(), EvalError> {
        match self {
            Expr::Constant(c) => ops.push(Op::Const(*c)),
            Expr::Symbol(s) => {
                let slot = slot_of(s).ok_or_else(|| EvalError::UnboundSymbol(s.clone()))?;
                ops.push(Op::Load(slot));
            }
            Expr::Negate(e) => {
                e.emit(slot_of, ops)?;
                ops.push(Op::Neg);
            }
            Expr::Add(cs) => {
                cs[0].emit(slot_of, ops)?;
                for c in &cs[1..] {
                    c.emit(slot_of, ops)?;
                    ops.push(Op::Add);
                }
            }
            Expr::Mul(cs) => {
                cs[0].emit(slot_of, ops)?;
                for c in &cs[1..] {
                    c.emit(slot_of, ops)?;
                    ops.push(Op::Mul);
                }
            }
            Expr::Div(n, d) => {
                n.emit(slot_of, ops)?;
                d.emit(slot_of, ops)?;
                ops.push(Op::Div);
            }
            Expr::PowInt(b, n) => {
                b.emit(slot_of, ops)?;
                ops.push(Op::Pow(*n as i32));
            }
        }
        Ok(())
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(_) => 1,
            Expr::Mul(_) | Expr::Div(..) => 2,
            Expr::Negate(_) => 3,
            Expr::PowInt(..) => 4,
            Expr::Constant(_) | Expr::Symbol(_) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.fmt_bare(f)?;
            write!(f, ")")
        } else {
            self.fmt_bare(f)
        }
    }

    fn fmt_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Constant(c) => write!(f, "{c}"),
            Expr::Symbol(s) => write!(f, "{s}"),
            Expr::Negate(e) => {
                write!(f, "-")?;
                e.fmt_at(f, 3)
            }
            Expr::Add(cs) => {
                cs[0].fmt_at(f, 2)?;
                for c in &cs[1..] {
                    match c {
                        Expr::Negate(inner) => {
                            write!(f, " - ")?;
                            inner.fmt_at(f, 2)?;
                        }
                        _ => {
                            write!(f, " + ")?;
                            c.fmt_at(f, 2)?;
                        }
                    }
                }
                Ok(())
            }
            Expr::Mul(cs) => {
                // A leading product or quotient would be re-flattened, later
                // quotients would re-associate.
                match &cs[0] {
                    Expr::Mul(_) => cs[0].fmt_at(f, 3)?,
                    other => other.fmt_at(f, 2)?,
                }
                for c in &cs[1..] {
                    write!(f, " * ")?;
                    c.fmt_at(f, 3)?;
                }
                Ok(())
            }
            Expr::Div(n, d) => {
                n.fmt_at(f, 2)?;
                write!(f, " / ")?;
                d.fmt_at(f, 3)
            }
            Expr::PowInt(b, n) => {
                b.fmt_at(f, 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_bare(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Load(usize),
    Neg,
    Add,
    Mul,
    Div,
    Pow(i32),
}

/// Stack-machine form of an [`Expr`] with symbols bound to slots.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledExpr {
    ops: Vec<Op>,
}

impl CompiledExpr {
    /// Evaluate against `slots`. Division by a near-zero value yields an
    /// error, as in [`Expr::eval`].
    pub fn eval(&self, slots: &[f64], stack: &mut Vec<f64>) -> Result<f64, EvalError> {
        self.run(slots, stack, DIVISION_EPSILON)
    }

    /// Evaluate with IEEE division, as in [`Expr::eval_unguarded`].
    pub fn eval_unguarded(&self, slots: &[f64], stack: &mut Vec<f64>) -> f64 {
        self.run(slots, stack, 0.0).unwrap_or(f64::NAN)
    }

    fn run(&self, slots: &[f64], stack: &mut Vec<f64>, epsilon: f64) -> Result<f64, EvalError> {
        stack.clear();
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Load(i) => stack.push(slots[i]),
                Op::Neg => {
                    let top = stack.last_mut().unwrap();
                    *top = -*top;
                }
                Op::Pow(n) => {
                    let top = stack.last_mut().unwrap();
                    *top = top.powi(n);
                }
                Op::Add | Op::Mul | Op::Div => {
                    let rhs = stack.pop().unwrap();
                    let lhs = stack.last_mut().unwrap();
                    match *op {
                        Op::Add => *lhs += rhs,
                        Op::Mul => *lhs *= rhs,
                        _ => {
                            if rhs.abs() < epsilon {
                                return Err(EvalError::DivisionByZero);
                            }
                            *lhs /= rhs
                        }
                    }
                }
            }
        }
        Ok(stack.pop().unwrap_or(0.0))
    }
}
