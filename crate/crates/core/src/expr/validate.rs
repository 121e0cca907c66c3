use std::fmt;

use super::{strip_sign, Expr};

/// What a symbol denotes, as far as realizability is concerned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolClass {
    /// A state or input current.
    Signal,
    /// A fixed current or gain with a known value.
    Constant(f64),
    /// Nothing is known; treated as a possible constant.
    Unknown,
}

/// One offending subtree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub subtree: String,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.subtree, self.reason)
    }
}

/// Check that `expr` maps onto summing nets, mirrors and `a·b/c` multipliers,
/// with every symbol of unknown kind.
pub fn validate_synthesizable(expr: &Expr) -> Vec<Diagnostic> {
    validate_with(expr, &|_| SymbolClass::Unknown)
}

/// As [`validate_synthesizable`], with symbol kinds supplied by `classify`.
pub fn validate_with(expr: &Expr, classify: &dyn Fn(&str) -> SymbolClass) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    numerator(expr, classify, &mut out);
    out
}

fn diag(out: &mut Vec<Diagnostic>, e: &Expr, reason: &str) {
    out.push(Diagnostic {
        subtree: e.to_string(),
        reason: reason.to_string(),
    });
}

fn numerator(e: &Expr, classify: &dyn Fn(&str) -> SymbolClass, out: &mut Vec<Diagnostic>) {
    match e {
        Expr::Constant(c) if !c.is_finite() => diag(out, e, "non-finite constant"),
        Expr::Constant(_) | Expr::Symbol(_) => {}
        Expr::Negate(x) | Expr::PowInt(x, _) => numerator(x, classify, out),
        Expr::Add(cs) | Expr::Mul(cs) => cs.iter().for_each(|c| numerator(c, classify, out)),
        Expr::Div(n, d) => {
            numerator(n, classify, out);
            denominator(d, classify, out);
        }
    }
}

fn denominator(e: &Expr, classify: &dyn Fn(&str) -> SymbolClass, out: &mut Vec<Diagnostic>) {
    match e {
        Expr::Constant(c) => {
            if *c == 0.0 || !c.is_finite() {
                diag(out, e, "divisor is not a nonzero finite constant");
            }
        }
        Expr::Symbol(s) => match classify(s) {
            SymbolClass::Signal => diag(
                out,
                e,
                "signal used as a divisor without a DC offset (needs `K + signal`)",
            ),
            SymbolClass::Constant(0.0) => diag(out, e, "divisor constant is zero"),
            _ => {}
        },
        Expr::Negate(x) => denominator(x, classify, out),
        Expr::PowInt(x, _) => denominator(x, classify, out),
        Expr::Mul(cs) => cs.iter().for_each(|c| denominator(c, classify, out)),
        Expr::Div(..) => diag(out, e, "nested division inside a divisor"),
        Expr::Add(cs) => divisor_sum(e, cs, classify, out),
    }
}

fn divisor_sum(
    whole: &Expr,
    addends: &[Expr],
    classify: &dyn Fn(&str) -> SymbolClass,
    out: &mut Vec<Diagnostic>,
) {
    let is_signal = |s: &str| classify(s) == SymbolClass::Signal;
    let mut has_offset = false;
    for a in addends {
        let (negative, magnitude) = strip_sign(a);
        if negative {
            diag(out, a, "subtracted term inside a divisor sum");
            continue;
        }
        if !is_monomial(&magnitude) {
            diag(
                out,
                a,
                "divisor sum addend must be a product of constants and signals",
            );
            continue;
        }
        if magnitude.is_constant_under(&is_signal) {
            let value = magnitude.eval_with(&|s| match classify(s) {
                SymbolClass::Constant(v) => Some(v),
                _ => None,
            });
            match value {
                // Unknown symbols may still be positive constants.
                Err(_) => has_offset = true,
                Ok(v) if v > 0.0 => has_offset = true,
                Ok(_) => diag(out, a, "DC offset in divisor sum is not positive"),
            }
        }
    }
    if !has_offset {
        diag(out, whole, "divisor sum has no positive DC offset");
    }
}

fn is_monomial(e: &Expr) -> bool {
    match e {
        Expr::Constant(_) | Expr::Symbol(_) => true,
        Expr::PowInt(b, _) => is_monomial(b),
        Expr::Mul(cs) => cs.iter().all(is_monomial),
        _ => false,
    }
}
