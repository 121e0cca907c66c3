#![allow(dead_code)]

use std::collections::BTreeMap;

use nbds_core::expr::{validate_with, Expr, SymbolClass};
use nbds_core::system::{DynamicalSystem, Input, StateEquation};
use rand::Rng;

pub const SIGNALS: [&str; 3] = ["x", "y", "u"];
pub const PARAMS: [(&str, f64); 2] = [("p", 0.7), ("q", 2.5)];

fn classify(s: &str) -> SymbolClass {
    if SIGNALS.contains(&s) {
        SymbolClass::Signal
    } else {
        PARAMS
            .iter()
            .find(|(n, _)| *n == s)
            .map_or(SymbolClass::Unknown, |(_, v)| SymbolClass::Constant(*v))
    }
}

fn signal<R: Rng>(rng: &mut R) -> Expr {
    Expr::symbol(SIGNALS[rng.gen_range(0..SIGNALS.len())])
}

fn param<R: Rng>(rng: &mut R) -> Expr {
    Expr::symbol(PARAMS[rng.gen_range(0..PARAMS.len())].0)
}

fn coefficient<R: Rng>(rng: &mut R) -> Expr {
    Expr::constant((rng.gen_range(0.1..3.0f64) * 1000.0).round() / 1000.0)
}

fn numerator_factor<R: Rng>(rng: &mut R) -> Expr {
    match rng.gen_range(0..20) {
        0..=11 => signal(rng),
        12..=15 => param(rng),
        16..=17 => Expr::pow(signal(rng), 2),
        _ => Expr::sum(vec![signal(rng), Expr::negate(param(rng))]),
    }
}

/// A sum with a positive offset and non-negative signal monomials.
fn divisor<R: Rng>(rng: &mut R) -> Expr {
    match rng.gen_range(0..4) {
        0 => param(rng),
        1 => Expr::sum(vec![param(rng), signal(rng)]),
        2 => Expr::sum(vec![coefficient(rng), Expr::product(vec![signal(rng), signal(rng)])]),
        _ => Expr::sum(vec![param(rng), signal(rng), signal(rng)]),
    }
}

fn term<R: Rng>(rng: &mut R) -> Expr {
    let mut num = Vec::new();
    if rng.gen_bool(0.5) {
        num.push(coefficient(rng));
    }
    for _ in 0..rng.gen_range(1..=3) {
        num.push(numerator_factor(rng));
    }
    let num = Expr::product(num);
    let t = if rng.gen_bool(0.4) {
        let den = (0..rng.gen_range(1..=2)).map(|_| divisor(rng)).collect();
        Expr::div(num, Expr::product(den))
    } else {
        num
    };
    if rng.gen_bool(0.4) {
        Expr::negate(t)
    } else {
        t
    }
}

/// A random expression over `x`, `y`, `u`, `p`, `q` that maps onto blocks.
pub fn synthesizable_expr<R: Rng>(rng: &mut R) -> Expr {
    loop {
        let terms = (0..rng.gen_range(1..=4)).map(|_| term(rng)).collect();
        let e = Expr::sum(terms);
        if validate_with(&e, &classify).is_empty() {
            return e;
        }
    }
}

/// Signals in `[0.05, 2]`, parameters at their fixed values.
pub fn random_point<R: Rng>(rng: &mut R) -> BTreeMap<String, f64> {
    let mut env: BTreeMap<String, f64> = SIGNALS
        .iter()
        .map(|s| (s.to_string(), rng.gen_range(0.05..2.0)))
        .collect();
    for (n, v) in PARAMS {
        env.insert(n.to_string(), v);
    }
    env
}

pub fn eval_at(e: &Expr, env: &BTreeMap<String, f64>) -> f64 {
    e.eval_with(&|s| env.get(s).copied()).expect("expression evaluates")
}

/// `ẋ = rhs`, `ẏ = −y`, input `u`, parameters `p`, `q`.
pub fn system_with(rhs: Expr) -> DynamicalSystem {
    DynamicalSystem::new(
        "random",
        vec![
            StateEquation {
                name: "x".into(),
                tau: 1e-3,
                rhs,
                initial_value: 0.0,
            },
            StateEquation {
                name: "y".into(),
                tau: 1e-3,
                rhs: Expr::negate(Expr::symbol("y")),
                initial_value: 0.0,
            },
        ],
        vec![Input {
            name: "u".into(),
            default: 0.0,
        }],
        PARAMS.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
    )
    .expect("random system is valid")
}

/// Sum of term magnitudes, the scale against which cancellation error is
/// measured.
pub fn magnitude(e: &Expr, env: &BTreeMap<String, f64>) -> f64 {
    nbds_core::expr::signed_addends(e)
        .iter()
        .map(|(_, t)| eval_at(t, env).abs())
        .sum()
}
