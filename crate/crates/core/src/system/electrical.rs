//! Rewriting a model-unit system into current-valued form.
//!
//! Every state and input becomes a current `U·x` (`U` = amperes per model
//! unit). Each term of a right-hand side is brought to degree one in currents
//! so that `F_e(U·x) = U·F(x)` holds pointwise:
//!
//! * a term of degree `d > 1` is divided by `d − 1` scale currents; a numeric
//!   coefficient `c` is folded into the first one (`v³/3 → v³/(I_b·I_x)` with
//!   `I_b = 3U`, `I_x = U`);
//! * a term of degree `d < 1` is multiplied up by promoting numerator
//!   parameters to currents (`V_M2 → I_V_M2 = U·V_M2`), then by a coefficient
//!   current, then by `I_x`;
//! * a degree-one term with coefficient `c ≠ 1` becomes `I_c·x/I_x`.
//!
//! Sums nested inside a term are homogenized to their highest degree first,
//! so `K2 + X` becomes `I_K2 + X`. Parameters that survive as plain
//! multipliers keep their dimensionless values.

use std::collections::{BTreeMap, HashSet};

use super::{DynamicalSystem, Input, StateEquation, UnitMap};
use crate::expr::{signed_addends, Expr, Factors};

/// Map `system` onto currents and circuit time.
pub fn to_electrical(system: &DynamicalSystem, units: &UnitMap) -> DynamicalSystem {
    let mut scaler = Scaler::new(system, units.current_per_unit);
    let states: Vec<StateEquation> = system
        .states
        .iter()
        .map(|st| StateEquation {
            name: st.name.clone(),
            tau: st.tau * units.time_scale,
            rhs: scaler.homogenize(&st.rhs, Some(1)).0,
            initial_value: st.initial_value * units.current_per_unit,
        })
        .collect();
    let inputs = system
        .inputs
        .iter()
        .map(|i| Input {
            name: i.name.clone(),
            default: i.default * units.current_per_unit,
        })
        .collect();

    let mut parameters = BTreeMap::new();
    for st in &states {
        for sym in st.rhs.symbols() {
            if system.is_signal(&sym) {
                continue;
            }
            let value = scaler
                .currents
                .get(&sym)
                .or_else(|| system.parameters.get(&sym))
                .copied()
                .expect("every rewritten symbol is declared");
            parameters.insert(sym, value);
        }
    }
    DynamicalSystem::new(system.name.clone(), states, inputs, parameters)
        .expect("electrical rewrite preserves validity")
}

struct Scaler<'a> {
    system: &'a DynamicalSystem,
    unit: f64,
    currents: BTreeMap<String, f64>,
    /// Coefficient currents in allocation order, reused by value.
    coefficient_currents: Vec<(f64, String)>,
    taken: HashSet<String>,
    next_letter: u8,
    unit_name: String,
}

impl<'a> Scaler<'a> {
    fn new(system: &'a DynamicalSystem, unit: f64) -> Self {
        let taken: HashSet<String> = system
            .states
            .iter()
            .map(|s| s.name.clone())
            .chain(system.inputs.iter().map(|i| i.name.clone()))
            .chain(system.parameters.keys().cloned())
            .collect();
        let mut s = Scaler {
            system,
            unit,
            currents: BTreeMap::new(),
            coefficient_currents: Vec::new(),
            taken,
            next_letter: b'b',
            unit_name: String::new(),
        };
        s.unit_name = s.fresh("I_x");
        s
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        while self.taken.contains(&name) {
            name.push('_');
        }
        self.taken.insert(name.clone());
        name
    }

    fn unit_current(&mut self) -> Expr {
        self.currents.insert(self.unit_name.clone(), self.unit);
        Expr::symbol(self.unit_name.clone())
    }

    fn coefficient_current(&mut self, value: f64) -> Expr {
        if let Some((_, name)) = self.coefficient_currents.iter().find(|(v, _)| *v == value) {
            return Expr::symbol(name.clone());
        }
        let name = loop {
            if self.next_letter > b'z' {
                let n = self.coefficient_currents.len();
                break self.fresh(&format!("I_k{n}"));
            }
            let letter = self.next_letter as char;
            self.next_letter += 1;
            if letter == 'x' {
                continue;
            }
            let candidate = format!("I_{letter}");
            if !self.taken.contains(&candidate) {
                self.taken.insert(candidate.clone());
                break candidate;
            }
        };
        self.coefficient_currents.push((value, name.clone()));
        self.currents.insert(name.clone(), value);
        Expr::symbol(name)
    }

    fn promoted(&mut self, param: &str) -> Expr {
        let name = format!("I_{param}");
        if !self.currents.contains_key(&name) {
            let name = if self.taken.contains(&name) {
                self.fresh(&name)
            } else {
                self.taken.insert(name.clone());
                name
            };
            self.currents
                .insert(name.clone(), self.system.parameters[param] * self.unit);
            return Expr::symbol(name);
        }
        Expr::symbol(name)
    }

    /// Rewrite a sum so every addend has degree `target` (or the highest
    /// natural degree among its addends). Returns the degree reached.
    fn homogenize(&mut self, e: &Expr, target: Option<i32>) -> (Expr, i32) {
        let addends = signed_addends(e);
        let analysed: Vec<(bool, Term)> = addends
            .iter()
            .map(|(neg, t)| (*neg, self.analyse(t)))
            .collect();
        let target = target.unwrap_or_else(|| {
            analysed
                .iter()
                .map(|(_, t)| t.degree())
                .max()
                .unwrap_or(0)
                .max(0)
        });
        let terms = analysed
            .into_iter()
            .map(|(neg, t)| {
                let rewritten = self.rescale(t, target);
                if neg {
                    Expr::negate(rewritten)
                } else {
                    rewritten
                }
            })
            .collect();
        (Expr::sum(terms), target)
    }

    fn analyse(&mut self, term: &Expr) -> Term {
        let f = Factors::of(term);
        let mut item = |e: &Expr| -> Item {
            match e {
                Expr::Symbol(s) if self.system.is_signal(s) => Item::Signal(e.clone()),
                Expr::Symbol(s) => Item::Param(s.clone()),
                _ => {
                    let (rewritten, degree) = self.homogenize(e, None);
                    Item::Sum(rewritten, degree)
                }
            }
        };
        let numerator = f.numerator.iter().map(&mut item).collect();
        let denominator = f.denominator.iter().map(&mut item).collect();
        Term {
            coefficient: f.coefficient,
            numerator,
            denominator,
        }
    }

    fn rescale(&mut self, mut t: Term, target: i32) -> Expr {
        let degree = t.degree();
        let mut extra_num = Vec::new();
        let mut extra_den = Vec::new();
        if degree < target {
            let mut deficit = target - degree;
            for it in t.numerator.iter_mut() {
                if deficit == 0 {
                    break;
                }
                if let Item::Param(p) = it {
                    let promoted = self.promoted(p);
                    *it = Item::Signal(promoted);
                    deficit -= 1;
                }
            }
            if deficit > 0 && t.coefficient != 1.0 {
                extra_num.push(self.coefficient_current(t.coefficient * self.unit));
                t.coefficient = 1.0;
                deficit -= 1;
            }
            for _ in 0..deficit {
                extra_num.push(self.unit_current());
            }
        } else if degree > target {
            let mut excess = degree - target;
            if t.coefficient != 1.0 {
                extra_den.push(self.coefficient_current(self.unit / t.coefficient));
                t.coefficient = 1.0;
                excess -= 1;
            }
            for _ in 0..excess {
                extra_den.push(self.unit_current());
            }
        }
        if t.coefficient != 1.0 && target >= 1 {
            extra_num.insert(0, self.coefficient_current(t.coefficient * self.unit));
            extra_den.push(self.unit_current());
            t.coefficient = 1.0;
        }

        let mut numerator: Vec<Expr> = extra_num;
        numerator.extend(t.numerator.into_iter().map(Item::into_expr));
        let mut denominator: Vec<Expr> = t.denominator.into_iter().map(Item::into_expr).collect();
        denominator.extend(extra_den);
        Factors {
            coefficient: t.coefficient,
            numerator,
            denominator,
        }
        .to_expr()
    }
}

enum Item {
    Signal(Expr),
    Param(String),
    Sum(Expr, i32),
}

impl Item {
    fn degree(&self) -> i32 {
        match self {
            Item::Signal(_) => 1,
            Item::Param(_) => 0,
            Item::Sum(_, d) => *d,
        }
    }

    fn into_expr(self) -> Expr {
        match self {
            Item::Signal(e) | Item::Sum(e, _) => e,
            Item::Param(p) => Expr::symbol(p),
        }
    }
}

struct Term {
    coefficient: f64,
    numerator: Vec<Item>,
    denominator: Vec<Item>,
}

impl Term {
    fn degree(&self) -> i32 {
        self.numerator.iter().map(Item::degree).sum::<i32>()
            - self.denominator.iter().map(Item::degree).sum::<i32>()
    }
}
