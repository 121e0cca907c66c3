use super::Expr;

/// Sign-separated addends of an expression.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermSplit {
    pub positive_terms: Vec<Expr>,
    pub negative_terms: Vec<Expr>,
}

impl TermSplit {
    /// `Σ positive − Σ negative` as an expression.
    pub fn recombine(&self) -> Expr {
        let mut terms = self.positive_terms.clone();
        terms.extend(self.negative_terms.iter().cloned().map(Expr::negate));
        Expr::sum(terms)
    }
}

/// Pull every sign out of a product-like expression.
///
/// Returns `(negative, magnitude)` where `magnitude` carries no negation
/// through products, quotients, integer powers or negative literals. Sums are
/// left untouched.
pub fn strip_sign(e: &Expr) -> (bool, Expr) {
    match e {
        Expr::Negate(inner) => {
            let (neg, m) = strip_sign(inner);
            (!neg, m)
        }
        Expr::Constant(c) if *c < 0.0 => (true, Expr::Constant(-c)),
        Expr::Mul(children) => {
            let mut neg = false;
            let factors = children
                .iter()
                .map(|c| {
                    let (n, m) = strip_sign(c);
                    neg ^= n;
                    m
                })
                .collect();
            (neg, Expr::Mul(factors))
        }
        Expr::Div(n, d) => {
            let (sn, mn) = strip_sign(n);
            let (sd, md) = strip_sign(d);
            (sn ^ sd, Expr::div(mn, md))
        }
        Expr::PowInt(b, k) => {
            let (sb, mb) = strip_sign(b);
            (sb && k % 2 == 1, Expr::pow(mb, *k))
        }
        _ => (false, e.clone()),
    }
}

/// Flatten top-level sums (also through negations) into signed addends,
/// in source order. `true` marks a subtracted addend.
pub fn signed_addends(e: &Expr) -> Vec<(bool, Expr)> {
    let mut out = Vec::new();
    collect(e, false, &mut out);
    out
}

fn collect(e: &Expr, negated: bool, out: &mut Vec<(bool, Expr)>) {
    match e {
        Expr::Add(children) => children.iter().for_each(|c| collect(c, negated, out)),
        Expr::Negate(inner) if matches!(**inner, Expr::Add(_) | Expr::Negate(_)) => {
            collect(inner, !negated, out)
        }
        _ => {
            let (neg, m) = strip_sign(e);
            out.push((neg ^ negated, m));
        }
    }
}

/// Separate `e` into terms that feed the positive and negative rails.
pub fn split_terms(e: &Expr) -> TermSplit {
    let mut split = TermSplit::default();
    for (neg, term) in signed_addends(e) {
        if neg {
            split.negative_terms.push(term);
        } else {
            split.positive_terms.push(term);
        }
    }
    split
}

/// A term flattened into `coefficient · Π numerator / Π denominator`.
///
/// Numerator and denominator items are symbols or sums, in source order, with
/// integer powers expanded into repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    pub coefficient: f64,
    pub numerator: Vec<Expr>,
    pub denominator: Vec<Expr>,
}

impl Factors {
    pub fn of(e: &Expr) -> Self {
        let mut f = Factors {
            coefficient: 1.0,
            numerator: Vec::new(),
            denominator: Vec::new(),
        };
        f.absorb(e, false);
        f
    }

    fn absorb(&mut self, e: &Expr, inverted: bool) {
        match e {
            Expr::Constant(c) => {
                if inverted {
                    self.coefficient /= c;
                } else {
                    self.coefficient *= c;
                }
            }
            Expr::Negate(inner) => {
                self.coefficient = -self.coefficient;
                self.absorb(inner, inverted);
            }
            Expr::Mul(children) => children.iter().for_each(|c| self.absorb(c, inverted)),
            Expr::Div(n, d) => {
                self.absorb(n, inverted);
                self.absorb(d, !inverted);
            }
            Expr::PowInt(b, k) => {
                for _ in 0..*k {
                    self.absorb(b, inverted);
                }
            }
            Expr::Symbol(_) | Expr::Add(_) => {
                if inverted {
                    self.denominator.push(e.clone());
                } else {
                    self.numerator.push(e.clone());
                }
            }
        }
    }

    /// Rebuild an expression, regrouping adjacent repeats as powers.
    pub fn to_expr(&self) -> Expr {
        let mut num = group_powers(&self.numerator);
        if self.coefficient != 1.0 || num.is_empty() {
            num.insert(0, Expr::Constant(self.coefficient));
        }
        let num = Expr::product(num);
        if self.denominator.is_empty() {
            num
        } else {
            Expr::div(num, Expr::product(group_powers(&self.denominator)))
        }
    }
}

fn group_powers(items: &[Expr]) -> Vec<Expr> {
    let mut out: Vec<Expr> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let mut j = i + 1;
        while j < items.len() && items[j] == items[i] {
            j += 1;
        }
        let base = items[i].clone();
        out.push(if j - i == 1 {
            base
        } else {
            Expr::pow(base, (j - i) as u32)
        });
        i = j;
    }
    out
}
