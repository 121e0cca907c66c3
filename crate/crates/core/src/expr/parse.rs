use super::{is_valid_symbol, Expr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("exponent error at {pos}: {message}")]
    Exponent { pos: usize, message: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Exponent { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64, String),
    Symbol(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn syntax(pos: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        pos,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Exponent part only when digits follow, so `2e` stays a
                // malformed juxtaposition rather than a number.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
                out.push((start, Tok::Number(value, lit.to_string())));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let name = &text[start..i];
                debug_assert!(is_valid_symbol(name));
                out.push((start, Tok::Symbol(name.to_string())));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(syntax(i, format!("unexpected character `{ch}`")));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.term()?;
        let mut terms = vec![first];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    terms.push(Expr::negate(self.term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        // Factors collected by consecutive `*` since the last `/`.
        let mut open: Option<Vec<Expr>> = None;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    match open.as_mut() {
                        Some(fs) => fs.push(rhs),
                        None => open = Some(vec![acc.clone(), rhs]),
                    }
                }
                Some(Tok::Slash) => {
                    let at = self.offset();
                    self.bump();
                    if let Some(fs) = open.take() {
                        acc = Expr::Mul(fs);
                    }
                    let den = self.factor()?;
                    if den == Expr::Constant(0.0) {
                        return Err(syntax(at, "division by literal zero"));
                    }
                    acc = Expr::div(acc, den);
                }
                _ => break,
            }
        }
        if let Some(fs) = open {
            acc = Expr::Mul(fs);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::negate(self.factor()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = match self.bump() {
            Some(Tok::Number(value, lit)) => {
                let integral = lit.bytes().all(|b| b.is_ascii_digit());
                if !integral || value < 1.0 || value > u32::MAX as f64 {
                    return Err(ParseError::Exponent {
                        pos: at,
                        message: format!("exponent `{lit}` is not a positive integer"),
                    });
                }
                value as u32
            }
            Some(Tok::Minus) => {
                return Err(ParseError::Exponent {
                    pos: at,
                    message: "negative exponent".into(),
                })
            }
            Some(Tok::Symbol(s)) => {
                return Err(ParseError::Exponent {
                    pos: at,
                    message: format!("exponent `{s}` is not an integer literal"),
                })
            }
            Some(Tok::LParen) => {
                return Err(ParseError::Exponent {
                    pos: at,
                    message: "exponent must be an integer literal".into(),
                })
            }
            _ => return Err(syntax(at, "expected exponent after `^`")),
        };
        if self.peek() == Some(&Tok::Caret) {
            return Err(syntax(self.offset(), "chained `^`; parenthesize the base"));
        }
        Ok(Expr::pow(base, exponent))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Number(v, _)) => Ok(Expr::Constant(v)),
            Some(Tok::Symbol(s)) => Ok(Expr::Symbol(s)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(syntax(self.offset_before(), "expected `)`")),
                }
            }
            Some(t) => Err(syntax(at, format!("unexpected {}", describe(&t)))),
            None => Err(syntax(at, "unexpected end of input")),
        }
    }

    fn offset_before(&self) -> usize {
        self.toks
            .get(self.pos.saturating_sub(1))
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }
}

fn describe(t: &Tok) -> &'static str {
    match t {
        Tok::Number(..) => "number",
        Tok::Symbol(_) => "symbol",
        Tok::Plus => "`+`",
        Tok::Minus => "`-`",
        Tok::Star => "`*`",
        Tok::Slash => "`/`",
        Tok::Caret => "`^`",
        Tok::LParen => "`(`",
        Tok::RParen => "`)`",
    }
}

/// Parse an infix expression. Positions in errors are byte offsets.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        let at = p.offset();
        let t = p.toks[p.pos].1.clone();
        return Err(syntax(at, format!("unexpected {} after expression", describe(&t))));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Expr {
        Expr::symbol(s)
    }

    #[test]
    fn synapse_rhs() {
        assert_eq!(
            parse_expr("-s + I_ext").unwrap(),
            Expr::Add(vec![Expr::negate(sym("s")), sym("I_ext")])
        );
    }

    #[test]
    fn fhn_voltage_rhs() {
        let expected = Expr::Add(vec![
            sym("v"),
            Expr::negate(Expr::div(Expr::pow(sym("v"), 3), Expr::Constant(3.0))),
            Expr::negate(sym("w")),
            sym("I_ext"),
        ]);
        assert_eq!(parse_expr("v - v^3/3 - w + I_ext").unwrap(), expected);
    }

    #[test]
    fn single_symbol() {
        assert_eq!(parse_expr("x").unwrap(), sym("x"));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse_expr("-x^2").unwrap(),
            Expr::negate(Expr::pow(sym("x"), 2))
        );
        assert_eq!(
            parse_expr("a/b/c").unwrap(),
            Expr::div(Expr::div(sym("a"), sym("b")), sym("c"))
        );
        assert_eq!(
            parse_expr("a*b/c").unwrap(),
            Expr::div(Expr::Mul(vec![sym("a"), sym("b")]), sym("c"))
        );
        assert_eq!(
            parse_expr("a/b*c").unwrap(),
            Expr::Mul(vec![Expr::div(sym("a"), sym("b")), sym("c")])
        );
        assert_eq!(
            parse_expr("a*b*c").unwrap(),
            Expr::Mul(vec![sym("a"), sym("b"), sym("c")])
        );
        assert_eq!(
            parse_expr("(a*b)*c").unwrap(),
            Expr::Mul(vec![Expr::Mul(vec![sym("a"), sym("b")]), sym("c")])
        );
        assert_eq!(
            parse_expr("0.18*(v + 0.7 - 0.8*w)").unwrap(),
            Expr::Mul(vec![
                Expr::Constant(0.18),
                Expr::Add(vec![
                    sym("v"),
                    Expr::Constant(0.7),
                    Expr::negate(Expr::Mul(vec![Expr::Constant(0.8), sym("w")])),
                ]),
            ])
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_expr("1e-6").unwrap(), Expr::Constant(1e-6));
        assert_eq!(parse_expr("2.5E+3").unwrap(), Expr::Constant(2500.0));
        assert_eq!(parse_expr(".5").unwrap(), Expr::Constant(0.5));
    }

    #[test]
    fn exponent_errors() {
        for text in ["x^0.5", "x^0", "x^-1", "x^y", "x^(2)"] {
            assert!(
                matches!(parse_expr(text), Err(ParseError::Exponent { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_expr("a + * b").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 4, .. }), "{err:?}");
        assert!(matches!(parse_expr("(a + b"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("a b"), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expr(""), Err(ParseError::Syntax { pos: 0, .. })));
        assert!(matches!(parse_expr("a $ b"), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expr("x/0"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("x^2^3"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("2e"), Err(ParseError::Syntax { .. })));
    }
}
