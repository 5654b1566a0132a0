//! Expressions for potentials and test functions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | atom ('^' uint)?
//! atom   := rational | 'i' | 'z'uint | 'zbar'uint | '(' expr ')' | builtin
//! ```

use kstar::{Builtin, Error, GaussRational, Jet, PotentialSource, Rational, Result, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Rational(Rational),
    I,
    /// Zero-based index.
    Var(Var),
    Builtin(Builtin),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(String),
    Slash,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    I,
    Z(usize),
    Zbar(usize),
    Builtin(Builtin),
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    let is_ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let digits_from = |start: usize| {
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        end
    };
    'outer: while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let single = match c {
            b'/' => Some(Tok::Slash),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            pos += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let end = digits_from(pos);
            out.push((pos, Tok::Num(text[pos..end].to_string())));
            pos = end;
            continue;
        }
        if !c.is_ascii_alphabetic() {
            let ch = text[pos..].chars().next().unwrap_or('?');
            return Err(syntax(pos, format!("unexpected character {ch:?}")));
        }
        for b in Builtin::ALL {
            let name = b.name();
            let end = pos + name.len();
            if text[pos..].starts_with(name) && (end == bytes.len() || !is_ident(bytes[end])) {
                out.push((pos, Tok::Builtin(b)));
                pos = end;
                continue 'outer;
            }
        }
        for (prefix, zbar) in [("zbar", true), ("z", false)] {
            if text[pos..].starts_with(prefix) {
                let start = pos + prefix.len();
                let end = digits_from(start);
                if end > start && (end == bytes.len() || !is_ident(bytes[end])) {
                    let k: usize = text[start..end]
                        .parse()
                        .map_err(|_| syntax(start, "variable index too large"))?;
                    out.push((pos, if zbar { Tok::Zbar(k) } else { Tok::Z(k) }));
                    pos = end;
                    continue 'outer;
                }
            }
        }
        if c == b'i' && (pos + 1 == bytes.len() || !is_ident(bytes[pos + 1])) {
            out.push((pos, Tok::I));
            pos += 1;
            continue;
        }
        let mut end = pos;
        while end < bytes.len() && (is_ident(bytes[end]) || bytes[end] == b'-') {
            end += 1;
        }
        return Err(syntax(pos, format!("unknown name {:?}", &text[pos..end])));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    len: usize,
    n: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.len, |(p, _)| *p)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.next();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.next();
            acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.next();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let atom = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(atom);
        }
        self.next();
        let pos = self.pos();
        match self.next() {
            Some(Tok::Num(d)) => {
                let e: u32 = d.parse().map_err(|_| syntax(pos, "exponent too large"))?;
                Ok(Expr::Pow(Box::new(atom), e))
            }
            _ => Err(syntax(pos, "expected a non-negative integer exponent")),
        }
    }

    fn index(&self, k: usize, pos: usize) -> Result<usize> {
        if k == 0 {
            return Err(syntax(pos, "variable indices start at 1"));
        }
        if k > self.n {
            return Err(Error::IndexOutOfRange { index: k, n: self.n });
        }
        Ok(k - 1)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.next() {
            Some(Tok::Num(p)) => {
                let literal = if self.peek() == Some(&Tok::Slash) {
                    self.next();
                    let qpos = self.pos();
                    match self.next() {
                        Some(Tok::Num(q)) => format!("{p}/{q}"),
                        _ => return Err(syntax(qpos, "expected a denominator")),
                    }
                } else {
                    p
                };
                let r: Rational = literal.parse().map_err(|e| match e {
                    Error::DivisionByZero => syntax(pos, "zero denominator"),
                    other => other,
                })?;
                Ok(Expr::Rational(r))
            }
            Some(Tok::I) => Ok(Expr::I),
            Some(Tok::Z(k)) => Ok(Expr::Var(Var::Holo(self.index(k, pos)?))),
            Some(Tok::Zbar(k)) => Ok(Expr::Var(Var::Antiholo(self.index(k, pos)?))),
            Some(Tok::Builtin(b)) => Ok(Expr::Builtin(b)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                let close = self.pos();
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(syntax(close, "expected ')'")),
                }
            }
            Some(t) => Err(syntax(pos, format!("unexpected {}", describe(&t)))),
            None => Err(syntax(pos, format!("unexpected end of input in {:?}", self.text))),
        }
    }
}

fn describe(t: &Tok) -> &'static str {
    match t {
        Tok::Slash => "'/'",
        Tok::Plus => "'+'",
        Tok::Minus => "'-'",
        Tok::Star => "'*'",
        Tok::Caret => "'^'",
        Tok::RParen => "')'",
        _ => "token",
    }
}

/// Parses `text` with variable indices checked against dimension `n`.
pub fn parse_expression(text: &str, n: usize) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        len: text.len(),
        n,
        text,
    };
    if p.toks.is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let e = p.expr()?;
    if p.at < p.toks.len() {
        let pos = p.pos();
        let t = p.next().expect("token");
        return Err(syntax(pos, format!("unexpected {}", describe(&t))));
    }
    Ok(e)
}

impl Expr {
    /// The jet of the expression in `n` variables, exact to `order`.
    pub fn eval(&self, n: usize, order: u32) -> Result<Jet> {
        Ok(match self {
            Expr::Rational(r) => Jet::constant(n, order, GaussRational::real(r.clone())),
            Expr::I => Jet::constant(n, order, GaussRational::i()),
            Expr::Var(v) => Jet::variable(n, order, *v)?,
            Expr::Builtin(b) => kstar::builtin_potential(*b, n, order)?,
            Expr::Add(a, b) => &a.eval(n, order)? + &b.eval(n, order)?,
            Expr::Sub(a, b) => &a.eval(n, order)? - &b.eval(n, order)?,
            Expr::Mul(a, b) => &a.eval(n, order)? * &b.eval(n, order)?,
            Expr::Neg(a) => -&a.eval(n, order)?,
            Expr::Pow(a, e) => a.eval(n, order)?.pow(*e),
        })
    }
}

/// A potential given by an expression, re-expanded on demand.
#[derive(Clone, Debug)]
pub struct ExprPotential {
    text: String,
    expr: Expr,
    n: usize,
}

impl ExprPotential {
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        Ok(ExprPotential {
            text: text.trim().to_string(),
            expr: parse_expression(text, n)?,
            n,
        })
    }
}

impl PotentialSource for ExprPotential {
    fn label(&self) -> String {
        format!("{} (n={})", self.text, self.n)
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn expand(&self, order: u32) -> Result<Jet> {
        self.expr.eval(self.n, order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kstar::MultiIndex;

    fn jet(text: &str, n: usize) -> Jet {
        parse_expression(text, n).unwrap().eval(n, 6).unwrap()
    }

    #[test]
    fn flat_potential_text() {
        let flat = kstar::builtin_potential(Builtin::Flat, 2, 6).unwrap();
        assert_eq!(jet("z1*zbar1 + z2*zbar2", 2), flat);
        assert_eq!(jet("flat", 2), flat);
    }

    #[test]
    fn rational_coefficient() {
        let e = parse_expression("zbar1^2 + 3/4*z1", 1).unwrap();
        let Expr::Add(_, rhs) = &e else { panic!("{e:?}") };
        let Expr::Mul(c, _) = rhs.as_ref() else { panic!("{rhs:?}") };
        assert_eq!(c.as_ref(), &Expr::Rational(Rational::new(3, 4).unwrap()));
        let j = e.eval(1, 4).unwrap();
        assert_eq!(j.coeff(&MultiIndex::from_indices(&[0], &[])), GaussRational::ratio(3, 4));
        assert_eq!(j.coeff(&MultiIndex::from_indices(&[], &[0, 0])), GaussRational::one());
    }

    #[test]
    fn index_beyond_dimension() {
        let err = parse_expression("z3", 2).unwrap_err();
        assert_eq!(err.to_string(), "index 3 exceeds dimension 2");
        assert!(parse_expression("zbar0", 2).is_err());
    }

    #[test]
    fn imaginary_unit_negation_and_builtins() {
        let j = jet("-(i*z1)^2 + fubini-study - 1/2", 1);
        let fs = kstar::builtin_potential(Builtin::FubiniStudy, 1, 6).unwrap();
        let expected = &(&fs + &jet("z1^2", 1)) - &Jet::constant(1, 6, GaussRational::ratio(1, 2));
        assert_eq!(j, expected);
        assert_eq!(jet("z1 - z1", 1), Jet::zero(1, 6));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        for (text, pos) in [("z1 +", 4), ("z1 ** 2", 4), ("(z1", 3), ("z1 $", 3), ("3/", 2), ("zed1", 0)] {
            match parse_expression(text, 1) {
                Err(Error::Parse { position, .. }) => assert_eq!(position, pos, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_expression("1/0", 1).is_err());
        assert!(parse_expression("", 1).is_err());
    }
}
