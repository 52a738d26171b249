//! Text grammar for polynomials, e.g. `3/2*x0^2*x1 - x1 + 1`.
//!
//! The printer emits terms in descending graded-lex order and the parser
//! accepts any arithmetic expression over rationals and `x0..x{n-1}`
//! (division only by constants), so `parse(print(p)) == p`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{fmt_rational, parse_rational, Rational};

use super::Polynomial;

type QPoly = Polynomial<Rational>;

/// Byte cursor shared by the polynomial, measure and operator grammars.
pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(found) => self.err(format!("expected `{c}`, found `{found}`")),
                None => self.err(format!("expected `{c}`, found end of input")),
            }
        }
    }

    /// Consume `kw` if the input continues with it (after whitespace).
    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(kw) {
            let after = rest[kw.len()..].chars().next();
            if after.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                return false;
            }
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if len == 0 || !rest.starts_with(|c: char| c.is_ascii_alphabetic()) {
            return None;
        }
        self.pos += len;
        Some(rest[..len].to_string())
    }

    /// Unsigned decimal literal (`12`, `0.25`, `1e-3`).
    pub(crate) fn number(&mut self) -> Result<Rational> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let bytes = rest.as_bytes();
        let mut len = 0;
        while len < bytes.len() && (bytes[len].is_ascii_digit() || bytes[len] == b'.') {
            len += 1;
        }
        if len < bytes.len() && (bytes[len] == b'e' || bytes[len] == b'E') {
            let mut j = len + 1;
            if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                len = j;
            }
        }
        if len == 0 {
            return self.err("expected a number");
        }
        let lit = &rest[..len];
        let v = parse_rational(lit).or_else(|_| self.err(format!("invalid number `{lit}`")))?;
        self.pos += len;
        Ok(v)
    }

    /// Signed rational literal, allowing `p/q`.
    pub(crate) fn rational(&mut self) -> Result<Rational> {
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let mut v = self.number()?;
        if self.peek() == Some('/') {
            self.pos += 1;
            let d = self.number()?;
            if d.is_zero() {
                return self.err("division by zero");
            }
            v /= d;
        }
        Ok(if neg { -v } else { v })
    }

    pub(crate) fn finish(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(format!("unexpected trailing input `{c}`")),
        }
    }

    /// Polynomial expression in `nvars` variables.
    pub(crate) fn poly(&mut self, nvars: usize) -> Result<QPoly> {
        self.expr(nvars)
    }

    fn expr(&mut self, n: usize) -> Result<QPoly> {
        let mut acc = self.term(n)?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term(n)?;
            } else if self.peek() == Some('-') {
                self.pos += 1;
                acc = &acc - &self.term(n)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self, n: usize) -> Result<QPoly> {
        let mut acc = self.unary(n)?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary(n)?;
            } else if self.peek() == Some('/') {
                self.pos += 1;
                let at = self.pos;
                let d = self.unary(n)?;
                if !d.is_constant() {
                    return Err(Error::Parse { pos: at, msg: "division by a non-constant".into() });
                }
                let c = d.constant_term();
                if c.is_zero() {
                    return Err(Error::Parse { pos: at, msg: "division by zero".into() });
                }
                acc = acc.scale(&(Rational::one() / c));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self, n: usize) -> Result<QPoly> {
        if self.eat('-') {
            return Ok(-self.unary(n)?);
        }
        if self.eat('+') {
            return self.unary(n);
        }
        self.power(n)
    }

    fn power(&mut self, n: usize) -> Result<QPoly> {
        let base = self.atom(n)?;
        if self.eat('^') {
            self.skip_ws();
            let at = self.pos;
            let e = self.number()?;
            if !e.is_integer() || e.is_negative() {
                return Err(Error::Parse { pos: at, msg: "exponent must be a nonnegative integer".into() });
            }
            let e: u32 = e
                .to_integer()
                .try_into()
                .map_err(|_| Error::Parse { pos: at, msg: "exponent too large".into() })?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self, n: usize) -> Result<QPoly> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let p = self.expr(n)?;
                self.expect(')')?;
                Ok(p)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(QPoly::constant(n, self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.ident().expect("alphabetic start");
                let idx = if name == "x" || name == "t" {
                    if n != 1 {
                        return Err(Error::Parse {
                            pos: at,
                            msg: format!("`{name}` is only allowed for univariate input; use x0..x{}", n.saturating_sub(1)),
                        });
                    }
                    0
                } else if let Some(digits) = name.strip_prefix('x') {
                    digits.parse::<usize>().map_err(|_| Error::Parse {
                        pos: at,
                        msg: format!("unknown identifier `{name}`"),
                    })?
                } else {
                    return Err(Error::Parse { pos: at, msg: format!("unknown identifier `{name}`") });
                };
                if idx >= n {
                    return Err(Error::Parse {
                        pos: at,
                        msg: format!("variable x{idx} out of range for {n} variable(s)"),
                    });
                }
                Ok(QPoly::var(n, idx))
            }
            Some(c) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse a polynomial in `nvars` variables.
pub fn parse_poly(src: &str, nvars: usize) -> Result<QPoly> {
    let mut cur = Cursor::new(src);
    let p = cur.poly(nvars)?;
    cur.finish()?;
    Ok(p)
}

pub(crate) fn format_poly(p: &QPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (alpha, c)) in p.terms().rev().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mag = c.abs();
        let mono: Vec<String> = alpha
            .exps()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, &e)| if e == 1 { format!("x{j}") } else { format!("x{j}^{e}") })
            .collect();
        if mono.is_empty() {
            out.push_str(&fmt_rational(&mag));
        } else {
            if !mag.is_one() {
                out.push_str(&fmt_rational(&mag));
                out.push('*');
            }
            out.push_str(&mono.join("*"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    #[test]
    fn canonical_print() {
        let p = parse_poly("x1 * (3/2*x0^2) + 1 - x1", 2).unwrap();
        assert_eq!(p.to_string(), "3/2*x0^2*x1 - x1 + 1");
        assert_eq!(parse_poly("-(t-2)^2 + 8", 1).unwrap().to_string(), "-x0^2 + 4*x0 + 4");
        assert_eq!(parse_poly("0*x0", 1).unwrap().to_string(), "0");
        assert_eq!(parse_poly("x0/2", 1).unwrap().to_string(), "1/2*x0");
        assert_eq!(parse_poly(" 0.5 ", 1).unwrap().constant_term(), rat(1, 2));
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_poly("x0 + x3", 2) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_poly("x0/x0", 1), Err(Error::Parse { pos: 3, .. })));
        assert!(parse_poly("x0^-1", 1).is_err());
        assert!(parse_poly("(x0", 1).is_err());
        assert!(parse_poly("x0 x0", 1).is_err());
        assert!(parse_poly("x", 2).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = QPoly> {
        prop::collection::vec(((0u32..4, 0u32..4), -20i64..20, 1i64..7), 0..6).prop_map(|ts| {
            let mut p = QPoly::zero(2);
            for ((a, b), n, d) in ts {
                p = &p + &QPoly::monomial(vec![a, b].into(), rat(n, d));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(p in arb_poly()) {
            let s = p.to_string();
            prop_assert_eq!(parse_poly(&s, 2).unwrap(), p);
        }
    }
}
