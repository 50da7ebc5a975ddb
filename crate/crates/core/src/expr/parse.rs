//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! number := digits ('.' digits)? (('e' | 'E') ('+' | '-')? digits)?
//! ```
//!
//! `^` is right associative and binds tighter than unary minus on its left,
//! so `-psi^2` is `-(psi^2)` and `psi^-7` is accepted. Decimal literals are
//! kept as exact rationals when they fit in 64 bits. Identifiers: the
//! variables `psi`, `r`, `z` (subject to the caller's allow-list), the
//! constant `pi` and the function names in [`Func`].

use super::{Expr, Func, Number, Var};
use num_rational::Rational64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::UnknownIdentifier { pos, .. } => *pos,
        }
    }
}

/// Parses with all three variables allowed.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with_vars(text, &[Var::R, Var::Z, Var::Psi])
}

/// Parses, rejecting any variable not in `vars`.
pub fn parse_with_vars(text: &str, vars: &[Var]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [Var],
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

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

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs + self.term()?;
            } else if self.eat(b'-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs * self.unary()?;
            } else if self.eat(b'/') {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(-self.unary()?)
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            Ok(Expr::pow(base, exp))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.syntax(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if let Some(f) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.syntax(&format!("expected `(` after `{name}`")));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax("expected `)`"));
            }
            return Ok(Expr::call(f, arg));
        }
        let var = match name {
            "psi" => Some(Var::Psi),
            "r" => Some(Var::R),
            "z" => Some(Var::Z),
            "pi" => return Ok(Expr::real(std::f64::consts::PI)),
            _ => None,
        };
        match var {
            Some(v) if self.vars.contains(&v) => Ok(Expr::Var(v)),
            _ => Err(ParseError::UnknownIdentifier {
                name: name.to_string(),
                pos: start,
            }),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let int_len = digits(self);
        let mut frac_len = 0;
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            frac_len = digits(self);
        }
        if int_len + frac_len == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        let mantissa_end = self.pos;
        let mut exponent: i64 = 0;
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            let neg = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let es = self.pos;
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax("malformed exponent"));
            }
            let e: i64 = std::str::from_utf8(&self.src[es..self.pos])
                .unwrap_or_default()
                .parse()
                .map_err(|_| self.syntax("exponent out of range"))?;
            exponent = if neg { -e } else { e };
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let mantissa: String = std::str::from_utf8(&self.src[start..mantissa_end])
            .unwrap_or_default()
            .chars()
            .filter(|c| *c != '.')
            .collect();
        let exact = exact_decimal(&mantissa, exponent - frac_len as i64);
        Ok(Expr::num(match exact {
            Some(q) => Number::Rational(q),
            None => Number::Real(text.parse().map_err(|_| self.syntax("malformed number"))?),
        }))
    }
}

/// `digits × 10^shift` as an exact rational if it fits.
fn exact_decimal(digits: &str, shift: i64) -> Option<Rational64> {
    let m: i64 = digits.parse().ok()?;
    let ten = |k: i64| -> Option<i64> { 10i64.checked_pow(u32::try_from(k).ok()?) };
    if shift >= 0 {
        Some(Rational64::from_integer(m.checked_mul(ten(shift)?)?))
    } else {
        Some(Rational64::new(m, ten(-shift)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.5").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse("1.5e2").unwrap(), Expr::int(150));
        assert_eq!(parse("25e-2").unwrap(), Expr::ratio(1, 4));
        assert!(matches!(parse("1e-300").unwrap(), Expr::Num(Number::Real(_))));
    }

    #[test]
    fn precedence() {
        let e = parse("-psi^2").unwrap();
        assert_eq!(e.eval_psi(3.0).unwrap(), -9.0);
        let e = parse("2^3^2").unwrap();
        assert_eq!(e, Expr::int(512));
        let e = parse("2*(psi+1)^-7").unwrap();
        assert_eq!(e.eval_psi(0.0).unwrap(), 2.0);
        let e = parse("1 - 2 - 3").unwrap();
        assert_eq!(e, Expr::int(-4));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("psi + * 2").unwrap_err();
        assert_eq!(err.position(), 6);
        let err = parse_with_vars("psi + r", &[Var::Psi]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "r".into(),
                pos: 6
            }
        );
        assert!(matches!(parse("(psi"), Err(ParseError::Syntax { pos: 4, .. })));
        assert!(matches!(parse("exp psi"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("foo(psi)"), Err(ParseError::UnknownIdentifier { .. })));
    }
}
