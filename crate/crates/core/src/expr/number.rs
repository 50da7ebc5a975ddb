use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// A literal constant: exact rational while arithmetic stays representable,
/// floating point otherwise.
#[derive(Debug, Clone, Copy)]
pub enum Number {
    Rational(Rational64),
    Real(f64),
}

impl Number {
    pub fn int(n: i64) -> Self {
        Number::Rational(Rational64::from_integer(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Number::Rational(Rational64::new(n, d))
    }

    /// Wraps an `f64`, keeping it exact when it is an integer of moderate size.
    pub fn real(x: f64) -> Self {
        if x.fract() == 0.0 && x.abs() < 1e15 {
            Number::int(x as i64)
        } else {
            Number::Real(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Number::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
            Number::Real(x) => x,
        }
    }

    pub fn as_rational(self) -> Option<Rational64> {
        match self {
            Number::Rational(q) => Some(q),
            Number::Real(_) => None,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Number::Rational(q) => q.is_zero(),
            Number::Real(x) => x == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        self == Number::int(1)
    }

    /// Integer value if exactly integral.
    pub fn as_integer(self) -> Option<i64> {
        match self {
            Number::Rational(q) if q.is_integer() => Some(*q.numer()),
            Number::Real(x) if x.fract() == 0.0 && x.abs() < 1e15 => Some(x as i64),
            _ => None,
        }
    }

    pub fn checked_add(self, o: Self) -> Self {
        match (self, o) {
            (Number::Rational(a), Number::Rational(b)) => a
                .checked_add(&b)
                .map(Number::Rational)
                .unwrap_or(Number::Real(self.to_f64() + o.to_f64())),
            _ => Number::Real(self.to_f64() + o.to_f64()),
        }
    }

    pub fn checked_sub(self, o: Self) -> Self {
        self.checked_add(o.neg())
    }

    pub fn checked_mul(self, o: Self) -> Self {
        match (self, o) {
            (Number::Rational(a), Number::Rational(b)) => a
                .checked_mul(&b)
                .map(Number::Rational)
                .unwrap_or(Number::Real(self.to_f64() * o.to_f64())),
            _ => Number::Real(self.to_f64() * o.to_f64()),
        }
    }

    /// `None` on division by zero.
    pub fn checked_div(self, o: Self) -> Option<Self> {
        if o.is_zero() {
            return None;
        }
        Some(match (self, o) {
            (Number::Rational(a), Number::Rational(b)) => a
                .checked_div(&b)
                .map(Number::Rational)
                .unwrap_or(Number::Real(self.to_f64() / o.to_f64())),
            _ => Number::Real(self.to_f64() / o.to_f64()),
        })
    }

    pub fn neg(self) -> Self {
        match self {
            Number::Rational(q) => Number::Rational(-q),
            Number::Real(x) => Number::Real(-x),
        }
    }

    /// Exact integer power when possible.
    pub fn pow_int(self, n: i64) -> Option<Self> {
        if n.unsigned_abs() > 64 {
            return None;
        }
        let q = self.as_rational()?;
        if q.is_zero() && n < 0 {
            return None;
        }
        let mut acc = Rational64::from_integer(1);
        for _ in 0..n.unsigned_abs() {
            acc = acc.checked_mul(&q)?;
        }
        if n < 0 {
            acc = Rational64::from_integer(1).checked_div(&acc)?;
        }
        Some(Number::Rational(acc))
    }

    pub fn is_negative(self) -> bool {
        self.to_f64() < 0.0
    }
}

impl PartialEq for Number {
    /// Exact comparison when both sides are rational, value comparison otherwise.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.partial_cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl From<i64> for Number {
    fn from(n: i64) -> Self {
        Number::int(n)
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::real(x)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Number::Rational(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Number::Real(x) => write!(f, "{x:e}"),
        }
    }
}
