//! Closed-form expressions in `(r, z, psi)`.
//!
//! One AST serves profiles `F(psi)`, `G(psi)`, generator components and
//! solution formulas. Evaluation is generic over [`Differentiable`], so the
//! same tree yields plain values or full second-order jets.

mod number;
mod parse;

pub use number::Number;
pub use parse::{parse, parse_with_vars, ParseError};

use crate::jet::Differentiable;
use crate::scalar::Scalar;
use crate::special::derivs;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    R,
    Z,
    Psi,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::R => "r",
            Var::Z => "z",
            Var::Psi => "psi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Si,
    Ci,
    J0,
    J1,
    Y0,
    Y1,
}

impl Func {
    pub const ALL: [Func; 14] = [
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Si,
        Func::Ci,
        Func::J0,
        Func::J1,
        Func::Y0,
        Func::Y1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Si => "si",
            Func::Ci => "ci",
            Func::J0 => "j0",
            Func::J1 => "j1",
            Func::Y0 => "y0",
            Func::Y1 => "y1",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        if s == "ln" {
            return Some(Func::Ln);
        }
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }

    /// `(f, f', f'')` at `x`, or a reason the argument is outside the domain.
    fn eval3<T: Scalar>(self, x: T) -> Result<(T, T, T), &'static str> {
        let one = T::one();
        Ok(match self {
            Func::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            Func::Ln => {
                if x <= T::zero() {
                    return Err("log of non-positive value");
                }
                (x.ln(), x.recip(), -(x * x).recip())
            }
            Func::Sqrt => {
                if x < T::zero() {
                    return Err("sqrt of negative value");
                }
                let s = x.sqrt();
                (s, T::lit(0.5) / s, -T::lit(0.25) / (s * x))
            }
            Func::Abs => {
                if x < T::zero() {
                    (-x, -one, T::zero())
                } else {
                    (x, one, T::zero())
                }
            }
            Func::Sin => {
                let (s, c) = x.sin_cos();
                (s, c, -s)
            }
            Func::Cos => {
                let (s, c) = x.sin_cos();
                (c, -s, -c)
            }
            Func::Sinh => (x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => (x.cosh(), x.sinh(), x.cosh()),
            Func::Si => derivs::si3(x),
            Func::Ci => derivs::ci3(x).map_err(|_| "ci of non-positive value")?,
            Func::J0 => derivs::j0_3(x),
            Func::J1 => derivs::j1_3(x),
            Func::Y0 => derivs::y0_3(x).map_err(|_| "y0 of non-positive value")?,
            Func::Y1 => derivs::y1_3(x).map_err(|_| "y1 of non-positive value")?,
        })
    }

    /// Symbolic derivative `f'(arg)`.
    fn derivative(self, arg: &Expr) -> Expr {
        let a = || arg.clone();
        match self {
            Func::Exp => Expr::call(Func::Exp, a()),
            Func::Ln => Expr::int(1) / a(),
            Func::Sqrt => Expr::ratio(1, 2) / Expr::call(Func::Sqrt, a()),
            Func::Abs => Expr::call(Func::Abs, a()) / a(),
            Func::Sin => Expr::call(Func::Cos, a()),
            Func::Cos => -Expr::call(Func::Sin, a()),
            Func::Sinh => Expr::call(Func::Cosh, a()),
            Func::Cosh => Expr::call(Func::Sinh, a()),
            Func::Si => Expr::call(Func::Sin, a()) / a(),
            Func::Ci => Expr::call(Func::Cos, a()) / a(),
            Func::J0 => -Expr::call(Func::J1, a()),
            Func::J1 => Expr::call(Func::J0, a()) - Expr::call(Func::J1, a()) / a(),
            Func::Y0 => -Expr::call(Func::Y1, a()),
            Func::Y1 => Expr::call(Func::Y0, a()) - Expr::call(Func::Y1, a()) / a(),
        }
    }
}

/// Expression tree. Build through the smart constructors, which fold
/// constants and drop neutral elements.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Number),
    Var(Var),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Evaluation failure at a specific node.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error at node {node} `{subexpr}`: {reason} (value {value})")]
pub struct DomainError {
    /// Pre-order index of the failing node.
    pub node: usize,
    pub subexpr: String,
    pub reason: String,
    pub value: f64,
}

impl Expr {
    pub fn num(n: Number) -> Expr {
        Expr::Num(n)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Num(Number::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Num(Number::ratio(n, d))
    }

    pub fn real(x: f64) -> Expr {
        Expr::Num(Number::real(x))
    }

    pub fn r() -> Expr {
        Expr::Var(Var::R)
    }

    pub fn z() -> Expr {
        Expr::Var(Var::Z)
    }

    pub fn psi() -> Expr {
        Expr::Var(Var::Psi)
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Expr::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(Number::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(Number::is_one)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_number(), b.as_number()) {
            (Some(x), Some(y)) => Expr::Num(x.checked_add(y)),
            (Some(x), _) if x.is_zero() => b,
            (_, Some(y)) if y.is_zero() => a,
            (_, Some(y)) if y.is_negative() => Expr::Sub(Box::new(a), Box::new(Expr::Num(y.neg()))),
            _ => match b {
                Expr::Neg(inner) => Expr::Sub(Box::new(a), inner),
                b => Expr::Add(Box::new(a), Box::new(b)),
            },
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_number(), b.as_number()) {
            (Some(x), Some(y)) => Expr::Num(x.checked_sub(y)),
            (Some(x), _) if x.is_zero() => Expr::neg(b),
            (_, Some(y)) if y.is_zero() => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_number(), b.as_number()) {
            (Some(x), Some(y)) => Expr::Num(x.checked_mul(y)),
            (Some(x), _) if x.is_zero() => Expr::int(0),
            (_, Some(y)) if y.is_zero() => Expr::int(0),
            (Some(x), _) if x.is_one() => b,
            (_, Some(y)) if y.is_one() => a,
            (Some(x), _) if x == Number::int(-1) => Expr::neg(b),
            (_, Some(y)) if y == Number::int(-1) => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_number(), b.as_number()) {
            (Some(x), Some(y)) => match x.checked_div(y) {
                Some(q) => Expr::Num(q),
                None => Expr::Div(Box::new(a), Box::new(b)),
            },
            (Some(x), _) if x.is_zero() => Expr::int(0),
            (_, Some(y)) if y.is_one() => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(n) => Expr::Num(n.neg()),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        if let Some(p) = exp.as_number() {
            if p.is_zero() {
                return Expr::int(1);
            }
            if p.is_one() {
                return base;
            }
            if let (Some(b), Some(n)) = (base.as_number(), p.as_integer()) {
                if let Some(v) = b.pow_int(n) {
                    return Expr::Num(v);
                }
            }
        }
        Expr::Pow(Box::new(base), Box::new(exp))
    }

    pub fn powi(self, n: i64) -> Expr {
        Expr::pow(self, Expr::int(n))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// True if `v` occurs anywhere in the tree.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
        }
    }

    pub fn is_constant(&self) -> bool {
        !(self.depends_on(Var::R) || self.depends_on(Var::Z) || self.depends_on(Var::Psi))
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                1 + a.size() + b.size()
            }
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
        }
    }

    /// Replaces every occurrence of `v` with `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        let s = |e: &Expr| e.substitute(v, with);
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(w) if *w == v => with.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => Expr::add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::div(s(a), s(b)),
            Expr::Neg(a) => Expr::neg(s(a)),
            Expr::Pow(a, b) => Expr::pow(s(a), s(b)),
            Expr::Call(f, a) => Expr::call(*f, s(a)),
        }
    }

    /// Simultaneous substitution of all three variables.
    pub fn substitute_all(&self, r: &Expr, z: &Expr, psi: &Expr) -> Expr {
        let s = |e: &Expr| e.substitute_all(r, z, psi);
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(Var::R) => r.clone(),
            Expr::Var(Var::Z) => z.clone(),
            Expr::Var(Var::Psi) => psi.clone(),
            Expr::Add(a, b) => Expr::add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::div(s(a), s(b)),
            Expr::Neg(a) => Expr::neg(s(a)),
            Expr::Pow(a, b) => Expr::pow(s(a), s(b)),
            Expr::Call(f, a) => Expr::call(*f, s(a)),
        }
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Expr::int(0);
        }
        match self {
            Expr::Num(_) => Expr::int(0),
            Expr::Var(w) => Expr::int(i64::from(*w == v)),
            Expr::Add(a, b) => a.diff(v) + b.diff(v),
            Expr::Sub(a, b) => a.diff(v) - b.diff(v),
            Expr::Mul(a, b) => a.diff(v) * (**b).clone() + (**a).clone() * b.diff(v),
            Expr::Div(a, b) => {
                if !b.depends_on(v) {
                    a.diff(v) / (**b).clone()
                } else {
                    (a.diff(v) * (**b).clone() - (**a).clone() * b.diff(v)) / (**b).clone().powi(2)
                }
            }
            Expr::Neg(a) => -a.diff(v),
            Expr::Pow(b, e) => {
                if let Some(p) = e.as_number() {
                    Expr::Num(p) * Expr::pow((**b).clone(), Expr::Num(p.checked_sub(Number::int(1)))) * b.diff(v)
                } else {
                    let be = self.clone();
                    let lnb = Expr::call(Func::Ln, (**b).clone());
                    be * (e.diff(v) * lnb + (**e).clone() * b.diff(v) / (**b).clone())
                }
            }
            Expr::Call(f, a) => f.derivative(a) * a.diff(v),
        }
    }

    /// Evaluates at `(r, z, psi)` over plain scalars or jets.
    pub fn eval_with<T: Scalar, D: Differentiable<T>>(&self, r: D, z: D, psi: D) -> Result<D, DomainError> {
        let mut idx = 0usize;
        self.eval_node(&mut idx, &(r, z, psi))
    }

    /// Plain value at `(r, z, psi)`.
    pub fn eval<T: Scalar>(&self, r: T, z: T, psi: T) -> Result<T, DomainError> {
        self.eval_with::<T, T>(r, z, psi)
    }

    /// Plain value of an expression in `psi` only.
    pub fn eval_psi(&self, psi: f64) -> Result<f64, DomainError> {
        self.eval(0.0, 0.0, psi)
    }

    fn fail<T: Scalar>(&self, node: usize, reason: &str, value: T) -> DomainError {
        DomainError {
            node,
            subexpr: self.to_string(),
            reason: reason.to_string(),
            value: value.to_f64().unwrap_or(f64::NAN),
        }
    }

    fn eval_node<T: Scalar, D: Differentiable<T>>(&self, idx: &mut usize, env: &(D, D, D)) -> Result<D, DomainError> {
        let me = *idx;
        *idx += 1;
        match self {
            Expr::Num(n) => Ok(D::constant(T::lit(n.to_f64()))),
            Expr::Var(Var::R) => Ok(env.0),
            Expr::Var(Var::Z) => Ok(env.1),
            Expr::Var(Var::Psi) => Ok(env.2),
            Expr::Add(a, b) => Ok(a.eval_node(idx, env)? + b.eval_node(idx, env)?),
            Expr::Sub(a, b) => Ok(a.eval_node(idx, env)? - b.eval_node(idx, env)?),
            Expr::Mul(a, b) => Ok(a.eval_node(idx, env)? * b.eval_node(idx, env)?),
            Expr::Div(a, b) => {
                let x = a.eval_node(idx, env)?;
                let y = b.eval_node(idx, env)?;
                if y.value() == T::zero() {
                    return Err(self.fail(me, "division by zero", y.value()));
                }
                Ok(x / y)
            }
            Expr::Neg(a) => Ok(-a.eval_node(idx, env)?),
            Expr::Pow(b, e) => {
                let x = b.eval_node(idx, env)?;
                let v = x.value();
                if let Some(p) = e.as_number() {
                    *idx += 1;
                    if let Some(n) = p.as_integer() {
                        return match n {
                            0 => Ok(D::constant(T::one())),
                            1 => Ok(x),
                            2 => Ok(x.chain(v * v, v + v, T::lit(2.0))),
                            _ => {
                                if n < 0 && v == T::zero() {
                                    return Err(self.fail(me, "negative power of zero", v));
                                }
                                let nf = T::lit(n as f64);
                                let n32 = n as i32;
                                Ok(x.chain(v.powi(n32), nf * v.powi(n32 - 1), nf * (nf - T::one()) * v.powi(n32 - 2)))
                            }
                        };
                    }
                    let pf = T::lit(p.to_f64());
                    if v < T::zero() {
                        return Err(self.fail(me, "fractional power of negative value", v));
                    }
                    if v == T::zero() && pf < T::zero() {
                        return Err(self.fail(me, "negative power of zero", v));
                    }
                    let f = v.powf(pf);
                    let (df, d2f) = if v == T::zero() {
                        let d1 = if pf > T::one() { T::zero() } else if pf == T::one() { T::one() } else { T::infinity() };
                        let two = T::lit(2.0);
                        let d2 = if pf > two { T::zero() } else if pf == two { two } else { T::infinity() };
                        (d1, d2)
                    } else {
                        (pf * v.powf(pf - T::one()), pf * (pf - T::one()) * v.powf(pf - T::lit(2.0)))
                    };
                    return Ok(x.chain(f, df, d2f));
                }
                let y = e.eval_node(idx, env)?;
                if v <= T::zero() {
                    return Err(self.fail(me, "non-constant power of non-positive value", v));
                }
                let lnx = x.chain(v.ln(), v.recip(), -(v * v).recip());
                let t = y * lnx;
                let ev = t.value().exp();
                Ok(t.chain(ev, ev, ev))
            }
            Expr::Call(f, a) => {
                let x = a.eval_node(idx, env)?;
                let v = x.value();
                match f.eval3(v) {
                    Ok((y, dy, d2y)) => Ok(x.chain(y, dy, d2y)),
                    Err(reason) => Err(self.fail(me, reason, v)),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(n) => {
                if matches!(n, Number::Rational(q) if !q.is_integer()) {
                    2
                } else if n.is_negative() {
                    3
                } else {
                    5
                }
            }
            Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

/// Writes `e`, parenthesized when its precedence is below `min`.
fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" + ")?;
                write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" - ")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("*")?;
                write_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("/")?;
                write_child(f, b, 3)
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 4)
            }
            Expr::Pow(a, b) => {
                write_child(f, a, 5)?;
                f.write_str("^")?;
                write_child(f, b, 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::add(self, o)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::sub(self, o)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::mul(self, o)
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        Expr::div(self, o)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        Expr::real(x)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

/// Convenience for literals in mixed expressions.
pub fn c(x: f64) -> Expr {
    Expr::real(x)
}
