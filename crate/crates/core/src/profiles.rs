//! Flux functions `F(psi)`, `G(psi)`: parsing, form recognition and
//! symmetry classification of the pair.

use crate::expr::{parse_with_vars, DomainError, Expr, Func, Number, ParseError, Var};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    F,
    G,
}

/// Recognized algebraic form.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileForm {
    Zero,
    /// `k0 + k1*psi`
    Affine { k0: Number, k1: Number },
    /// `a*(psi + c)^p`
    PowerShifted { a: Number, c: Number, p: Number },
    /// `a*exp(k*psi)`
    Exponential { a: Number, k: Number },
    Opaque,
}

/// A parsed profile: its recognized form, the canonical expression and the
/// expression as written.
#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub role: Role,
    pub form: ProfileForm,
    pub expr: Expr,
    pub raw: Expr,
}

impl PartialEq for ProfileSpec {
    fn eq(&self, o: &Self) -> bool {
        self.role == o.role && self.form == o.form && self.expr == o.expr
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("sigma = {0} is degenerate (must differ from 0 and 1)")]
    DegenerateSigma(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no real sigma: a = {a} exceeds 3 b^2 = {}", 3.0 * b * b)]
    NoRealSigma { a: f64, b: f64 },
}

/// Best exact representation of `x`: a rational with denominator at most
/// 10^4 when `x` equals one to 1e-14 relative, otherwise the float itself.
pub fn approx_number(x: f64) -> Number {
    if !x.is_finite() {
        return Number::Real(x);
    }
    for d in 1..=10_000i64 {
        let n = (x * d as f64).round();
        if n.abs() < 1e15 && (n / d as f64 - x).abs() <= 1e-14 * x.abs().max(1e-300) {
            return Number::Rational(Rational64::new(n as i64, d));
        }
    }
    Number::Real(x)
}

fn linear(e: &Expr) -> Option<(Number, Number)> {
    match e {
        Expr::Num(n) => Some((*n, Number::int(0))),
        Expr::Var(Var::Psi) => Some((Number::int(0), Number::int(1))),
        Expr::Var(_) => None,
        Expr::Add(a, b) => {
            let (a0, a1) = linear(a)?;
            let (b0, b1) = linear(b)?;
            Some((a0.checked_add(b0), a1.checked_add(b1)))
        }
        Expr::Sub(a, b) => {
            let (a0, a1) = linear(a)?;
            let (b0, b1) = linear(b)?;
            Some((a0.checked_sub(b0), a1.checked_sub(b1)))
        }
        Expr::Neg(a) => {
            let (a0, a1) = linear(a)?;
            Some((a0.neg(), a1.neg()))
        }
        Expr::Mul(a, b) => {
            let (a0, a1) = linear(a)?;
            let (b0, b1) = linear(b)?;
            if a1.is_zero() {
                Some((a0.checked_mul(b0), a0.checked_mul(b1)))
            } else if b1.is_zero() {
                Some((a0.checked_mul(b0), a1.checked_mul(b0)))
            } else {
                None
            }
        }
        Expr::Div(a, b) => {
            let (a0, a1) = linear(a)?;
            let (b0, b1) = linear(b)?;
            if !b1.is_zero() {
                return None;
            }
            Some((a0.checked_div(b0)?, a1.checked_div(b0)?))
        }
        _ => None,
    }
}

/// Non-affine single-term forms.
#[derive(Debug, Clone, Copy)]
enum Term {
    Power { a: Number, c: Number, p: Number },
    Exp { a: Number, k: Number },
}

fn real_pow(base: Number, p: Number) -> Option<Number> {
    if base.is_one() {
        return Some(Number::int(1));
    }
    if let Some(n) = p.as_integer() {
        return base.pow_int(n).or_else(|| Some(Number::Real(base.to_f64().powi(n as i32))));
    }
    if base.to_f64() > 0.0 {
        return Some(Number::Real(base.to_f64().powf(p.to_f64())));
    }
    None
}

fn term(e: &Expr) -> Option<Term> {
    let scale = |t: Term, s: Number| match t {
        Term::Power { a, c, p } => Term::Power { a: a.checked_mul(s), c, p },
        Term::Exp { a, k } => Term::Exp { a: a.checked_mul(s), k },
    };
    match e {
        Expr::Pow(base, ex) => {
            let p = ex.as_number()?;
            if let Some((k0, k1)) = linear(base) {
                if k1.is_zero() {
                    return None;
                }
                let a = real_pow(k1, p)?;
                return Some(Term::Power { a, c: k0.checked_div(k1)?, p });
            }
            match term(base)? {
                Term::Power { a, c, p: q } => Some(Term::Power {
                    a: real_pow(a, p)?,
                    c,
                    p: q.checked_mul(p),
                }),
                Term::Exp { a, k } => Some(Term::Exp {
                    a: real_pow(a, p)?,
                    k: k.checked_mul(p),
                }),
            }
        }
        Expr::Call(Func::Exp, arg) => {
            let (k0, k1) = linear(arg)?;
            if k1.is_zero() {
                return None;
            }
            let a = if k0.is_zero() { Number::int(1) } else { Number::Real(k0.to_f64().exp()) };
            Some(Term::Exp { a, k: k1 })
        }
        Expr::Call(Func::Sqrt, arg) => term(&Expr::Pow(arg.clone(), Box::new(Expr::ratio(1, 2)))),
        Expr::Neg(x) => Some(scale(term(x)?, Number::int(-1))),
        Expr::Mul(x, y) => {
            if let Some(s) = x.as_number() {
                return Some(scale(term(y)?, s));
            }
            if let Some(s) = y.as_number() {
                return Some(scale(term(x)?, s));
            }
            let lhs = term(x).or_else(|| linear(x).and_then(linear_as_power))?;
            let rhs = term(y).or_else(|| linear(y).and_then(linear_as_power))?;
            combine(lhs, rhs, false)
        }
        Expr::Div(x, y) => {
            if let Some(s) = y.as_number() {
                return Some(scale(term(x)?, Number::int(1).checked_div(s)?));
            }
            let den = term(y).or_else(|| linear(y).and_then(linear_as_power))?;
            if let Some(s) = x.as_number() {
                let inv = match den {
                    Term::Power { a, c, p } => Term::Power {
                        a: Number::int(1).checked_div(a)?,
                        c,
                        p: p.neg(),
                    },
                    Term::Exp { a, k } => Term::Exp {
                        a: Number::int(1).checked_div(a)?,
                        k: k.neg(),
                    },
                };
                return Some(scale(inv, s));
            }
            let num = term(x).or_else(|| linear(x).and_then(linear_as_power))?;
            combine(num, den, true)
        }
        _ => None,
    }
}

fn linear_as_power((k0, k1): (Number, Number)) -> Option<Term> {
    if k1.is_zero() {
        return None;
    }
    Some(Term::Power {
        a: k1,
        c: k0.checked_div(k1)?,
        p: Number::int(1),
    })
}

fn combine(x: Term, y: Term, divide: bool) -> Option<Term> {
    match (x, y) {
        (Term::Power { a, c, p }, Term::Power { a: b, c: d, p: q }) if c == d => Some(Term::Power {
            a: if divide { a.checked_div(b)? } else { a.checked_mul(b) },
            c,
            p: if divide { p.checked_sub(q) } else { p.checked_add(q) },
        }),
        (Term::Exp { a, k }, Term::Exp { a: b, k: l }) => Some(Term::Exp {
            a: if divide { a.checked_div(b)? } else { a.checked_mul(b) },
            k: if divide { k.checked_sub(l) } else { k.checked_add(l) },
        }),
        _ => None,
    }
}

fn recognize(e: &Expr) -> ProfileForm {
    if let Some((k0, k1)) = linear(e) {
        return if k0.is_zero() && k1.is_zero() {
            ProfileForm::Zero
        } else {
            ProfileForm::Affine { k0, k1 }
        };
    }
    match term(e) {
        Some(Term::Power { a, .. }) | Some(Term::Exp { a, .. }) if a.is_zero() => ProfileForm::Zero,
        Some(Term::Power { a, p, .. }) if p.is_zero() => ProfileForm::Affine {
            k0: a,
            k1: Number::int(0),
        },
        Some(Term::Power { a, c, p }) if p.is_one() => ProfileForm::Affine {
            k0: a.checked_mul(c),
            k1: a,
        },
        Some(Term::Power { a, c, p }) => ProfileForm::PowerShifted { a, c, p },
        Some(Term::Exp { a, k }) if k.is_zero() => ProfileForm::Affine {
            k0: a,
            k1: Number::int(0),
        },
        Some(Term::Exp { a, k }) => ProfileForm::Exponential { a, k },
        None => ProfileForm::Opaque,
    }
}

impl ProfileForm {
    fn to_expr(&self) -> Option<Expr> {
        Some(match *self {
            ProfileForm::Zero => Expr::int(0),
            ProfileForm::Affine { k0, k1 } => Expr::Num(k0) + Expr::Num(k1) * Expr::psi(),
            ProfileForm::PowerShifted { a, c, p } => Expr::Num(a) * Expr::pow(Expr::psi() + Expr::Num(c), Expr::Num(p)),
            ProfileForm::Exponential { a, k } => Expr::Num(a) * (Expr::Num(k) * Expr::psi()).exp(),
            ProfileForm::Opaque => return None,
        })
    }
}

impl ProfileSpec {
    /// Builds a spec from an expression in `psi`.
    pub fn from_expr(role: Role, raw: Expr) -> Result<Self, ProfileError> {
        if raw.depends_on(Var::R) || raw.depends_on(Var::Z) {
            return Err(ProfileError::InvalidParameter("profile may depend on psi only".into()));
        }
        let form = recognize(&raw);
        let expr = form.to_expr().unwrap_or_else(|| raw.clone());
        Ok(Self { role, form, expr, raw })
    }

    pub fn from_form(role: Role, form: ProfileForm) -> Self {
        let expr = form.to_expr().expect("structured form");
        Self {
            role,
            form: recognize(&expr),
            raw: expr.clone(),
            expr,
        }
    }

    pub fn zero(role: Role) -> Self {
        Self::from_form(role, ProfileForm::Zero)
    }

    pub fn constant(role: Role, k0: f64) -> Self {
        Self::from_form(
            role,
            ProfileForm::Affine {
                k0: approx_number(k0),
                k1: Number::int(0),
            },
        )
    }

    /// `a * psi^p`.
    pub fn power(role: Role, a: f64, p: Number) -> Self {
        Self::from_form(
            role,
            ProfileForm::PowerShifted {
                a: approx_number(a),
                c: Number::int(0),
                p,
            },
        )
    }

    pub fn eval(&self, psi: f64) -> Result<f64, DomainError> {
        self.expr.eval_psi(psi)
    }

    pub fn is_zero(&self) -> bool {
        self.form == ProfileForm::Zero
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.form, ProfileForm::Zero | ProfileForm::Affine { .. })
    }

    /// `(k0, k1)` for affine forms.
    pub fn affine_coeffs(&self) -> Option<(Number, Number)> {
        match self.form {
            ProfileForm::Zero => Some((Number::int(0), Number::int(0))),
            ProfileForm::Affine { k0, k1 } => Some((k0, k1)),
            _ => None,
        }
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

/// Parses a profile; the only identifier allowed is `psi`.
pub fn parse_profile(text: &str, role: Role) -> Result<ProfileSpec, ProfileError> {
    let raw = parse_with_vars(text, &[Var::Psi])?;
    ProfileSpec::from_expr(role, raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tag {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "a'")]
    APrime,
    #[serde(rename = "a''")]
    ADoublePrime,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c'")]
    CPrime,
    #[serde(rename = "c''")]
    CDoublePrime,
    #[serde(rename = "c'''")]
    CTriplePrime,
    #[serde(rename = "c''''")]
    CQuadruplePrime,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "conditional-kappa")]
    ConditionalKappa,
    #[serde(rename = "conditional-rotation")]
    ConditionalRotation,
    #[serde(rename = "weak-sigma")]
    WeakSigma,
    #[serde(rename = "none")]
    None,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::A => "a",
            Tag::APrime => "a'",
            Tag::ADoublePrime => "a''",
            Tag::B => "b",
            Tag::CPrime => "c'",
            Tag::CDoublePrime => "c''",
            Tag::CTriplePrime => "c'''",
            Tag::CQuadruplePrime => "c''''",
            Tag::D => "d",
            Tag::ConditionalKappa => "conditional-kappa",
            Tag::ConditionalRotation => "conditional-rotation",
            Tag::WeakSigma => "weak-sigma",
            Tag::None => "none",
        }
    }

    pub fn is_power_family(self) -> bool {
        matches!(self, Tag::A | Tag::APrime | Tag::ADoublePrime)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters extracted by classification; absent entries do not apply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ClassParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub amp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    /// Shift `psi -> psi + shift` applied before reading linear subcases.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryClass {
    pub tag: Tag,
    #[serde(flatten)]
    pub params: ClassParams,
}

impl SymmetryClass {
    pub fn new(tag: Tag, params: ClassParams) -> Self {
        Self { tag, params }
    }

    pub fn none() -> Self {
        Self::new(Tag::None, ClassParams::default())
    }
}

fn num_close(x: Number, y: Number) -> bool {
    match (x, y) {
        (Number::Rational(_), Number::Rational(_)) => x == y,
        _ => {
            let (a, b) = (x.to_f64(), y.to_f64());
            (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
        }
    }
}

/// Power view of a profile: `(amplitude, shift or None if any shift fits, exponent)`.
fn as_power(s: &ProfileSpec) -> Option<(Number, Option<Number>, Option<Number>)> {
    match s.form {
        ProfileForm::Zero => Some((Number::int(0), None, None)),
        ProfileForm::Affine { k0, k1 } if k1.is_zero() => Some((k0, None, Some(Number::int(0)))),
        ProfileForm::PowerShifted { a, c, p } => Some((a, Some(c), Some(p))),
        _ => None,
    }
}

/// `q` implied by an exponent `p = 1 + m/q`.
fn q_from(p: Number, m: i64) -> Option<Number> {
    Number::int(m).checked_div(p.checked_sub(Number::int(1)))
}

fn power_family(f: &ProfileSpec, g: &ProfileSpec) -> Option<SymmetryClass> {
    if f.is_affine() && g.is_affine() {
        return None;
    }
    let (a, cf, pf) = as_power(f)?;
    let (b, cg, pg) = as_power(g)?;
    let c = match (cf, cg) {
        (Some(x), Some(y)) if num_close(x, y) => x,
        (Some(_), Some(_)) => return None,
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => Number::int(0),
    };
    let qf = pf.map(|p| q_from(p, 2));
    let qg = pg.map(|p| q_from(p, 1));
    let q = match (qf, qg) {
        (Some(Some(x)), Some(Some(y))) if num_close(x, y) => x,
        (Some(Some(x)), None) | (None, Some(Some(x))) => x,
        _ => return None,
    };
    if q.is_zero() {
        return None;
    }
    let tag = if q == Number::ratio(-1, 4) {
        Tag::ADoublePrime
    } else if c.is_zero() {
        Tag::A
    } else {
        Tag::APrime
    };
    Some(SymmetryClass::new(
        tag,
        ClassParams {
            q: Some(q.to_f64()),
            a: Some(a.to_f64()),
            b: Some(b.to_f64()),
            c: Some(c.to_f64()),
            ..Default::default()
        },
    ))
}

fn exponential_family(f: &ProfileSpec, g: &ProfileSpec) -> Option<SymmetryClass> {
    let view = |s: &ProfileSpec| match s.form {
        ProfileForm::Zero => Some((Number::int(0), None)),
        ProfileForm::Exponential { a, k } => Some((a, Some(k))),
        _ => None,
    };
    let (a, kf) = view(f)?;
    let (b, kg) = view(g)?;
    let c = match (kf, kg) {
        (Some(x), Some(y)) => {
            let half = x.checked_div(Number::int(2))?;
            if !num_close(half, y) {
                return None;
            }
            y
        }
        (Some(x), None) => x.checked_div(Number::int(2))?,
        (None, Some(y)) => y,
        (None, None) => return None,
    };
    Some(SymmetryClass::new(
        Tag::B,
        ClassParams {
            a: Some(a.to_f64()),
            b: Some(b.to_f64()),
            c: Some(c.to_f64()),
            ..Default::default()
        },
    ))
}

fn linear_family(f: &ProfileSpec, g: &ProfileSpec) -> Option<SymmetryClass> {
    let (a0, a1) = f.affine_coeffs()?;
    let (b0, b1) = g.affine_coeffs()?;
    let params = |a0: Number, b0: Number, shift: Number| ClassParams {
        a0: Some(a0.to_f64()),
        a1: Some(a1.to_f64()),
        b0: Some(b0.to_f64()),
        b1: Some(b1.to_f64()),
        shift: Some(shift.to_f64()),
        ..Default::default()
    };
    let zero = Number::int(0);
    if a1.is_zero() && b1.is_zero() {
        return Some(SymmetryClass::new(Tag::D, params(a0, b0, zero)));
    }
    // psi -> psi + s turns (a0, b0) into (a0 + a1 s, b0 + b1 s).
    let shifted = |s: Number| (a0.checked_add(a1.checked_mul(s)), b0.checked_add(b1.checked_mul(s)));
    if a0.is_zero() && b0.is_zero() {
        return Some(SymmetryClass::new(Tag::CPrime, params(a0, b0, zero)));
    }
    if a1.is_zero() {
        let s = b0.neg().checked_div(b1)?;
        let (x, y) = shifted(s);
        return Some(SymmetryClass::new(Tag::CDoublePrime, params(x, y, s)));
    }
    if b1.is_zero() {
        let s = a0.neg().checked_div(a1)?;
        let (x, y) = shifted(s);
        return Some(SymmetryClass::new(Tag::CTriplePrime, params(x, y, s)));
    }
    let s = a0.neg().checked_div(a1)?;
    let (x, y) = shifted(s);
    if y.is_zero() || num_close(y, zero) {
        return Some(SymmetryClass::new(Tag::CPrime, params(zero, zero, s)));
    }
    Some(SymmetryClass::new(Tag::CQuadruplePrime, params(x, y, s)))
}

/// `G = kappa^2 F` at 20 sampled `psi`.
fn proportional(f: &ProfileSpec, g: &ProfileSpec) -> Option<f64> {
    if f.is_zero() || g.is_zero() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b61_7070_61);
    let mut ratio: Option<f64> = None;
    for _ in 0..20 {
        let psi: f64 = rng.gen_range(0.3..3.0);
        let (fv, gv) = (f.eval(psi).ok()?, g.eval(psi).ok()?);
        if fv == 0.0 {
            return None;
        }
        let rho = gv / fv;
        match ratio {
            None => ratio = Some(rho),
            Some(r0) if (rho - r0).abs() <= 1e-12 * r0.abs().max(rho.abs()) => {}
            Some(_) => return None,
        }
    }
    ratio.filter(|r| *r > 0.0)
}

/// Weak-pair amplitude and sigma for a power pair without shift.
pub fn weak_sigma_params(q: f64, a: f64, b: f64) -> Option<(Option<f64>, Option<f64>)> {
    let two_q1 = 2.0 * q + 1.0;
    let amp = if two_q1.abs() > 1e-14 {
        let amp = b / (2.0 * q * two_q1);
        if amp == 0.0 {
            return None;
        }
        Some(amp)
    } else if b == 0.0 {
        None
    } else {
        return None;
    };
    let qq1 = q * (q + 1.0);
    if qq1.abs() <= 1e-14 {
        // a must vanish; sigma is free.
        return (a == 0.0).then_some((amp, None));
    }
    let sigma = match amp {
        Some(amp) => {
            let t = a / (4.0 * amp * amp * qq1);
            let disc = 1.0 + 4.0 * t;
            if disc < 0.0 || t == 0.0 {
                return None;
            }
            Some(0.5 * (1.0 - disc.sqrt()))
        }
        None => {
            // q = -1/2, b = 0: amplitude free; report the sigma = 2 member.
            let a2 = a / (4.0 * 2.0 * qq1);
            if a2 <= 0.0 {
                return None;
            }
            return Some((Some(a2.sqrt()), Some(2.0)));
        }
    };
    Some((amp, sigma))
}

/// All applicable symmetry classes, most specific first; `[none]` if nothing applies.
pub fn classify(f: &ProfileSpec, g: &ProfileSpec) -> Vec<SymmetryClass> {
    let mut out = Vec::new();
    if f.is_zero() {
        let beta = match g.form {
            ProfileForm::PowerShifted { a, c, p } if c.is_zero() => Some((a, p)),
            ProfileForm::Affine { k0, k1 } if k1.is_zero() => Some((k0, Number::int(0))),
            ProfileForm::Affine { k0, k1 } if k0.is_zero() => Some((k1, Number::int(1))),
            _ => None,
        };
        out.push(SymmetryClass::new(
            Tag::ConditionalRotation,
            ClassParams {
                beta: beta.map(|(_, p)| p.to_f64()),
                b: beta.map(|(b, _)| b.to_f64()),
                ..Default::default()
            },
        ));
    }
    if let Some(k2) = proportional(f, g) {
        out.push(SymmetryClass::new(
            Tag::ConditionalKappa,
            ClassParams {
                kappa: Some(k2.sqrt()),
                ..Default::default()
            },
        ));
    }
    let power = power_family(f, g);
    if let Some(p) = power {
        out.push(p);
    }
    if let Some(e) = exponential_family(f, g) {
        out.push(e);
    }
    if let Some(l) = linear_family(f, g) {
        out.push(l);
    }
    // Weak pair: power family without shift, or the affine pairs it degenerates to.
    let weak_base = power.or_else(|| {
        let (a, cf, pf) = as_power(f)?;
        let (b, cg, pg) = as_power(g)?;
        if cf.is_some_and(|c| !c.is_zero()) || cg.is_some_and(|c| !c.is_zero()) {
            return None;
        }
        let q = match (pf.and_then(|p| q_from(p, 2)), pg.and_then(|p| q_from(p, 1))) {
            (Some(x), Some(y)) if num_close(x, y) => x,
            (None, Some(y)) if a.is_zero() => y,
            (Some(x), None) if b.is_zero() => x,
            _ => return None,
        };
        Some(SymmetryClass::new(
            Tag::A,
            ClassParams {
                q: Some(q.to_f64()),
                a: Some(a.to_f64()),
                b: Some(b.to_f64()),
                c: Some(0.0),
                ..Default::default()
            },
        ))
    });
    if let Some(base) = weak_base {
        let p = base.params;
        if p.c == Some(0.0) {
            let (q, a, b) = (p.q.unwrap_or(0.0), p.a.unwrap_or(0.0), p.b.unwrap_or(0.0));
            if let Some((amp, sigma)) = weak_sigma_params(q, a, b) {
                out.push(SymmetryClass::new(
                    Tag::WeakSigma,
                    ClassParams {
                        q: Some(q),
                        a: Some(a),
                        b: Some(b),
                        amp,
                        sigma,
                        ..Default::default()
                    },
                ));
            }
        }
    }
    if out.is_empty() {
        out.push(SymmetryClass::none());
    }
    out
}

/// Profiles and constants of the weak pair solved by `(A s)^(-q)`, `s = sigma r^2 + z^2`.
pub fn weak_family(q: f64, amp: f64, sigma: f64) -> Result<(ProfileSpec, ProfileSpec, f64, f64), ProfileError> {
    if sigma == 0.0 || sigma == 1.0 {
        return Err(ProfileError::DegenerateSigma(sigma));
    }
    if q == 0.0 || !q.is_finite() {
        return Err(ProfileError::InvalidParameter(format!("q = {q} must be finite and nonzero")));
    }
    if amp == 0.0 || !amp.is_finite() {
        return Err(ProfileError::InvalidParameter(format!("A = {amp} must be finite and nonzero")));
    }
    let a = 4.0 * amp * amp * (sigma * sigma - sigma) * q * (q + 1.0);
    let b = 2.0 * amp * q * (2.0 * q + 1.0);
    let qn = approx_number(q);
    let one = Number::int(1);
    let pf = one.checked_add(Number::int(2).checked_div(qn).unwrap_or(Number::Real(2.0 / q)));
    let pg = one.checked_add(one.checked_div(qn).unwrap_or(Number::Real(1.0 / q)));
    let f = if a == 0.0 {
        ProfileSpec::zero(Role::F)
    } else {
        ProfileSpec::power(Role::F, a, pf)
    };
    let g = if b == 0.0 {
        ProfileSpec::zero(Role::G)
    } else {
        ProfileSpec::power(Role::G, b, pg)
    };
    Ok((f, g, a, b))
}

/// `(A, sigma)` of the D-shaped member solving `F = a psi^-7`, `G = b psi^-3`.
pub fn dshape_params_from(a: f64, b: f64) -> Result<(f64, f64), ProfileError> {
    if b == 0.0 {
        return Err(ProfileError::InvalidParameter("b must be nonzero".into()));
    }
    let disc = 1.0 - a / (3.0 * b * b);
    if disc < 0.0 {
        return Err(ProfileError::NoRealSigma { a, b });
    }
    Ok((-4.0 * b, 0.5 * (1.0 - disc.sqrt())))
}
