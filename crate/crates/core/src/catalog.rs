//! Closed-form solution families, their parameter constraints and
//! validity domains.

use crate::expr::{Expr, Func, Number};
use crate::profiles::{approx_number, weak_family, ProfileForm, ProfileSpec, Role};
use crate::solution::{ExprField, SampleBox, Solution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CylQuartic,
    SqrtR,
    LogCyl,
    CondParabolic,
    CondExp,
    RotPower,
    WeakPower,
    TrivialWeak,
    WeakQuad,
    WeakCubic,
    Dshape,
    DshapeComplement,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::CylQuartic,
        Family::SqrtR,
        Family::LogCyl,
        Family::CondParabolic,
        Family::CondExp,
        Family::RotPower,
        Family::WeakPower,
        Family::TrivialWeak,
        Family::WeakQuad,
        Family::WeakCubic,
        Family::Dshape,
        Family::DshapeComplement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CylQuartic => "cyl_quartic",
            Family::SqrtR => "sqrt_r",
            Family::LogCyl => "log_cyl",
            Family::CondParabolic => "cond_parabolic",
            Family::CondExp => "cond_exp",
            Family::RotPower => "rot_power",
            Family::WeakPower => "weak_power",
            Family::TrivialWeak => "trivial_weak",
            Family::WeakQuad => "weak_quad",
            Family::WeakCubic => "weak_cubic",
            Family::Dshape => "dshape",
            Family::DshapeComplement => "dshape_complement",
        }
    }

    /// Families carrying the weak-symmetry parameter `sigma`.
    pub fn has_sigma(self) -> bool {
        matches!(
            self,
            Family::WeakPower | Family::TrivialWeak | Family::WeakQuad | Family::WeakCubic | Family::Dshape | Family::DshapeComplement
        )
    }

    /// A representative valid parameter set.
    pub fn default_params(self) -> Params {
        let kv: &[(&str, f64)] = match self {
            Family::CylQuartic => &[("a", 4.0), ("b", 4.0)],
            Family::SqrtR => &[("a", -1.0), ("b", 0.5)],
            Family::LogCyl => &[("a", 2.0), ("b", 2.0)],
            Family::CondParabolic => &[("kappa", 0.5), ("c", 1.0)],
            Family::CondExp => &[("c", 0.5), ("c0", 1.0), ("kappa", 0.5)],
            Family::RotPower => &[("b", 8.0), ("beta", 3.0)],
            Family::WeakPower => &[("q", -0.5), ("sigma", 2.0), ("a", -1.0), ("b", 0.0)],
            Family::TrivialWeak => &[("sigma", -1.0)],
            Family::WeakQuad => &[("alpha", 1.0), ("sign", 1.0), ("sigma", 2.0)],
            Family::WeakCubic => &[("alpha", 1.0), ("sign", 1.0), ("sigma", 2.0)],
            Family::Dshape => &[("lambda", 1.0), ("A", -1.0), ("sigma", -1.0)],
            Family::DshapeComplement => &[("lambda", 1.0), ("A", 1.0), ("sigma", -1.0)],
        };
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = CatalogError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == norm)
            .ok_or_else(|| CatalogError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("missing parameter `{0}`")]
    MissingParam(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("constraint has no admissible real solution: {0}")]
    Unsolvable(String),
    #[error("constraint violated: {relation} (residual {residual:e})")]
    ConstraintViolated { relation: String, residual: f64 },
    #[error("{0}")]
    Refused(String),
}

fn k(x: f64) -> Expr {
    Expr::Num(approx_number(x))
}

fn r() -> Expr {
    Expr::r()
}

fn z() -> Expr {
    Expr::z()
}

fn psi() -> Expr {
    Expr::psi()
}

fn get(p: &Params, key: &'static str) -> Result<f64, CatalogError> {
    let v = p.get(key).copied().ok_or(CatalogError::MissingParam(key))?;
    if !v.is_finite() {
        return Err(CatalogError::InvalidParam(format!("{key} = {v}")));
    }
    Ok(v)
}

fn get_or(p: &Params, key: &'static str, default: f64) -> Result<f64, CatalogError> {
    match p.get(key) {
        Some(_) => get(p, key),
        None => Ok(default),
    }
}

fn flag(p: &Params, key: &str) -> bool {
    p.get(key).is_some_and(|v| *v != 0.0)
}

fn profile(role: Role, e: Expr) -> ProfileSpec {
    ProfileSpec::from_expr(role, e).expect("profile in psi only")
}

/// Accepts `residual` when it vanishes relative to `scale`.
fn check(checked: bool, relation: impl Into<String>, residual: f64, scale: f64) -> Result<(), CatalogError> {
    if checked && residual.abs() > 1e-12 * scale.abs().max(1.0) {
        return Err(CatalogError::ConstraintViolated {
            relation: relation.into(),
            residual,
        });
    }
    Ok(())
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, ci)| i as f64 * ci).collect()
}

/// Real roots in `[-1e6, 1e6]` of the polynomial with ascending coefficients
/// `c`, by recursion on the derivative and bisection between its roots.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    const LIM: f64 = 1e6;
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let x = -c[0] / c[1];
            return if x.abs() <= LIM { vec![x] } else { Vec::new() };
        }
        _ => {}
    }
    let mut marks = vec![-LIM];
    marks.extend(real_roots(&poly_deriv(&c)));
    marks.push(LIM);
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut roots: Vec<f64> = Vec::new();
    let push = |x: f64, roots: &mut Vec<f64>| {
        if !roots.iter().any(|y| (x - *y).abs() <= 1e-9 * x.abs().max(1.0)) {
            roots.push(x);
        }
    };
    for w in marks.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (poly_eval(&c, lo), poly_eval(&c, hi));
        if flo.abs() <= 1e-13 * scale {
            push(lo, &mut roots);
        }
        if fhi.abs() <= 1e-13 * scale {
            push(hi, &mut roots);
        }
        if flo.signum() * fhi.signum() < 0.0 {
            for _ in 0..400 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if poly_eval(&c, mid).signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            push(0.5 * (lo + hi), &mut roots);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Real roots of the family's amplitude constraint, when it has one.
pub fn constraint_roots(family: Family, p: &Params) -> Result<Vec<f64>, CatalogError> {
    match family {
        Family::CylQuartic => {
            let (a, b) = (get(p, "a")?, get(p, "b")?);
            Ok(real_roots(&[-a, -b, 8.0]))
        }
        Family::SqrtR => {
            let (a, b) = (get(p, "a")?, get(p, "b")?);
            Ok(real_roots(&[4.0 * a, 0.0, 0.0, 0.0, 4.0 * b, 0.0, 0.0, 0.0, 3.0]))
        }
        _ => Err(CatalogError::Refused(format!("{family} has no amplitude constraint polynomial"))),
    }
}

/// Zero-level circle of a D-shaped solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Circle {
    pub center: (f64, f64),
    pub radius: f64,
}

struct Built {
    expr: Expr,
    guards: Vec<Expr>,
    f: ProfileSpec,
    g: ProfileSpec,
    params: Params,
    formula: String,
    sample: SampleBox,
}

/// Instantiates a family, solving for free parameters and checking constraints.
pub fn instantiate(family: Family, params: &Params) -> Result<Solution, CatalogError> {
    build(family, params, true)
}

/// Like [`instantiate`] but takes every given parameter literally and skips
/// constraint checks. Used for negative controls.
pub fn instantiate_unchecked(family: Family, params: &Params) -> Result<Solution, CatalogError> {
    build(family, params, false)
}

fn build(family: Family, params: &Params, checked: bool) -> Result<Solution, CatalogError> {
    let b = match family {
        Family::CylQuartic => cyl_quartic(params, checked)?,
        Family::SqrtR => sqrt_r(params, checked)?,
        Family::LogCyl => log_cyl(params, checked)?,
        Family::CondParabolic => cond_parabolic(params)?,
        Family::CondExp => cond_exp(params)?,
        Family::RotPower => rot_power(params, checked)?,
        Family::WeakPower => weak_power(params, checked)?,
        Family::TrivialWeak => trivial_weak(params)?,
        Family::WeakQuad => weak_quad(params)?,
        Family::WeakCubic => weak_cubic(params)?,
        Family::Dshape => dshape(params, checked, false)?,
        Family::DshapeComplement => dshape(params, checked, true)?,
    };
    Ok(Solution {
        family: family.name().to_string(),
        params: b.params,
        formula: b.formula,
        f: b.f,
        g: b.g,
        field: Arc::new(ExprField::new(b.expr, b.guards)),
        sample: b.sample,
    })
}

fn with(params: &Params, extra: &[(&str, f64)]) -> Params {
    let mut p = params.clone();
    for (key, v) in extra {
        p.insert(key.to_string(), *v);
    }
    p
}

fn cyl_quartic(p: &Params, checked: bool) -> Result<Built, CatalogError> {
    let (a, b) = (get(p, "a")?, get(p, "b")?);
    let amp = match p.get("A") {
        Some(_) => get(p, "A")?,
        None => {
            // psi^{1/2} = |A| r^2, so only positive roots are admissible.
            let roots = constraint_roots(Family::CylQuartic, p)?;
            *roots
                .iter()
                .filter(|x| **x > 0.0)
                .last()
                .ok_or_else(|| CatalogError::Unsolvable(format!("8A^2 = a + bA with A > 0 (a = {a}, b = {b})")))?
        }
    };
    if checked && amp <= 0.0 {
        return Err(CatalogError::InvalidParam(format!("A = {amp} must be positive")));
    }
    check(checked, "8A^2 = a + bA", 8.0 * amp * amp - a - b * amp, 8.0 * amp * amp)?;
    Ok(Built {
        expr: k(amp * amp) * r().powi(4),
        guards: vec![],
        f: ProfileSpec::constant(Role::F, a),
        g: profile(Role::G, k(b) * Expr::pow(psi(), Expr::ratio(1, 2))),
        params: with(p, &[("A", amp)]),
        formula: "A^2 r^4".into(),
        sample: SampleBox::new((0.2, 2.0), (-1.0, 1.0)),
    })
}

fn sqrt_r(p: &Params, checked: bool) -> Result<Built, CatalogError> {
    let (a, b) = (get(p, "a")?, get(p, "b")?);
    let amp = match p.get("A") {
        Some(_) => get(p, "A")?,
        None => *constraint_roots(Family::SqrtR, p)?
            .last()
            .ok_or_else(|| CatalogError::Unsolvable(format!("3A^8 + 4a + 4bA^4 = 0 (a = {a}, b = {b})")))?,
    };
    if amp == 0.0 {
        return Err(CatalogError::InvalidParam("A must be nonzero".into()));
    }
    let a4 = amp.powi(4);
    check(checked, "3A^8 + 4a + 4bA^4 = 0", 3.0 * a4 * a4 + 4.0 * a + 4.0 * b * a4, 3.0 * a4 * a4)?;
    Ok(Built {
        expr: k(amp) * r().sqrt(),
        guards: vec![],
        f: profile(Role::F, k(a) * psi().powi(-7)),
        g: profile(Role::G, k(b) * psi().powi(-3)),
        params: with(p, &[("A", amp)]),
        formula: "A sqrt(r)".into(),
        sample: SampleBox::new((0.1, 3.0), (-2.0, 2.0)),
    })
}

fn log_cyl(p: &Params, checked: bool) -> Result<Built, CatalogError> {
    let a = get(p, "a")?;
    let b = get_or(p, "b", 4.0 - a)?;
    check(checked, "a + b = 4", a + b - 4.0, 4.0)?;
    Ok(Built {
        expr: k(-2.0) * r().ln(),
        guards: vec![],
        f: profile(Role::F, k(a) * (Expr::int(2) * psi()).exp()),
        g: profile(Role::G, k(b) * psi().exp()),
        params: with(p, &[("b", b)]),
        formula: "-2 log r".into(),
        sample: SampleBox::new((0.2, 3.0), (-2.0, 2.0)),
    })
}

fn cond_parabolic(p: &Params) -> Result<Built, CatalogError> {
    let kappa = get(p, "kappa")?;
    let c = get_or(p, "c", 0.0)?;
    let u = r().powi(2) - k(2.0 * kappa) * z() + k(c);
    let f = Expr::int(-1) * psi().powi(-3);
    Ok(Built {
        expr: u.clone().sqrt(),
        guards: vec![u],
        g: profile(Role::G, k(kappa * kappa) * f.clone()),
        f: profile(Role::F, f),
        params: with(p, &[("c", c)]),
        formula: "(r^2 - 2 kappa z + c)^(1/2)".into(),
        sample: SampleBox::new((0.1, 2.0), (-2.0, 2.0)),
    })
}

fn cond_exp(p: &Params) -> Result<Built, CatalogError> {
    let c = get(p, "c")?;
    let c0 = get_or(p, "c0", 0.0)?;
    let kappa = get(p, "kappa")?;
    if c == 0.0 {
        return Err(CatalogError::InvalidParam("c must be nonzero".into()));
    }
    let u = k(c) * r().powi(2) - k(2.0 * c * kappa) * z() + k(c0);
    let expr = (k(8.0 * c * c) / Expr::call(Func::Sinh, u.clone()).powi(2)).ln();
    Ok(Built {
        expr,
        guards: vec![u.powi(2)],
        f: profile(Role::F, psi().exp()),
        g: profile(Role::G, k(kappa * kappa) * psi().exp()),
        params: with(p, &[("c0", c0)]),
        formula: "log(8 c^2 cosech^2(c r^2 - 2 c kappa z + c0))".into(),
        sample: SampleBox::new((0.1, 2.0), (-1.0, 1.0)),
    })
}

fn rot_power(p: &Params, checked: bool) -> Result<Built, CatalogError> {
    let b = get(p, "b")?;
    let beta = get(p, "beta")?;
    if (beta.abs() - 1.0).abs() < 1e-12 {
        return Err(CatalogError::InvalidParam(format!("beta = {beta} must differ from +-1")));
    }
    let gamma = 1.0 / (1.0 - beta);
    let base = b / (4.0 * gamma * gamma - 2.0 * gamma);
    let amp = match p.get("A") {
        Some(_) => get(p, "A")?,
        None => {
            if base <= 0.0 && gamma.fract() != 0.0 {
                return Err(CatalogError::Unsolvable(format!(
                    "A = (b / (4 gamma^2 - 2 gamma))^gamma needs a positive base, got {base}"
                )));
            }
            base.powf(gamma)
        }
    };
    // A^{1 - beta} (4 gamma^2 - 2 gamma) = b
    check(
        checked,
        "A = (b / (4 gamma^2 - 2 gamma))^gamma",
        amp.abs().powf(1.0 - beta) * amp.signum().powi(2) * (4.0 * gamma * gamma - 2.0 * gamma) - b,
        b,
    )?;
    let pg = approx_number(beta);
    Ok(Built {
        expr: k(amp) * Expr::pow(r().powi(2) + z().powi(2), k(gamma)),
        guards: vec![],
        f: ProfileSpec::zero(Role::F),
        g: profile(Role::G, k(b) * Expr::pow(psi(), Expr::Num(pg))),
        params: with(p, &[("A", amp), ("gamma", gamma)]),
        formula: "A (r^2 + z^2)^gamma, gamma = 1/(1 - beta)".into(),
        sample: SampleBox::new((0.2, 2.0), (-2.0, 2.0)),
    })
}

fn weak_box(sigma: f64) -> SampleBox {
    if sigma > 0.0 {
        SampleBox::new((0.1, 2.0), (-2.0, 2.0))
    } else {
        SampleBox::new((0.1, 2.0), (-3.0, 3.0))
    }
}

fn weak_power(p: &Params, checked: bool) -> Result<Built, CatalogError> {
    let q = get(p, "q")?;
    let sigma = get(p, "sigma")?;
    if q == 0.0 {
        return Err(CatalogError::InvalidParam("q must be nonzero".into()));
    }
    let amp = match p.get("A") {
        Some(_) => get(p, "A")?,
        None => {
            let (a, b) = (get(p, "a")?, get(p, "b")?);
            let two_q1 = 2.0 * q * (2.0 * q + 1.0);
            if two_q1 != 0.0 {
                b / two_q1
            } else {
                let t = 4.0 * (sigma * sigma - sigma) * q * (q + 1.0);
                let a2 = a / t;
                if !(a2 > 0.0) {
                    return Err(CatalogError::Unsolvable(format!("a = 4A^2(sigma^2 - sigma)q(q+1) with a = {a}")));
                }
                a2.sqrt()
            }
        }
    };
    let (f0, g0, a, b) = weak_family(q, amp, sigma).map_err(|e| CatalogError::InvalidParam(e.to_string()))?;
    let (f, g) = match (p.get("a"), p.get("b")) {
        (Some(&ga), Some(&gb)) => {
            check(checked, "a = 4A^2(sigma^2 - sigma)q(q+1)", ga - a, a)?;
            check(checked, "b = 2Aq(2q+1)", gb - b, b)?;
            if checked {
                (f0, g0)
            } else {
                let pf = approx_number(1.0 + 2.0 / q);
                let pg = approx_number(1.0 + 1.0 / q);
                (
                    profile(Role::F, k(ga) * Expr::pow(psi(), Expr::Num(pf))),
                    profile(Role::G, k(gb) * Expr::pow(psi(), Expr::Num(pg))),
                )
            }
        }
        _ => (f0, g0),
    };
    let s = k(amp) * (k(sigma) * r().powi(2) + z().powi(2));
    Ok(Built {
        expr: Expr::pow(s.clone(), k(-q)),
        guards: vec![s],
        f,
        g,
        params: with(p, &[("A", amp), ("a", p.get("a").copied().unwrap_or(a)), ("b", p.get("b").copied().unwrap_or(b))]),
        formula: "(A (sigma r^2 + z^2))^(-q)".into(),
        sample: weak_box(sigma),
    })
}

fn trivial_weak(p: &Params) -> Result<Built, CatalogError> {
    let sigma = get_or(p, "sigma", -1.0)?;
    Ok(Built {
        expr: k(sigma) * r().powi(2) + z().powi(2),
        guards: vec![],
        f: ProfileSpec::zero(Role::F),
        g: ProfileSpec::constant(Role::G, 2.0),
        params: with(p, &[("sigma", sigma)]),
        formula: "sigma r^2 + z^2".into(),
        sample: SampleBox::new((0.1, 2.0), (-2.0, 2.0)),
    })
}

fn sign_sigma(p: &Params) -> Result<(f64, f64, f64), CatalogError> {
    let alpha = get(p, "alpha")?;
    let sign = get_or(p, "sign", 1.0)?;
    let sigma = get_or(p, "sigma", 2.0)?;
    if alpha <= 0.0 {
        return Err(CatalogError::InvalidParam("alpha must be positive".into()));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(CatalogError::InvalidParam("sign must be +1 or -1".into()));
    }
    if sigma != 2.0 && sigma != -1.0 {
        return Err(CatalogError::InvalidParam("sigma must be 2 or -1".into()));
    }
    Ok((alpha, sign, sigma))
}

/// `|psi|^p` for the negative branch, `psi^p` otherwise.
fn branch_pow(sign: f64, p: Number) -> Expr {
    if sign > 0.0 {
        Expr::pow(psi(), Expr::Num(p))
    } else {
        Expr::pow(Expr::call(Func::Abs, psi()), Expr::Num(p))
    }
}

fn weak_quad(p: &Params) -> Result<Built, CatalogError> {
    let (alpha, sign, sigma) = sign_sigma(p)?;
    let s = k(sigma) * r().powi(2) + z().powi(2);
    Ok(Built {
        expr: k(sign * alpha * alpha / 16.0) * s.clone().powi(2),
        guards: vec![s],
        f: ProfileSpec::constant(Role::F, sign * alpha * alpha),
        g: profile(Role::G, k(3.0 * sign * alpha) * branch_pow(sign, Number::ratio(1, 2))),
        params: with(p, &[("sign", sign), ("sigma", sigma)]),
        formula: "sign (alpha^2/16) (sigma r^2 + z^2)^2".into(),
        sample: weak_box(sigma),
    })
}

fn weak_cubic(p: &Params) -> Result<Built, CatalogError> {
    let (alpha, sign, sigma) = sign_sigma(p)?;
    let s = k(sigma) * r().powi(2) + z().powi(2);
    let amp = alpha.powi(3) / (192.0 * 3f64.sqrt());
    Ok(Built {
        expr: k(sign * amp) * s.clone().powi(3),
        guards: vec![s],
        f: profile(Role::F, k(sign * alpha * alpha) * branch_pow(sign, Number::ratio(1, 3))),
        g: profile(
            Role::G,
            k(sign * 15.0 * alpha / (2.0 * 3f64.sqrt())) * branch_pow(sign, Number::ratio(2, 3)),
        ),
        params: with(p, &[("sign", sign), ("sigma", sigma)]),
        formula: "sign alpha^3/(192 sqrt 3) (sigma r^2 + z^2)^3".into(),
        sample: weak_box(sigma),
    })
}

fn dshape(p: &Params, checked: bool, complement: bool) -> Result<Built, CatalogError> {
    let lambda = get(p, "lambda")?;
    let amp = get(p, "A")?;
    let sigma = get(p, "sigma")?;
    if checked {
        if sigma >= 0.0 {
            return Err(CatalogError::InvalidParam(format!("sigma = {sigma} must be negative")));
        }
        if !complement && amp >= 0.0 {
            return Err(CatalogError::InvalidParam(format!("A = {amp} must be negative")));
        }
        if complement && amp <= 0.0 {
            return Err(CatalogError::InvalidParam(format!("A = {amp} must be positive")));
        }
        if lambda <= 0.0 {
            return Err(CatalogError::InvalidParam(format!("lambda = {lambda} must be positive")));
        }
    }
    let shift = flag(p, "shift_z0");
    let z0 = -1.0 / (2.0 * lambda);
    // Shifted frames place the circle centers on z = 0.
    let zz = if shift { z() + k(z0) } else { z() };
    let rho2 = r().powi(2) + zz.clone().powi(2);
    let w = zz + k(lambda) * rho2;
    let inner = if complement {
        k(amp) * (k(sigma) * r().powi(2) + w.powi(2))
    } else {
        k(amp * sigma) * r().powi(2) - k(amp.abs()) * w.powi(2)
    };
    let (_, _, a, b) = weak_family(-0.25, amp, sigma).map_err(|e| CatalogError::InvalidParam(e.to_string()))?;
    let (fa, gb) = (p.get("a").copied().unwrap_or(a), p.get("b").copied().unwrap_or(b));
    check(checked, "a = -(3/4) A^2 (sigma^2 - sigma)", fa - a, a)?;
    check(checked, "b = -A/4", gb - b, b)?;
    let cr = sigma.abs().sqrt() / (2.0 * lambda);
    let rad = (1.0 + sigma.abs()).sqrt() / (2.0 * lambda);
    let zc = if shift { 0.0 } else { z0 };
    let sample = if complement {
        SampleBox::new((0.02 * rad, cr + 2.0 * rad), (zc - 2.0 * rad, zc + 2.0 * rad))
    } else {
        SampleBox::new(((cr - rad).max(0.0), cr + rad), (zc - rad, zc + rad))
    };
    Ok(Built {
        expr: Expr::pow(inner.clone(), Expr::ratio(1, 4)),
        guards: vec![inner],
        f: profile(Role::F, k(fa) * psi().powi(-7)),
        g: profile(Role::G, k(gb) * psi().powi(-3)),
        params: with(p, &[("a", fa), ("b", gb), ("shift_z0", if shift { 1.0 } else { 0.0 })]),
        formula: if complement {
            "[A (sigma r^2 + (z + lambda (r^2 + z^2))^2)]^(1/4)".into()
        } else {
            "[A sigma r^2 - |A| (z^2 + 2 lambda z (r^2 + z^2) + lambda^2 (r^2 + z^2)^2)]^(1/4)".into()
        },
        sample,
    })
}

/// The partner `sigma -> 1 - sigma` solving the same profile pair.
pub fn doubling_partner(s: &Solution) -> Result<Solution, CatalogError> {
    let family: Family = s.family.parse().map_err(|_| CatalogError::Refused(format!("`{}` is not a catalog family", s.family)))?;
    match family {
        Family::WeakPower | Family::TrivialWeak | Family::WeakQuad | Family::WeakCubic => {}
        Family::Dshape | Family::DshapeComplement => {
            return Err(CatalogError::Refused(format!(
                "{family} requires sigma < 0; its partner 1 - sigma > 0 leaves the family"
            )))
        }
        _ => return Err(CatalogError::Refused(format!("{family} carries no sigma"))),
    }
    let sigma = s.param("sigma").ok_or(CatalogError::MissingParam("sigma"))?;
    let mut p = s.params.clone();
    p.insert("sigma".into(), 1.0 - sigma);
    if family == Family::WeakPower {
        // Keep the amplitude; a and b are unchanged since sigma^2 - sigma is.
        p.remove("a");
        p.remove("b");
    }
    instantiate(family, &p)
}

/// The two zero-level circles of a D-shaped solution.
pub fn dshape_boundary(s: &Solution) -> Result<[Circle; 2], CatalogError> {
    if s.family != Family::Dshape.name() && s.family != Family::DshapeComplement.name() {
        return Err(CatalogError::Refused(format!("`{}` is not D-shaped", s.family)));
    }
    let lambda = s.param("lambda").ok_or(CatalogError::MissingParam("lambda"))?;
    let sigma = s.param("sigma").ok_or(CatalogError::MissingParam("sigma"))?;
    let zc = if s.param("shift_z0").unwrap_or(0.0) != 0.0 {
        0.0
    } else {
        -1.0 / (2.0 * lambda)
    };
    let cr = sigma.abs().sqrt() / (2.0 * lambda);
    let radius = (1.0 + sigma.abs()).sqrt() / (2.0 * lambda);
    Ok([
        Circle {
            center: (cr, zc),
            radius,
        },
        Circle {
            center: (-cr, zc),
            radius,
        },
    ])
}

/// Inner expression of a D-shaped solution (its fourth power), for boundary checks.
pub fn dshape_inner(s: &Solution, r: f64, z: f64) -> Option<f64> {
    let lambda = s.param("lambda")?;
    let amp = s.param("A")?;
    let sigma = s.param("sigma")?;
    let zz = if s.param("shift_z0").unwrap_or(0.0) != 0.0 {
        z - 1.0 / (2.0 * lambda)
    } else {
        z
    };
    let w = zz + lambda * (r * r + zz * zz);
    Some(if s.family == Family::DshapeComplement.name() {
        amp * (sigma * r * r + w * w)
    } else {
        amp * sigma * r * r - amp.abs() * w * w
    })
}

/// Whether the pair's `F` profile is identically zero.
pub fn is_force_free_f(s: &Solution) -> bool {
    s.f.form == ProfileForm::Zero
}
