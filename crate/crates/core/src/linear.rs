//! The linear GS equation: separable solutions `R(r) Z(z)`, particular
//! solutions of the inhomogeneous cases and superposition.

use crate::expr::{Expr, Func};
use crate::grid::{GridField, GridSpec};
use crate::jet::Jet;
use crate::ode::{dopri5, quintic_hermite, OdeError, OdeOptions, OdeTable};
use crate::profiles::{approx_number, ProfileSpec, Role};
use crate::solution::{ExprField, FieldError, FluxField, Jet64, SampleBox, Solution};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Series start radius for the regular radial branch.
pub const RADIAL_EPS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("profiles differ: {0}")]
    Mismatch(String),
}

fn k(x: f64) -> Expr {
    Expr::Num(approx_number(x))
}

/// Regular radial branch of `R'' - R'/r + mu R = a1 r^2 R`, normalized so
/// that `R / r^2 -> 1` at the axis.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub a1: f64,
    pub mu: f64,
    /// Samples of `(R, R')` with `(R', R'')`.
    pub table: Arc<OdeTable<f64, 2>>,
    /// Closed-form basis `(regular, irregular)` in `r`, when one exists.
    pub closed: Option<(Expr, Expr)>,
    /// Factor turning the closed regular basis into the normalized branch.
    pub closed_norm: f64,
}

/// `R = r^2 (1 + beta r^2 + gamma r^4)` with `beta = -mu/8`, `gamma = (a1 + mu^2/8)/24`.
pub fn series_coeffs(a1: f64, mu: f64) -> (f64, f64) {
    (-mu / 8.0, (a1 + mu * mu / 8.0) / 24.0)
}

pub fn radial_solve(a1: f64, mu: f64, r_max: f64, tol: f64) -> Result<RadialSolution, LinearError> {
    if !(r_max > RADIAL_EPS && r_max <= 50.0) {
        return Err(LinearError::InvalidParam(format!("r_max = {r_max} outside (eps, 50]")));
    }
    let opts = OdeOptions::<f64>::new(tol)?;
    let e = RADIAL_EPS;
    let (beta, gamma) = series_coeffs(a1, mu);
    let y0 = [
        e * e * (1.0 + beta * e * e + gamma * e.powi(4)),
        2.0 * e + 4.0 * beta * e.powi(3) + 6.0 * gamma * e.powi(5),
    ];
    let table = dopri5(|r, u: &[f64; 2]| [u[1], u[1] / r + (a1 * r * r - mu) * u[0]], e, y0, r_max, &opts)?;
    let r = Expr::r;
    let (closed, closed_norm) = if a1 == 0.0 && mu > 0.0 {
        let s = mu.sqrt();
        (
            Some((
                r() * Expr::call(Func::J1, k(s) * r()),
                r() * Expr::call(Func::Y1, k(s) * r()),
            )),
            2.0 / s,
        )
    } else if mu == 0.0 && a1 < 0.0 {
        let alpha = (-a1).sqrt();
        let t = k(alpha / 2.0) * r().powi(2);
        (Some((t.clone().sin(), t.cos())), 2.0 / alpha)
    } else {
        (None, 1.0)
    };
    Ok(RadialSolution {
        a1,
        mu,
        table: Arc::new(table),
        closed,
        closed_norm,
    })
}

impl RadialSolution {
    /// `(R, R', R'')` of the numeric branch.
    pub fn eval3(&self, r: f64) -> Option<(f64, f64, f64)> {
        let tab = &self.table;
        let k = tab.locate(r)?;
        let a = (tab.y[k][0], tab.y[k][1], tab.dy[k][1]);
        let b = (tab.y[k + 1][0], tab.y[k + 1][1], tab.dy[k + 1][1]);
        Some(quintic_hermite(r, tab.t[k], tab.t[k + 1], a, b))
    }

    pub fn eval(&self, r: f64) -> Option<f64> {
        self.eval3(r).map(|v| v.0)
    }

    /// Residual of the radial equation at `r` from the interpolant.
    pub fn ode_residual(&self, r: f64) -> Option<f64> {
        let (v, d, d2) = self.eval3(r)?;
        Some(d2 - d / r + self.mu * v - self.a1 * r * r * v)
    }

    pub fn r_max(&self) -> f64 {
        self.table.span().1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZKind {
    /// `c3 sin(nu z) + c4 cos(nu z)`, `h = -nu^2`.
    Osc { nu: f64 },
    /// `c3 sinh(k z) + c4 cosh(k z)`, `h = k^2`.
    Hyp { k: f64 },
    /// `c3 + c4 z`, `h = 0`.
    Linear,
}

impl ZKind {
    pub fn h(self) -> f64 {
        match self {
            ZKind::Osc { nu } => -nu * nu,
            ZKind::Hyp { k } => k * k,
            ZKind::Linear => 0.0,
        }
    }

    fn expr(self, c3: f64, c4: f64) -> Expr {
        let z = Expr::z;
        match self {
            ZKind::Osc { nu } => k(c3) * (k(nu) * z()).sin() + k(c4) * (k(nu) * z()).cos(),
            ZKind::Hyp { k: kk } => {
                k(c3) * Expr::call(Func::Sinh, k(kk) * z()) + k(c4) * Expr::call(Func::Cosh, k(kk) * z())
            }
            ZKind::Linear => k(c3) + k(c4) * z(),
        }
    }
}

/// `R(r) Z(z)` solving `psi_rr - psi_r/r + psi_zz = a1 r^2 psi + b1 psi`.
#[derive(Debug, Clone)]
pub struct SeparableSpec {
    pub a1: f64,
    pub b1: f64,
    pub h: f64,
    pub z: ZKind,
    /// `c1, c2` weight the radial basis, `c3, c4` the z factor.
    pub c: [f64; 4],
    pub r_max: f64,
    pub tol: f64,
}

impl SeparableSpec {
    pub fn new(a1: f64, b1: f64, z: ZKind, c: [f64; 4]) -> Self {
        Self {
            a1,
            b1,
            h: z.h(),
            z,
            c,
            r_max: 12.0,
            tol: 1e-12,
        }
    }

    pub fn mu(&self) -> f64 {
        self.h - self.b1
    }
}

#[derive(Debug)]
struct NumericSeparable {
    radial: RadialSolution,
    c1: f64,
    z: Expr,
}

impl FluxField for NumericSeparable {
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        let (v, d, d2) = self.radial.eval3(r).ok_or(FieldError::OutOfDomain { r, z })?;
        let (jr, jz) = Jet::seed(r, z);
        let rad = jr.chain(v, d, d2) * self.c1;
        let zj = self.z.eval_with(jr, jz, Jet::constant(0.0))?;
        Ok(rad * zj)
    }

    fn contains(&self, r: f64, _z: f64) -> bool {
        self.radial.table.contains(r)
    }
}

/// Homogeneous linear profiles `F = a1 psi`, `G = b1 psi`.
pub fn linear_profiles(a0: f64, a1: f64, b0: f64, b1: f64) -> (ProfileSpec, ProfileSpec) {
    let psi = Expr::psi;
    (
        ProfileSpec::from_expr(Role::F, k(a0) + k(a1) * psi()).expect("profile"),
        ProfileSpec::from_expr(Role::G, k(b0) + k(b1) * psi()).expect("profile"),
    )
}

/// A separable solution. Closed-form radial bases are used when available;
/// otherwise the numeric regular branch, where `c2` must vanish.
pub fn separable(spec: &SeparableSpec) -> Result<Solution, LinearError> {
    if (spec.h - spec.z.h()).abs() > 1e-14 * spec.h.abs().max(1.0) {
        return Err(LinearError::InvalidParam(format!(
            "h = {} inconsistent with z factor (h = {})",
            spec.h,
            spec.z.h()
        )));
    }
    let [c1, c2, c3, c4] = spec.c;
    let mu = spec.mu();
    let radial = radial_solve(spec.a1, mu, spec.r_max, spec.tol)?;
    let zf = spec.z.expr(c3, c4);
    let (f, g) = linear_profiles(0.0, spec.a1, 0.0, spec.b1);
    let mut params = BTreeMap::new();
    for (key, v) in [("a1", spec.a1), ("b1", spec.b1), ("h", spec.h), ("mu", mu), ("c1", c1), ("c2", c2), ("c3", c3), ("c4", c4)] {
        params.insert(key.to_string(), v);
    }
    let sample = SampleBox::new((0.2, spec.r_max.min(3.0)), (-2.0, 2.0));
    let (field, formula): (Arc<dyn FluxField>, String) = match &radial.closed {
        Some((reg, irr)) => (
            Arc::new(ExprField::new((k(c1) * reg.clone() + k(c2) * irr.clone()) * zf.clone(), vec![])),
            format!("[c1 ({reg}) + c2 ({irr})] ({zf})"),
        ),
        None => {
            if c2 != 0.0 {
                return Err(LinearError::InvalidParam(
                    "no closed-form irregular branch for these (a1, mu); set c2 = 0".into(),
                ));
            }
            (
                Arc::new(NumericSeparable {
                    radial,
                    c1,
                    z: zf.clone(),
                }),
                format!("c1 R(r) ({zf}), R numeric regular branch"),
            )
        }
    };
    Ok(Solution {
        family: "separable".into(),
        params,
        formula,
        f,
        g,
        field,
        sample,
    })
}

pub fn separable_grid(spec: &SeparableSpec, grid: GridSpec) -> Result<GridField, LinearError> {
    let s = separable(spec)?;
    Ok(GridField::sample(&*s.field, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticularCase {
    /// `F = a0`, `G = b0 + b1 psi`.
    CDoublePrime,
    /// `F = a0 - alpha^2 psi`, `G = b0`.
    CTriplePrime,
}

pub fn particular_solution(case: ParticularCase, params: &BTreeMap<String, f64>) -> Result<Solution, LinearError> {
    let get = |key: &str| params.get(key).copied().unwrap_or(0.0);
    let r = Expr::r;
    let a0 = get("a0");
    let b0 = get("b0");
    match case {
        ParticularCase::CDoublePrime => {
            let b1 = get("b1");
            if b1 == 0.0 {
                return Err(LinearError::InvalidParam("b1 must be nonzero".into()));
            }
            let (f, g) = linear_profiles(a0, 0.0, b0, b1);
            Ok(Solution {
                family: "particular_c2".into(),
                params: params.clone(),
                formula: "-(a0/b1) r^2 - b0/b1".into(),
                f,
                g,
                field: Arc::new(ExprField::new(k(-a0 / b1) * r().powi(2) + k(-b0 / b1), vec![])),
                sample: SampleBox::new((0.1, 3.0), (-2.0, 2.0)),
            })
        }
        ParticularCase::CTriplePrime => {
            let alpha = get("alpha");
            if !(alpha > 0.0) {
                return Err(LinearError::InvalidParam("alpha must be positive".into()));
            }
            let a1 = -alpha * alpha;
            let t = k(alpha / 2.0) * r().powi(2);
            let body = t.clone().sin() * Expr::call(Func::Ci, t.clone()) - t.clone().cos() * Expr::call(Func::Si, t);
            let (f, g) = linear_profiles(a0, a1, b0, 0.0);
            let mut p = params.clone();
            p.insert("a1".into(), a1);
            Ok(Solution {
                family: "particular_c3".into(),
                params: p,
                formula: "(b0/(2 alpha)) [sin t Ci t - cos t Si t] + a0/alpha^2, t = alpha r^2/2".into(),
                f,
                g,
                field: Arc::new(ExprField::new(k(b0 / (2.0 * alpha)) * body + k(a0 / (alpha * alpha)), vec![])),
                sample: SampleBox::new((0.2, 3.0), (-2.0, 2.0)),
            })
        }
    }
}

#[derive(Debug)]
struct SumField {
    parts: Vec<Arc<dyn FluxField>>,
}

impl FluxField for SumField {
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        let mut acc = Jet::constant(0.0);
        for p in &self.parts {
            acc = acc + p.jet(r, z)?;
        }
        Ok(acc)
    }

    fn contains(&self, r: f64, z: f64) -> bool {
        self.parts.iter().all(|p| p.contains(r, z))
    }
}

/// `psi0 + sum(w1)`; each `w1` must solve the homogeneous equation with the
/// same `(a1, b1)` as `psi0`.
pub fn superpose(psi0: &Solution, w1: &[Solution]) -> Result<Solution, LinearError> {
    let slopes = |s: &Solution| -> Result<(f64, f64), LinearError> {
        let (_, a1) = s.f.affine_coeffs().ok_or_else(|| LinearError::Mismatch(format!("F of `{}` is not affine", s.family)))?;
        let (_, b1) = s.g.affine_coeffs().ok_or_else(|| LinearError::Mismatch(format!("G of `{}` is not affine", s.family)))?;
        Ok((a1.to_f64(), b1.to_f64()))
    };
    let base = slopes(psi0)?;
    let mut parts = vec![psi0.field.clone()];
    for w in w1 {
        let (wa0, wb0) = (w.f.affine_coeffs().map(|c| c.0.to_f64()), w.g.affine_coeffs().map(|c| c.0.to_f64()));
        let s = slopes(w)?;
        if (s.0 - base.0).abs() > 1e-12 || (s.1 - base.1).abs() > 1e-12 || wa0 != Some(0.0) || wb0 != Some(0.0) {
            return Err(LinearError::Mismatch(format!(
                "`{}` solves (a1, b1) = {s:?}, expected homogeneous {base:?}",
                w.family
            )));
        }
        parts.push(w.field.clone());
    }
    let mut formula = psi0.formula.clone();
    for w in w1 {
        formula.push_str(&format!(" + [{}]", w.formula));
    }
    Ok(Solution {
        family: "superposition".into(),
        params: psi0.params.clone(),
        formula,
        f: psi0.f.clone(),
        g: psi0.g.clone(),
        field: Arc::new(SumField { parts }),
        sample: psi0.sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residual::residual_sampled;

    #[test]
    fn series_balance() {
        let (beta, gamma) = series_coeffs(-1.0, 2.0);
        assert_eq!(beta, -0.25);
        assert!((gamma - (-1.0 + 0.5) / 24.0).abs() < 1e-16);
    }

    #[test]
    fn c2_quadratic_exact() {
        let p: BTreeMap<String, f64> = [("a0".to_string(), 2.0), ("b1".to_string(), -1.0)].into();
        let s = particular_solution(ParticularCase::CDoublePrime, &p).unwrap();
        assert_eq!(s.value(1.5, 0.2).unwrap(), 2.0 * 2.25);
        let rep = residual_sampled(&s, 100, 1).unwrap();
        assert_eq!(rep.max_abs, 0.0);
    }

    #[test]
    fn mismatched_superposition() {
        let p: BTreeMap<String, f64> = [("a0".to_string(), 2.0), ("b1".to_string(), -1.0)].into();
        let s = particular_solution(ParticularCase::CDoublePrime, &p).unwrap();
        let w = separable(&SeparableSpec::new(0.0, -2.0, ZKind::Osc { nu: 1.0 }, [1.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(superpose(&s, &[w]).is_err());
    }
}
