//! Finite group actions mapping solutions to solutions.

use crate::jet::Jet;
use crate::profiles::{classify, Tag};
use crate::solution::{FieldError, FluxField, Jet64, SampleBox, Solution};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("class mismatch: {0}")]
    ClassMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Power-family `(q, c)` of the solution's profile pair, if any.
fn power_class(s: &Solution) -> Option<(f64, f64)> {
    classify(&s.f, &s.g)
        .into_iter()
        .find(|c| c.tag.is_power_family())
        .and_then(|c| Some((c.params.q?, c.params.c?)))
}

/// `psi~(r, z) = K psi(L r, L z) + c (K - 1)`, `L = e^lambda`, `K = e^{2 lambda q}`.
#[derive(Debug)]
struct ScaledField {
    inner: Arc<dyn FluxField>,
    l: f64,
    k: f64,
    c: f64,
}

impl FluxField for ScaledField {
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        if !self.contains(r, z) {
            return Err(FieldError::OutOfDomain { r, z });
        }
        let (jr, jz) = Jet::seed(r, z);
        let outer = self.inner.jet(self.l * r, self.l * z)?;
        let j = Jet::compose(outer, jr * self.l, jz * self.l);
        Ok(j * self.k + self.c * (self.k - 1.0))
    }

    fn contains(&self, r: f64, z: f64) -> bool {
        self.inner.contains(self.l * r, self.l * z)
    }
}

pub fn scaling_map(s: &Solution, lambda: f64, q: f64, c: f64) -> Result<Solution, MapError> {
    match power_class(s) {
        Some((sq, sc)) if close(sq, q) && close(sc, c) => {}
        Some((sq, sc)) => {
            return Err(MapError::ClassMismatch(format!(
                "solution profiles have q = {sq}, c = {sc}; requested q = {q}, c = {c}"
            )))
        }
        None => {
            return Err(MapError::ClassMismatch(format!(
                "profiles of `{}` are not in the shifted power family",
                s.family
            )))
        }
    }
    if !lambda.is_finite() {
        return Err(MapError::InvalidParameter(format!("lambda = {lambda}")));
    }
    let l = lambda.exp();
    let field = ScaledField {
        inner: s.field.clone(),
        l,
        k: (2.0 * lambda * q).exp(),
        c,
    };
    let mut params = s.params.clone();
    params.insert("map_lambda".into(), lambda);
    Ok(Solution {
        family: format!("scaled({})", s.family),
        params,
        formula: format!("e^(2 lambda q) psi(e^lambda r, e^lambda z) + c (e^(2 lambda q) - 1) of [{}]", s.formula),
        f: s.f.clone(),
        g: s.g.clone(),
        field: Arc::new(field),
        sample: s.sample.scaled(1.0 / l),
    })
}

/// `psi~ = C^{1/2} (psi(r~, z~) + c) - c`, `C = 1 + lambda^2 (r^2 + z^2) + 2 lambda z`,
/// `r~ = r / C`, `z~ = (z + lambda (r^2 + z^2)) / C`.
#[derive(Debug)]
struct ExceptionalField {
    inner: Arc<dyn FluxField>,
    lambda: f64,
    c: f64,
}

impl ExceptionalField {
    fn point(&self, r: f64, z: f64) -> Option<(f64, f64, f64)> {
        let rho2 = r * r + z * z;
        let cc = 1.0 + self.lambda * self.lambda * rho2 + 2.0 * self.lambda * z;
        (cc > 0.0).then(|| (cc, r / cc, (z + self.lambda * rho2) / cc))
    }
}

impl FluxField for ExceptionalField {
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        let Some((_, rt, zt)) = self.point(r, z) else {
            return Err(FieldError::OutOfDomain { r, z });
        };
        if !self.inner.contains(rt, zt) {
            return Err(FieldError::OutOfDomain { r, z });
        }
        let (jr, jz) = Jet::seed(r, z);
        let rho2 = jr * jr + jz * jz;
        let cc = rho2 * (self.lambda * self.lambda) + jz * (2.0 * self.lambda) + 1.0;
        let inv = cc.recip();
        let u = jr * inv;
        let v = (jz + rho2 * self.lambda) * inv;
        let outer = self.inner.jet(rt, zt)?;
        let composed = Jet::compose(outer, u, v);
        Ok((composed + self.c) * cc.sqrt() - self.c)
    }

    fn contains(&self, r: f64, z: f64) -> bool {
        self.point(r, z)
            .is_some_and(|(_, rt, zt)| self.inner.contains(rt, zt))
    }
}

/// Bounding box of the image domain: in-domain grid points of the old box
/// pushed through the inverse point map (the same map at `-lambda`).
fn exceptional_box(field: &dyn FluxField, bx: SampleBox, lambda: f64) -> SampleBox {
    let n = 200;
    let (mut r0, mut r1, mut z0, mut z1) = (f64::INFINITY, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            let r = bx.r.0 + (bx.r.1 - bx.r.0) * i as f64 / n as f64;
            let z = bx.z.0 + (bx.z.1 - bx.z.0) * j as f64 / n as f64;
            if !field.contains(r, z) {
                continue;
            }
            let rho2 = r * r + z * z;
            let cc = 1.0 + lambda * lambda * rho2 - 2.0 * lambda * z;
            if cc <= 1e-3 {
                continue;
            }
            let (u, v) = (r / cc, (z - lambda * rho2) / cc);
            r0 = r0.min(u);
            r1 = r1.max(u);
            z0 = z0.min(v);
            z1 = z1.max(v);
        }
    }
    if !(r0 < r1 && z0 < z1) {
        return bx;
    }
    let (mr, mz) = (0.02 * (r1 - r0), 0.02 * (z1 - z0));
    SampleBox::new(((r0 - mr).max(0.0), r1 + mr), (z0 - mz, z1 + mz))
}

pub fn exceptional_map(s: &Solution, lambda: f64) -> Result<Solution, MapError> {
    let c = match power_class(s) {
        Some((q, c)) if close(q, -0.25) => c,
        _ => {
            return Err(MapError::ClassMismatch(format!(
                "`{}` does not solve an exceptional-case (q = -1/4) equation",
                s.family
            )))
        }
    };
    if !lambda.is_finite() {
        return Err(MapError::InvalidParameter(format!("lambda = {lambda}")));
    }
    let mut params = s.params.clone();
    params.insert("map_lambda".into(), lambda);
    Ok(Solution {
        family: format!("exceptional({})", s.family),
        params,
        formula: format!("C^(1/2) (psi(r/C, (z + lambda rho^2)/C) + c) - c of [{}]", s.formula),
        f: s.f.clone(),
        g: s.g.clone(),
        field: Arc::new(ExceptionalField {
            inner: s.field.clone(),
            lambda,
            c,
        }),
        sample: exceptional_box(&*s.field, s.sample, lambda),
    })
}

/// `psi~ = psi(r e^lambda, z e^lambda) + 2 lambda / c`.
#[derive(Debug)]
struct ExpShiftField {
    inner: Arc<dyn FluxField>,
    l: f64,
    shift: f64,
}

impl FluxField for ExpShiftField {
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        if !self.contains(r, z) {
            return Err(FieldError::OutOfDomain { r, z });
        }
        let (jr, jz) = Jet::seed(r, z);
        let outer = self.inner.jet(self.l * r, self.l * z)?;
        Ok(Jet::compose(outer, jr * self.l, jz * self.l) + self.shift)
    }

    fn contains(&self, r: f64, z: f64) -> bool {
        self.inner.contains(self.l * r, self.l * z)
    }
}

pub fn exp_case_map(s: &Solution, lambda: f64) -> Result<Solution, MapError> {
    let c = classify(&s.f, &s.g)
        .into_iter()
        .find(|k| k.tag == Tag::B)
        .and_then(|k| k.params.c)
        .filter(|c| *c != 0.0)
        .ok_or_else(|| MapError::ClassMismatch(format!("`{}` does not solve an exponential-case equation", s.family)))?;
    if !lambda.is_finite() {
        return Err(MapError::InvalidParameter(format!("lambda = {lambda}")));
    }
    let l = lambda.exp();
    let mut params = s.params.clone();
    params.insert("map_lambda".into(), lambda);
    Ok(Solution {
        family: format!("exp-shift({})", s.family),
        params,
        formula: format!("psi(r e^lambda, z e^lambda) + 2 lambda / c of [{}]", s.formula),
        f: s.f.clone(),
        g: s.g.clone(),
        field: Arc::new(ExpShiftField {
            inner: s.field.clone(),
            l,
            shift: 2.0 * lambda / c,
        }),
        sample: s.sample.scaled(1.0 / l),
    })
}
