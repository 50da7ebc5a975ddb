//! Magnetic field components, pressure and azimuthal-field profiles, and
//! the magnetic axis.

use crate::expr::{DomainError, Expr, Var};
use crate::jet::Jet;
use crate::profiles::approx_number;
use crate::solution::{FieldError, FluxField};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldsError {
    #[error("r = {0} is on or beyond the axis")]
    Axis(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("I^2 = {i2} < 0 at psi = {psi}")]
    NegativeI2 { psi: f64, i2: f64 },
    #[error("magnetic axis search failed: {0}")]
    Axis2(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldTriple {
    pub b_r: f64,
    pub b_phi: f64,
    pub b_z: f64,
}

/// A flux function `I(psi)` or `p(psi)` given as an expression in `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxProfile {
    pub expr: Expr,
}

impl FluxProfile {
    pub fn new(expr: Expr) -> Self {
        Self { expr }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(Expr::Num(approx_number(v)))
    }

    pub fn eval(&self, psi: f64) -> Result<f64, DomainError> {
        self.expr.eval_psi(psi)
    }

    /// `(value, d/dpsi)` through a jet seeded in `psi`.
    pub fn eval_d(&self, psi: f64) -> Result<(f64, f64), DomainError> {
        let j = self
            .expr
            .eval_with::<f64, Jet<f64>>(Jet::constant(0.0), Jet::constant(0.0), Jet::r(psi))?;
        Ok((j.value, j.d_r))
    }

    pub fn derivative(&self) -> FluxProfile {
        FluxProfile::new(self.expr.diff(Var::Psi))
    }
}

/// `B = (-psi_z / r, I(psi) / r, psi_r / r)`.
pub fn b_field(field: &dyn FluxField, i: &FluxProfile, r: f64, z: f64) -> Result<FieldTriple, FieldsError> {
    if r <= 0.0 {
        return Err(FieldsError::Axis(r));
    }
    let j = field.jet(r, z)?;
    Ok(FieldTriple {
        b_r: -j.d_z / r,
        b_phi: i.eval(j.value)? / r,
        b_z: j.d_r / r,
    })
}

/// `(1/r) d(r B_r)/dr + dB_z/dz` from the jet's mixed partials.
pub fn divergence(field: &dyn FluxField, r: f64, z: f64) -> Result<f64, FieldsError> {
    if r <= 0.0 {
        return Err(FieldsError::Axis(r));
    }
    let j = field.jet(r, z)?;
    // r B_r = -psi_z, B_z = psi_r / r.
    Ok(-j.d_rz / r + j.d_rz / r)
}

/// `p = p0 + (a / 24 pi) psi^-6`, `I = sign sqrt(I0^2 + b psi^-2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureCurrent {
    pub a: f64,
    pub b: f64,
    pub p0: f64,
    pub i0: f64,
    pub sign: f64,
    pub p: FluxProfile,
    pub i: FluxProfile,
}

fn k(x: f64) -> Expr {
    Expr::Num(approx_number(x))
}

pub fn p_and_i_maps(a: f64, b: f64, p0: f64, i0: f64) -> PressureCurrent {
    p_and_i_maps_signed(a, b, p0, i0, 1.0)
}

pub fn p_and_i_maps_signed(a: f64, b: f64, p0: f64, i0: f64, sign: f64) -> PressureCurrent {
    let psi = Expr::psi;
    let p = FluxProfile::new(k(p0) + k(a / (24.0 * PI)) * psi().powi(-6));
    let i2 = if b == 0.0 {
        k(i0 * i0)
    } else {
        k(i0 * i0) + k(b) * psi().powi(-2)
    };
    let i = FluxProfile::new(k(sign.signum()) * i2.sqrt());
    PressureCurrent {
        a,
        b,
        p0,
        i0,
        sign: sign.signum(),
        p,
        i,
    }
}

impl PressureCurrent {
    pub fn i2(&self, psi: f64) -> f64 {
        self.i0 * self.i0 + self.b / (psi * psi)
    }

    pub fn pressure(&self, psi: f64) -> Result<f64, FieldsError> {
        Ok(self.p.eval(psi)?)
    }

    pub fn current(&self, psi: f64) -> Result<f64, FieldsError> {
        let i2 = self.i2(psi);
        if i2 < 0.0 {
            return Err(FieldsError::NegativeI2 { psi, i2 });
        }
        Ok(self.sign * i2.sqrt())
    }
}

/// `p0` making `p(psi0) = 0`.
pub fn p0_for_boundary(a: f64, psi0: f64) -> f64 {
    -(a / (24.0 * PI)) * psi0.powi(-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub r: f64,
    pub z: f64,
    pub psi: f64,
}

/// Interior extremum of `sign * psi` (sign = 1 for a maximum) near `start`:
/// compass pattern search, then damped Newton steps with exact jets.
pub fn magnetic_axis(field: &dyn FluxField, start: (f64, f64), step: f64, sign: f64) -> Result<Axis, FieldsError> {
    let val = |r: f64, z: f64| -> Option<f64> { field.jet(r, z).ok().map(|j| sign * j.value) };
    let (mut r, mut z) = start;
    let mut best = val(r, z).ok_or_else(|| FieldsError::Axis2(format!("start ({r}, {z}) outside the domain")))?;
    let mut h = step;
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    while h > 1e-6 * step {
        let mut moved = false;
        for (dr, dz) in dirs {
            let (rn, zn) = (r + h * dr, z + h * dz);
            if let Some(v) = val(rn, zn) {
                if v > best {
                    best = v;
                    r = rn;
                    z = zn;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    for _ in 0..20 {
        let j = field.jet(r, z)?;
        let (g1, g2) = (j.d_r, j.d_z);
        let (a, b, c) = (j.d_rr, j.d_rz, j.d_zz);
        let det = a * c - b * b;
        if det == 0.0 {
            break;
        }
        let dr = (c * g1 - b * g2) / det;
        let dz = (a * g2 - b * g1) / det;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-4 {
            let (rn, zn) = (r - t * dr, z - t * dz);
            if let Some(jn) = field.jet(rn, zn).ok() {
                if jn.d_r.hypot(jn.d_z) < g1.hypot(g2) {
                    r = rn;
                    z = zn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted || (dr.hypot(dz) * t) < 1e-15 {
            break;
        }
    }
    let j = field.jet(r, z)?;
    if sign * j.d_rr >= 0.0 || sign * j.d_zz >= 0.0 {
        return Err(FieldsError::Axis2(format!("({r}, {z}) is not a strict extremum")));
    }
    Ok(Axis { r, z, psi: j.value })
}
