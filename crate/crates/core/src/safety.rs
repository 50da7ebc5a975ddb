//! Safety factor `q(psi)` from the contour line integral and, as a
//! cross-check, from the derivative of the enclosed toroidal flux.

use crate::contour::{trace_contour, Polyline};
use crate::fields::FluxProfile;
use crate::grid::{GridField, GridSpec};
use crate::solution::FluxField;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SafetyError {
    #[error("no closed contour around the axis at level {0}")]
    OpenContour(f64),
    #[error("stagnation point on the contour at level {level} near ({r}, {z})")]
    Stagnation { level: f64, r: f64, z: f64 },
    #[error("profile I not defined at psi = {0}")]
    Profile(f64),
    #[error("surface at level {0} leaves the search radius")]
    Ray(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QEntry {
    pub psi: f64,
    /// `(1/2 pi) closed-integral I / (r |grad psi|) dl`.
    pub q: f64,
    /// Grid side length at which the line integral settled.
    pub n_grid: usize,
}

fn project(field: &dyn FluxField, level: f64, p: (f64, f64), axis: (f64, f64)) -> Option<(f64, f64, f64)> {
    let (mut r, mut z) = p;
    // Vertices interpolated against filled samples may sit just outside.
    let mut t = 0.0;
    while !field.contains(r, z) {
        t += 0.01;
        if t > 0.5 {
            return None;
        }
        r = p.0 + t * (axis.0 - p.0);
        z = p.1 + t * (axis.1 - p.1);
    }
    for _ in 0..6 {
        let j = field.jet(r, z).ok()?;
        let g2 = j.d_r * j.d_r + j.d_z * j.d_z;
        if g2 == 0.0 {
            return None;
        }
        let t = (j.value - level) / g2;
        r -= t * j.d_r;
        z -= t * j.d_z;
        if (t * g2.sqrt()).abs() < 1e-15 {
            break;
        }
    }
    let j = field.jet(r, z).ok()?;
    Some((r, z, j.d_r.hypot(j.d_z)))
}

/// Line integral on the closed polyline enclosing `axis`, vertices projected
/// onto the exact level set.
fn line_q(field: &dyn FluxField, i: &FluxProfile, level: f64, pl: &Polyline, axis: (f64, f64)) -> Result<f64, SafetyError> {
    let iv = i.eval(level).map_err(|_| SafetyError::Profile(level))?;
    let mut pts = Vec::with_capacity(pl.points.len());
    let mut gmax = 0.0f64;
    for &p in &pl.points {
        let (r, z, g) = project(field, level, p, axis).ok_or(SafetyError::Stagnation { level, r: p.0, z: p.1 })?;
        gmax = gmax.max(g);
        pts.push((r, z, g));
    }
    if let Some(&(r, z, _)) = pts.iter().find(|(_, _, g)| *g <= 1e-10 * gmax.max(1e-300)) {
        return Err(SafetyError::Stagnation { level, r, z });
    }
    let n = pts.len();
    let mut sum = 0.0;
    for k in 0..n {
        let (a, b) = (pts[k], pts[(k + 1) % n]);
        let dl = (b.0 - a.0).hypot(b.1 - a.1);
        sum += 0.5 * dl * (iv / (a.0 * a.2) + iv / (b.0 * b.2));
    }
    Ok(sum / (2.0 * PI))
}

fn sample(field: &dyn FluxField, spec: GridSpec, outside: Option<f64>) -> GridField {
    GridField::from_fn(spec, |r, z| match field.jet(r, z) {
        Ok(j) => Some(j.value),
        Err(_) => outside,
    })
}

/// Contour safety factor at each level. The sampling grid is refined from
/// `grid` until `q` changes by less than 0.5%. Samples outside the domain
/// take the value `outside` when given (the boundary value of `psi`), so
/// that surfaces hugging the boundary still close.
pub fn safety_factor(
    field: &dyn FluxField,
    i: &FluxProfile,
    levels: &[f64],
    axis: (f64, f64),
    grid: GridSpec,
    outside: Option<f64>,
) -> Result<Vec<QEntry>, SafetyError> {
    let mut grids = vec![sample(field, grid, outside)];
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let mut prev: Option<f64> = None;
        let mut entry = None;
        for g in 0..5 {
            if g == grids.len() {
                let spec = grids[g - 1].spec.refined();
                grids.push(sample(field, spec, outside));
            }
            let set = trace_contour(&grids[g], level);
            let pl = set
                .polylines
                .iter()
                .find(|p| p.encloses(axis))
                .ok_or(SafetyError::OpenContour(level))?;
            let q = line_q(field, i, level, pl, axis)?;
            let done = prev.is_some_and(|p| ((q - p) / p).abs() < 0.005);
            entry = Some(QEntry {
                psi: level,
                q,
                n_grid: grids[g].spec.n_r,
            });
            if done {
                break;
            }
            prev = Some(q);
        }
        out.push(entry.expect("at least one pass"));
    }
    Ok(out)
}

const GL_X: [f64; 10] = [
    -0.973_906_528_517_171_7,
    -0.865_063_366_688_984_5,
    -0.679_409_568_299_024_4,
    -0.433_395_394_129_247_2,
    -0.148_874_338_981_631_2,
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 10] = [
    0.066_671_344_308_688_1,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_0,
    0.269_266_719_309_996_4,
    0.295_524_224_714_752_9,
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Toroidal flux `integral of I(psi)/r dA` over the region `psi > level`
/// (or `< level` for `sign = -1`) around the axis, in polar coordinates
/// centred on it: surfaces must be star-shaped about the axis.
pub fn toroidal_flux(
    field: &dyn FluxField,
    i: &FluxProfile,
    level: f64,
    axis: (f64, f64),
    rho_max: f64,
    sign: f64,
    n_theta: usize,
) -> Result<f64, SafetyError> {
    let inside = |r: f64, z: f64| field.jet(r, z).is_ok_and(|j| sign * (j.value - level) > 0.0);
    let mut total = 0.0;
    for k in 0..n_theta {
        let th = 2.0 * PI * (k as f64 + 0.5) / n_theta as f64;
        let (c, s) = (th.cos(), th.sin());
        // Coarse march outward, then bisection on the first exit.
        let m = 400;
        let mut lo = 0.0;
        let mut hi = None;
        for step in 1..=m {
            let rho = rho_max * step as f64 / m as f64;
            if inside(axis.0 + rho * c, axis.1 + rho * s) {
                lo = rho;
            } else {
                hi = Some(rho);
                break;
            }
        }
        let mut hi = hi.ok_or(SafetyError::Ray(level))?;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(axis.0 + mid * c, axis.1 + mid * s) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rb = 0.5 * (lo + hi);
        // Gauss-Legendre in rho over [0, rb], split in four panels.
        let mut ray = 0.0;
        let panels = 4;
        for p in 0..panels {
            let (a, b) = (rb * p as f64 / panels as f64, rb * (p + 1) as f64 / panels as f64);
            for (x, w) in GL_X.iter().zip(GL_W) {
                let rho = 0.5 * (a + b) + 0.5 * (b - a) * x;
                let (r, z) = (axis.0 + rho * c, axis.1 + rho * s);
                let psi = field.jet(r, z).map(|j| j.value).map_err(|_| SafetyError::Ray(level))?;
                let iv = i.eval(psi).map_err(|_| SafetyError::Profile(psi))?;
                ray += 0.5 * (b - a) * w * iv / r * rho;
            }
        }
        total += ray;
    }
    Ok(total * 2.0 * PI / n_theta as f64)
}

/// Secant safety factor `|dPhi / dpsi| / 2 pi` between adjacent levels,
/// reported at the midpoint level.
pub fn safety_factor_flux(
    field: &dyn FluxField,
    i: &FluxProfile,
    levels: &[f64],
    axis: (f64, f64),
    rho_max: f64,
    sign: f64,
) -> Result<Vec<(f64, f64)>, SafetyError> {
    let phis: Vec<f64> = levels
        .iter()
        .map(|&l| toroidal_flux(field, i, l, axis, rho_max, sign, 256))
        .collect::<Result<_, _>>()?;
    Ok(levels
        .windows(2)
        .zip(phis.windows(2))
        .map(|(l, p)| (0.5 * (l[0] + l[1]), ((p[1] - p[0]) / (l[1] - l[0])).abs() / (2.0 * PI)))
        .collect())
}
