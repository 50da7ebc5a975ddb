//! Grad-Shafranov operator and residuals, exact (jets) and sampled
//! (finite differences).

use crate::grid::GridField;
use crate::profiles::ProfileSpec;
use crate::solution::{FluxField, Jet64, Solution};
use serde::Serialize;
use thiserror::Error;

/// Points with `|psi|` below this are excluded from residual statistics.
pub const DEFAULT_PSI_FLOOR: f64 = 1e-3;
/// Default seed for residual sampling.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("r = {0} is on or beyond the axis")]
    Axis(f64),
    #[error("no point of the sample lies inside the domain")]
    NoPoints,
    #[error("grid too small for a residual ({0} points per side, need 5)")]
    GridTooSmall(usize),
}

/// `psi_rr - psi_r / r + psi_zz`.
pub fn gs_lhs(j: &Jet64, r: f64) -> Result<f64, ResidualError> {
    if r <= 0.0 {
        return Err(ResidualError::Axis(r));
    }
    Ok(j.d_rr - j.d_r / r + j.d_zz)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub r: f64,
    pub z: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub n_points: usize,
    pub max_abs: f64,
    pub rms: f64,
    /// Largest local normalization `max(|LHS|, |r^2 F|, |G|, 1)` seen.
    pub scale: f64,
    /// Largest pointwise `|LHS - RHS| / local scale`.
    pub max_rel: f64,
    /// Points skipped because `|psi|` fell below the floor.
    pub excluded: usize,
    pub failures: Vec<PointFailure>,
}

impl ResidualReport {
    fn from_samples(samples: &[(f64, f64)], excluded: usize, failures: Vec<PointFailure>) -> Self {
        let n = samples.len();
        let mut max_abs = 0.0f64;
        let mut sum2 = 0.0;
        let mut scale = 0.0f64;
        let mut max_rel = 0.0f64;
        for &(res, sc) in samples {
            max_abs = max_abs.max(res);
            sum2 += res * res;
            scale = scale.max(sc);
            max_rel = max_rel.max(res / sc);
        }
        Self {
            n_points: n,
            max_abs,
            rms: if n > 0 { (sum2 / n as f64).sqrt() } else { 0.0 },
            scale,
            max_rel,
            excluded,
            failures,
        }
    }

    /// Relative residual `max_abs / scale`, if defined.
    pub fn relative(&self) -> Option<f64> {
        (self.scale > 0.0).then(|| self.max_abs / self.scale)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.n_points > 0 && self.max_rel <= tol
    }
}

/// `(|LHS - RHS|, local scale)` at a point.
fn pointwise(j: &Jet64, r: f64, f: &ProfileSpec, g: &ProfileSpec) -> Result<(f64, f64), String> {
    let lhs = gs_lhs(j, r).map_err(|e| e.to_string())?;
    let fv = f.eval(j.value).map_err(|e| e.to_string())?;
    let gv = g.eval(j.value).map_err(|e| e.to_string())?;
    let rf = r * r * fv;
    let res = (lhs - rf - gv).abs();
    if !res.is_finite() {
        return Err("non-finite residual".into());
    }
    Ok((res, lhs.abs().max(rf.abs()).max(gv.abs()).max(1.0)))
}

/// Exact-jet residual of a field against `(F, G)` at the given points.
pub fn residual_field(
    field: &dyn FluxField,
    f: &ProfileSpec,
    g: &ProfileSpec,
    points: &[(f64, f64)],
    psi_floor: f64,
) -> Result<ResidualReport, ResidualError> {
    let mut samples = Vec::with_capacity(points.len());
    let mut excluded = 0;
    let mut failures = Vec::new();
    for &(r, z) in points {
        let j = match field.jet(r, z) {
            Ok(j) => j,
            Err(e) => {
                failures.push(PointFailure { r, z, reason: e.to_string() });
                continue;
            }
        };
        if j.value.abs() < psi_floor {
            excluded += 1;
            continue;
        }
        match pointwise(&j, r, f, g) {
            Ok(s) => samples.push(s),
            Err(reason) => failures.push(PointFailure { r, z, reason }),
        }
    }
    if samples.is_empty() {
        return Err(ResidualError::NoPoints);
    }
    Ok(ResidualReport::from_samples(&samples, excluded, failures))
}

/// Residual of a solution against its own profiles at the given points.
pub fn residual(s: &Solution, points: &[(f64, f64)]) -> Result<ResidualReport, ResidualError> {
    residual_field(&*s.field, &s.f, &s.g, points, DEFAULT_PSI_FLOOR)
}

/// Residual at `n` seeded random in-domain points.
pub fn residual_sampled(s: &Solution, n: usize, seed: u64) -> Result<ResidualReport, ResidualError> {
    let pts = s.sample_points(n, seed).map_err(|_| ResidualError::NoPoints)?;
    residual(s, &pts)
}

/// Central-difference residual at grid node `(i, j)`, if the full stencil is valid.
fn fd_at(grid: &GridField, i: usize, j: usize, f: &ProfileSpec, g: &ProfileSpec, psi_floor: f64) -> Option<Result<(f64, f64), ()>> {
    let s = &grid.spec;
    if i == 0 || j == 0 || i + 1 >= s.n_r || j + 1 >= s.n_z {
        return None;
    }
    let c = grid.get(i, j)?;
    let (e, w) = (grid.get(i + 1, j)?, grid.get(i - 1, j)?);
    let (n, so) = (grid.get(i, j + 1)?, grid.get(i, j - 1)?);
    if c.abs() < psi_floor {
        return Some(Err(()));
    }
    let (hr, hz) = (s.h_r(), s.h_z());
    let r = s.r(i);
    if r <= 0.0 {
        return None;
    }
    let psi_rr = (e - 2.0 * c + w) / (hr * hr);
    let psi_r = (e - w) / (2.0 * hr);
    let psi_zz = (n - 2.0 * c + so) / (hz * hz);
    let lhs = psi_rr - psi_r / r + psi_zz;
    let fv = f.eval(c).ok()?;
    let gv = g.eval(c).ok()?;
    let rf = r * r * fv;
    let res = (lhs - rf - gv).abs();
    res.is_finite().then_some(Ok((res, lhs.abs().max(rf.abs()).max(gv.abs()).max(1.0))))
}

/// Finite-difference residual over interior grid points.
pub fn grid_residual(grid: &GridField, f: &ProfileSpec, g: &ProfileSpec) -> Result<ResidualReport, ResidualError> {
    let s = &grid.spec;
    if s.n_r < 5 || s.n_z < 5 {
        return Err(ResidualError::GridTooSmall(s.n_r.min(s.n_z)));
    }
    let mut samples = Vec::new();
    let mut excluded = 0;
    for i in 1..s.n_r - 1 {
        for j in 1..s.n_z - 1 {
            match fd_at(grid, i, j, f, g, DEFAULT_PSI_FLOOR) {
                Some(Ok(v)) => samples.push(v),
                Some(Err(())) => excluded += 1,
                None => {}
            }
        }
    }
    if samples.is_empty() {
        return Err(ResidualError::NoPoints);
    }
    Ok(ResidualReport::from_samples(&samples, excluded, Vec::new()))
}

/// Observed order from a grid and its refinement (`fine` has half the
/// spacing), comparing RMS residuals at the coarse nodes shared by both.
pub fn convergence_order(coarse: &GridField, fine: &GridField, f: &ProfileSpec, g: &ProfileSpec) -> Result<f64, ResidualError> {
    let cs = &coarse.spec;
    if fine.spec.n_r != 2 * cs.n_r - 1 || fine.spec.n_z != 2 * cs.n_z - 1 {
        return Err(ResidualError::GridTooSmall(fine.spec.n_r));
    }
    let (mut sc, mut sf, mut n) = (0.0, 0.0, 0usize);
    for i in 1..cs.n_r - 1 {
        for j in 1..cs.n_z - 1 {
            let a = fd_at(coarse, i, j, f, g, DEFAULT_PSI_FLOOR);
            let b = fd_at(fine, 2 * i, 2 * j, f, g, DEFAULT_PSI_FLOOR);
            if let (Some(Ok((ra, _))), Some(Ok((rb, _)))) = (a, b) {
                sc += ra * ra;
                sf += rb * rb;
                n += 1;
            }
        }
    }
    if n == 0 || sf == 0.0 {
        return Err(ResidualError::NoPoints);
    }
    Ok(0.5 * (sc / sf).log2())
}

/// Residual report plus observed order for a field sampled at `spec` and its refinement.
pub fn grid_residual_study(
    sample: impl Fn(crate::grid::GridSpec) -> GridField,
    spec: crate::grid::GridSpec,
    f: &ProfileSpec,
    g: &ProfileSpec,
) -> Result<(ResidualReport, f64), ResidualError> {
    let coarse = sample(spec);
    let fine = sample(spec.refined());
    let report = grid_residual(&fine, f, g)?;
    let order = convergence_order(&coarse, &fine, f, g)?;
    Ok((report, order))
}
