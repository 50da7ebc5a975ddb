//! Symmetry reductions of the GS equation to ODEs in an invariant
//! variable, their integration, and reconstruction of `psi(r, z)`.

use crate::grid::{GridField, GridSpec};
use crate::jet::Jet;
use crate::ode::{dopri5, quintic_hermite, MonotoneCubic, OdeError, OdeOptions, OdeTable};
use crate::profiles::{ProfileSpec, SymmetryClass, Tag};
use crate::solution::{FieldError, FluxField, Jet64, SampleBox, Solution};
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReducedKind {
    /// `psi = r^{-2q} w(y) - c`, `y = r/z`.
    X1Similarity,
    /// `psi = sqrt(r) w(y) - c`, `y = r/(r^2 + z^2)`.
    Exceptional,
    /// `psi = -(2/c) log r + w(y)`, `y = r/z`.
    ExpCase,
    /// `psi = W(s)`, `s = r^2/2 - kappa z`.
    CondKappa,
    /// `psi = W(s)`, `s = r^2 + z^2`.
    Rot,
    /// `psi = W(u)`, `u = sigma r^2 + z^2`, split into two equations.
    WeakPair,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error("no reduction: {0}")]
    NoReduction(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("bad span: {0}")]
    Span(String),
    #[error("no grid point maps into the table span")]
    EmptyOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedOde {
    pub kind: ReducedKind,
    pub q: f64,
    pub c: f64,
    pub kappa: f64,
    pub sigma: f64,
    #[serde(skip)]
    pub f: ProfileSpec,
    #[serde(skip)]
    pub g: ProfileSpec,
}

/// Builds the reduced ODE for a symmetry class of `(F, G)`.
pub fn reduce(class: &SymmetryClass, f: &ProfileSpec, g: &ProfileSpec) -> Result<ReducedOde, ReduceError> {
    let p = class.params;
    let base = |kind| ReducedOde {
        kind,
        q: p.q.unwrap_or(0.0),
        c: p.c.unwrap_or(0.0),
        kappa: p.kappa.unwrap_or(0.0),
        sigma: p.sigma.unwrap_or(0.0),
        f: f.clone(),
        g: g.clone(),
    };
    match class.tag {
        Tag::A | Tag::APrime => {
            if p.q.is_none() {
                return Err(ReduceError::NoReduction("power class without q".into()));
            }
            Ok(base(ReducedKind::X1Similarity))
        }
        Tag::ADoublePrime => Ok(base(ReducedKind::Exceptional)),
        Tag::B => match p.c {
            Some(c) if c != 0.0 => Ok(base(ReducedKind::ExpCase)),
            _ => Err(ReduceError::NoReduction("exponential class needs c != 0".into())),
        },
        Tag::ConditionalKappa => Ok(base(ReducedKind::CondKappa)),
        Tag::ConditionalRotation => Ok(base(ReducedKind::Rot)),
        Tag::WeakSigma => match p.sigma {
            Some(s) if s != 0.0 && s != 1.0 => Ok(base(ReducedKind::WeakPair)),
            _ => Err(ReduceError::NoReduction("weak class needs sigma outside {0, 1}".into())),
        },
        Tag::None | Tag::D => Err(ReduceError::NoReduction(format!("class `{}` admits no reduction", class.tag))),
        _ => Err(ReduceError::NoReduction(format!(
            "class `{}` is linear; use the separable solver",
            class.tag
        ))),
    }
}

/// Initial data for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    /// `(t0, w, w')`.
    Values { t0: f64, w: f64, dw: f64 },
    /// Power-law start `w = eps^m`, `w' = m eps^{m-1}` near the singular point.
    Branch { m: f64, eps: f64 },
}

impl Start {
    /// The `w ~ y^{2q+2}` branch of the similarity reduction, `f(0) = 1, f'(0) = 0`.
    pub fn regular(q: f64, eps: f64) -> Self {
        Start::Branch { m: 2.0 * q + 2.0, eps }
    }

    /// The `w ~ y^{2q}` branch.
    pub fn singular(q: f64, eps: f64) -> Self {
        Start::Branch { m: 2.0 * q, eps }
    }
}

fn nan2() -> [f64; 2] {
    [f64::NAN, f64::NAN]
}

impl ReducedOde {
    /// `F` and `G` at the reduced unknown, after undoing the shift.
    fn fg(&self, w: f64) -> Option<(f64, f64)> {
        let psi = match self.kind {
            ReducedKind::X1Similarity | ReducedKind::Exceptional => w - self.c,
            _ => w,
        };
        Some((self.f.eval(psi).ok()?, self.g.eval(psi).ok()?))
    }

    /// Left side minus right side of the reduced equation (the first one for
    /// the weak pair).
    pub fn residual(&self, t: f64, w: f64, dw: f64, d2w: f64) -> Option<f64> {
        let (fv, gv) = self.fg(w)?;
        let q = self.q;
        Some(match self.kind {
            ReducedKind::X1Similarity => {
                d2w * (t * t + t.powi(4)) + dw * (2.0 * t.powi(3) - 4.0 * q * t - t) + 4.0 * q * (q + 1.0) * w - fv - gv
            }
            ReducedKind::Exceptional => d2w * t * t - 0.75 * w - fv - gv,
            ReducedKind::ExpCase => d2w * (t * t + t.powi(4)) + dw * (2.0 * t.powi(3) - t) + 4.0 / self.c - fv - gv,
            ReducedKind::CondKappa => d2w - fv,
            ReducedKind::Rot => 4.0 * t * d2w + 2.0 * dw - gv,
            ReducedKind::WeakPair => 4.0 * (self.sigma * self.sigma - self.sigma) * d2w - fv,
        })
    }

    /// Second equation of the weak pair, `4u W'' + 2W' - G(W)`.
    pub fn second_residual(&self, t: f64, w: f64, dw: f64, d2w: f64) -> Option<f64> {
        if self.kind != ReducedKind::WeakPair {
            return None;
        }
        let (_, gv) = self.fg(w)?;
        Some(4.0 * t * d2w + 2.0 * dw - gv)
    }

    /// Left side of the similarity equation alone (no profile terms).
    pub fn lhs_homogeneous(&self, t: f64, w: f64, dw: f64, d2w: f64) -> f64 {
        let q = self.q;
        d2w * (t * t + t.powi(4)) + dw * (2.0 * t.powi(3) - 4.0 * q * t - t) + 4.0 * q * (q + 1.0) * w
    }

    /// `w''` solved from the equation.
    pub fn rhs(&self, t: f64, u: &[f64; 2]) -> [f64; 2] {
        let (w, dw) = (u[0], u[1]);
        let Some((fv, gv)) = self.fg(w) else {
            return nan2();
        };
        let q = self.q;
        let d2w = match self.kind {
            ReducedKind::X1Similarity => {
                (fv + gv - 4.0 * q * (q + 1.0) * w - dw * (2.0 * t.powi(3) - 4.0 * q * t - t)) / (t * t + t.powi(4))
            }
            ReducedKind::Exceptional => (fv + gv + 0.75 * w) / (t * t),
            ReducedKind::ExpCase => (fv + gv - 4.0 / self.c - dw * (2.0 * t.powi(3) - t)) / (t * t + t.powi(4)),
            ReducedKind::CondKappa => fv,
            ReducedKind::Rot => (gv - 2.0 * dw) / (4.0 * t),
            ReducedKind::WeakPair => fv / (4.0 * (self.sigma * self.sigma - self.sigma)),
        };
        [dw, d2w]
    }

    /// Singular points of the equation, which spans must avoid.
    fn singular(&self, t: f64) -> bool {
        match self.kind {
            ReducedKind::X1Similarity | ReducedKind::Exceptional | ReducedKind::ExpCase | ReducedKind::Rot => t == 0.0,
            _ => false,
        }
    }

    /// Invariant variable at `(r, z)`. The `r/z` reductions are even in `y`,
    /// so the lower half-plane uses `|y|`; `z = 0` is excluded.
    pub fn invariant(&self, r: f64, z: f64) -> Option<f64> {
        if r <= 0.0 {
            return None;
        }
        match self.kind {
            ReducedKind::X1Similarity | ReducedKind::ExpCase => (z != 0.0).then(|| r / z.abs()),
            ReducedKind::Exceptional => Some(r / (r * r + z * z)),
            ReducedKind::CondKappa => Some(0.5 * r * r - self.kappa * z),
            ReducedKind::Rot => Some(r * r + z * z),
            ReducedKind::WeakPair => Some(self.sigma * r * r + z * z),
        }
    }

    /// Jet of the invariant variable.
    fn invariant_jet(&self, r: f64, z: f64) -> Jet64 {
        let (jr, jz) = Jet::seed(r, z);
        match self.kind {
            ReducedKind::X1Similarity | ReducedKind::ExpCase => jr * (jz * z.signum()).recip(),
            ReducedKind::Exceptional => jr * (jr * jr + jz * jz).recip(),
            ReducedKind::CondKappa => jr * jr * 0.5 - jz * self.kappa,
            ReducedKind::Rot => jr * jr + jz * jz,
            ReducedKind::WeakPair => jr * jr * self.sigma + jz * jz,
        }
    }

    /// `psi` from the reduced unknown at `(r, z)`.
    pub fn psi_from(&self, r: f64, w: f64) -> f64 {
        match self.kind {
            ReducedKind::X1Similarity => r.powf(-2.0 * self.q) * w - self.c,
            ReducedKind::Exceptional => r.sqrt() * w - self.c,
            ReducedKind::ExpCase => -(2.0 / self.c) * r.ln() + w,
            _ => w,
        }
    }

    fn psi_jet(&self, r: f64, z: f64, wj: Jet64) -> Jet64 {
        let (jr, _) = Jet::seed(r, z);
        match self.kind {
            ReducedKind::X1Similarity => jr.powf(-2.0 * self.q) * wj - self.c,
            ReducedKind::Exceptional => jr.sqrt() * wj - self.c,
            ReducedKind::ExpCase => jr.ln() * (-2.0 / self.c) + wj,
            _ => wj,
        }
    }
}

pub type ReducedTable = OdeTable<f64, 2>;

/// Largest cubic-Hermite residual `|p' - f(t, p)|` at interval midpoints,
/// relative to `tol (1 + |f|)`.
pub fn midpoint_residual_ratio(ode: &ReducedOde, tab: &ReducedTable) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..tab.len().saturating_sub(1) {
        let tm = 0.5 * (tab.t[k] + tab.t[k + 1]);
        let Some((p, dp)) = tab.hermite(tm) else { continue };
        let fv = ode.rhs(tm, &p);
        for i in 0..2 {
            let ratio = (dp[i] - fv[i]).abs() / (tab.tol * (1.0 + fv[i].abs()));
            worst = worst.max(if ratio.is_nan() { f64::INFINITY } else { ratio });
        }
    }
    worst
}

/// Adaptive integration followed by `h_max` halving until the cubic-Hermite
/// dense output has midpoint residual within `100 tol`.
fn leg(ode: &ReducedOde, t0: f64, y0: [f64; 2], t1: f64, tol: f64, atol: f64) -> Result<ReducedTable, ReduceError> {
    let mut opts = OdeOptions::<f64>::new(tol)?;
    opts.atol = atol;
    let mut tab = dopri5(|t, u| ode.rhs(t, u), t0, y0, t1, &opts)?;
    for _ in 0..16 {
        if midpoint_residual_ratio(ode, &tab) <= 100.0 {
            break;
        }
        let h = tab.t.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        opts = opts.with_h_max(0.5 * h);
        tab = dopri5(|t, u| ode.rhs(t, u), t0, y0, t1, &opts)?;
    }
    Ok(tab)
}

/// Integrates the reduced equation over `span`. A `Values` start inside the
/// span is integrated both ways; a `Branch` start begins at `eps` and runs to
/// the far end of the span.
pub fn integrate(ode: &ReducedOde, start: Start, span: (f64, f64), tol: f64) -> Result<ReducedTable, ReduceError> {
    let (lo, hi) = span;
    if !(lo < hi) {
        return Err(ReduceError::Span(format!("[{lo}, {hi}] is empty")));
    }
    if ode.singular(lo) || ode.singular(hi) || (lo < 0.0 && hi > 0.0 && ode.singular(0.0)) {
        return Err(ReduceError::Span(format!("[{lo}, {hi}] touches the singular point t = 0")));
    }
    match start {
        Start::Branch { m, eps } => {
            if !(eps > 0.0) {
                return Err(ReduceError::Span(format!("eps = {eps}")));
            }
            let y0 = [eps.powf(m), m * eps.powf(m - 1.0)];
            let end = if (eps - lo).abs() <= (eps - hi).abs() { hi } else { lo };
            // The start value is tiny; an absolute floor of `tol` would let
            // the other branch in at that level.
            let atol = (tol * y0[0].abs()).max(f64::MIN_POSITIVE);
            leg(ode, eps, y0, end, tol, atol)
        }
        Start::Values { t0, w, dw } => {
            if !(lo..=hi).contains(&t0) {
                return Err(ReduceError::Span(format!("start {t0} outside [{lo}, {hi}]")));
            }
            let y0 = [w, dw];
            let fwd = (t0 < hi).then(|| leg(ode, t0, y0, hi, tol, tol)).transpose()?;
            let bwd = (t0 > lo).then(|| leg(ode, t0, y0, lo, tol, tol)).transpose()?;
            Ok(match (bwd, fwd) {
                (Some(mut b), Some(f)) => {
                    let truncated = b.truncated || f.truncated;
                    b.t.extend_from_slice(&f.t[1..]);
                    b.y.extend_from_slice(&f.y[1..]);
                    b.dy.extend_from_slice(&f.dy[1..]);
                    b.stats.steps += f.stats.steps;
                    b.stats.rejected += f.stats.rejected;
                    b.stats.evaluations += f.stats.evaluations;
                    b.truncated = truncated;
                    b
                }
                (Some(t), None) | (None, Some(t)) => t,
                (None, None) => unreachable!(),
            })
        }
    }
}

/// A table sampled from known `(w, w', w'')` functions, for exact comparisons.
pub fn table_from_fn(ts: &[f64], w: impl Fn(f64) -> (f64, f64, f64)) -> ReducedTable {
    let (mut y, mut dy) = (Vec::new(), Vec::new());
    for &t in ts {
        let (a, b, c) = w(t);
        y.push([a, b]);
        dy.push([b, c]);
    }
    OdeTable {
        t: ts.to_vec(),
        y,
        dy,
        stats: Default::default(),
        tol: 0.0,
        truncated: false,
    }
}

/// Samples `psi` on a grid by monotone cubic interpolation of the table.
pub fn reconstruct(ode: &ReducedOde, tab: &ReducedTable, grid: GridSpec) -> Result<GridField, ReduceError> {
    let xs = tab.t.clone();
    let ws: Vec<f64> = tab.y.iter().map(|u| u[0]).collect();
    let ms: Vec<f64> = tab.y.iter().map(|u| u[1]).collect();
    let interp = MonotoneCubic::new(xs, ws, Some(ms)).ok_or_else(|| ReduceError::Span("table has fewer than two samples".into()))?;
    let field = GridField::from_fn(grid, |r, z| {
        let t = ode.invariant(r, z)?;
        let w = interp.eval(t)?;
        Some(ode.psi_from(r, w))
    });
    if field.valid_count() == 0 {
        return Err(ReduceError::EmptyOverlap);
    }
    Ok(field)
}

/// A reconstructed flux field with exact jets of the quintic Hermite
/// interpolant of the table.
#[derive(Debug, Clone)]
pub struct TableField {
    pub ode: ReducedOde,
    pub table: Arc<ReducedTable>,
}

impl TableField {
    fn w3(&self, t: f64) -> Option<(f64, f64, f64)> {
        let tab = &self.table;
        let k = tab.locate(t)?;
        let a = (tab.y[k][0], tab.y[k][1], tab.dy[k][1]);
        let b = (tab.y[k + 1][0], tab.y[k + 1][1], tab.dy[k + 1][1]);
        Some(quintic_hermite(t, tab.t[k], tab.t[k + 1], a, b))
    }
}

impl FluxField for TableField {
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        let t = self.ode.invariant(r, z).ok_or(FieldError::OutOfDomain { r, z })?;
        let (w, dw, d2w) = self.w3(t).ok_or(FieldError::OutOfDomain { r, z })?;
        let wj = self.ode.invariant_jet(r, z).chain(w, dw, d2w);
        Ok(self.ode.psi_jet(r, z, wj))
    }

    fn contains(&self, r: f64, z: f64) -> bool {
        self.ode.invariant(r, z).is_some_and(|t| self.table.contains(t))
    }
}

/// Wraps a reconstructed field as a solution of `(F, G)`.
pub fn table_solution(ode: &ReducedOde, tab: ReducedTable, sample: SampleBox) -> Solution {
    let mut params = std::collections::BTreeMap::new();
    for (k, v) in [("q", ode.q), ("c", ode.c), ("kappa", ode.kappa), ("sigma", ode.sigma)] {
        params.insert(k.to_string(), v);
    }
    Solution {
        family: format!("reduced({:?})", ode.kind),
        params,
        formula: format!("{:?} reconstruction", ode.kind),
        f: ode.f.clone(),
        g: ode.g.clone(),
        field: Arc::new(TableField {
            ode: ode.clone(),
            table: Arc::new(tab),
        }),
        sample,
    }
}

/// Largest `|4u W'' + 2W' - G(W)|` over the table nodes of a weak-pair run.
pub fn weak_pair_compatibility(ode: &ReducedOde, tab: &ReducedTable) -> Option<f64> {
    let mut worst = 0.0f64;
    for k in 0..tab.len() {
        let r = ode.second_residual(tab.t[k], tab.y[k][0], tab.y[k][1], tab.dy[k][1])?;
        worst = worst.max(r.abs());
    }
    Some(worst)
}
