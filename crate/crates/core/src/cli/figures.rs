//! Data for the four figures.

use super::emit::{grid_csv, table_csv, Emission};
use super::{
    eps_drift, fields_csv, power_profiles, profiles_for, run_reduction, solution_emission, CliError, CliResult, Figure,
};
use crate::catalog::{dshape_boundary, instantiate, Family, Params};
use crate::fields::magnetic_axis;
use crate::grid::GridSpec;
use crate::linear::{separable, SeparableSpec, ZKind};
use crate::profiles::Tag;
use crate::reductions::Start;
use crate::safety::{safety_factor, safety_factor_flux};
use crate::solution::{SampleBox, Solution};
use serde_json::json;
use std::f64::consts::PI;

/// Plasma border of the fourth figure.
pub const FIG4_PSI0: f64 = 0.4;
/// Number of flux levels between the axis and the border in the q table.
pub const FIG4_LEVELS: usize = 10;

pub fn cmd_figure(which: Figure, n: usize, seed: u64) -> CliResult<Vec<Emission>> {
    match which {
        Figure::Fig1 => fig1(n),
        Figure::Fig2 => fig2(n, seed),
        Figure::Fig3 => fig3(n, seed),
        Figure::Fig4 => fig4(n, seed),
    }
}

fn spec(bx: SampleBox, n: usize) -> CliResult<GridSpec> {
    GridSpec::new(bx.r, bx.z, n, n).map_err(|e| CliError::parse(e.to_string()))
}

fn fig1(n: usize) -> CliResult<Vec<Emission>> {
    let (q, eps, hi, tol) = (1.0, 1e-3, 5.0, 1e-10);
    let (f, g) = power_profiles(q, -1.0, 1.0)?;
    let grid = spec(SampleBox::new((0.05, 2.0), (-2.0, 2.0)), n)?;
    let start = Start::regular(q, eps);
    let red = run_reduction(Tag::A, f, g, start, (eps, hi), tol, grid)?;
    let mut meta = red.meta.clone();
    meta["figure"] = "fig1".into();
    meta["parameters"] = json!({ "q": q, "a": -1.0, "b": 1.0, "eps": eps });
    meta["eps_half_drift_at_1"] = json!(eps_drift(&red.ode, 2.0 * q + 2.0, eps, hi, tol));
    Ok(vec![
        Emission {
            name: "fig1.csv".into(),
            csv: grid_csv(&red.grid, &[], |_, _, _| Some(vec![])),
            meta: meta.clone(),
        },
        Emission {
            name: "fig1-ode.csv".into(),
            csv: table_csv(
                &["t", "w", "dw"],
                red.table.t.iter().zip(&red.table.y).map(|(t, u)| vec![*t, u[0], u[1]]),
            ),
            meta,
        },
    ])
}

/// `R(r) cos z` with `mu = alpha = 1`: `a1 = -1`, `nu = 1`, `b1 = h - mu = -2`.
fn fig2(n: usize, seed: u64) -> CliResult<Vec<Emission>> {
    let sp = SeparableSpec::new(-1.0, -2.0, ZKind::Osc { nu: 1.0 }, [1.0, 0.0, 0.0, 1.0]);
    let s = separable(&sp).map_err(|e| CliError::numeric(e.to_string()))?;
    let grid = spec(SampleBox::new((0.05, 6.0), (-2.0 * PI, 2.0 * PI)), n)?;
    // Jets of the numeric radial branch come from its interpolant.
    let mut e = solution_emission(&s, grid, seed, 1e-6, 1000, "fig2.csv")?;
    e.meta["figure"] = "fig2".into();
    e.meta["mu"] = sp.mu().into();
    Ok(vec![e])
}

fn dshape(sigma: f64, shift: bool) -> CliResult<Solution> {
    let mut p: Params = [("lambda", 1.0), ("A", -1.0), ("sigma", sigma)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    if shift {
        p.insert("shift_z0".into(), 1.0);
    }
    Ok(instantiate(Family::Dshape, &p)?)
}

/// Box around both boundary circles' right-hand D, with a margin.
fn dshape_box(s: &Solution) -> CliResult<SampleBox> {
    let [c, _] = dshape_boundary(s)?;
    let m = 0.05 * c.radius;
    Ok(SampleBox::new(
        ((c.center.0 - c.radius).max(0.0), c.center.0 + c.radius + m),
        (c.center.1 - c.radius - m, c.center.1 + c.radius + m),
    ))
}

fn fig3(n: usize, seed: u64) -> CliResult<Vec<Emission>> {
    let mut out = Vec::new();
    for (sigma, name) in [(-0.5, "fig3-left.csv"), (-5.0, "fig3-right.csv")] {
        let s = dshape(sigma, true)?;
        let grid = spec(dshape_box(&s)?, n)?;
        let mut e = solution_emission(&s, grid, seed, 1e-9, 1000, name)?;
        e.meta["figure"] = "fig3".into();
        out.push(e);
    }
    Ok(out)
}

/// q table rows: midpoint level, contour q, flux q.
pub fn fig4_q_table(s: &Solution, psi0: f64, i: &crate::fields::FluxProfile) -> CliResult<(crate::fields::Axis, Vec<[f64; 3]>)> {
    let [c, _] = dshape_boundary(s)?;
    let ax = magnetic_axis(&*s.field, c.center, 0.05 * c.radius, 1.0).map_err(|e| CliError::numeric(e.to_string()))?;
    let levels: Vec<f64> = (1..=FIG4_LEVELS)
        .map(|k| ax.psi - (ax.psi - psi0) * k as f64 / FIG4_LEVELS as f64)
        .collect();
    let bx = dshape_box(s)?;
    let grid = GridSpec::new(bx.r, bx.z, 65, 65).map_err(|e| CliError::parse(e.to_string()))?;
    let flux = safety_factor_flux(&*s.field, i, &levels, (ax.r, ax.z), 4.0 * c.radius, 1.0)
        .map_err(|e| CliError::numeric(e.to_string()))?;
    let mids: Vec<f64> = flux.iter().map(|m| m.0).collect();
    let line = safety_factor(&*s.field, i, &mids, (ax.r, ax.z), grid, Some(0.0)).map_err(|e| CliError::numeric(e.to_string()))?;
    Ok((ax, line.iter().zip(&flux).map(|(l, f)| [l.psi, l.q, f.1]).collect()))
}

fn fig4(n: usize, seed: u64) -> CliResult<Vec<Emission>> {
    let s = dshape(-1.0, false)?;
    let pc = profiles_for(&s, Some(FIG4_PSI0), None, 0.0, 1.0)?;
    let grid = spec(dshape_box(&s)?, n)?;
    let base = solution_emission(&s, grid, seed, 1e-9, 1000, "fig4.csv")?;
    let (ax, rows) = fig4_q_table(&s, FIG4_PSI0, &pc.i)?;
    let mut meta = base.meta.clone();
    meta["figure"] = "fig4".into();
    meta["psi0"] = FIG4_PSI0.into();
    meta["I0"] = 0.0.into();
    meta["p0"] = pc.p0.into();
    meta["pressure"] = pc.p.expr.to_string().into();
    meta["current"] = pc.i.expr.to_string().into();
    meta["axis"] = json!(ax);
    let fields = Emission {
        name: "fig4.csv".into(),
        csv: fields_csv(&s, &pc, grid, Some(FIG4_PSI0), false),
        meta: meta.clone(),
    };
    let monotone = rows.windows(2).all(|w| w[1][1] > w[0][1]);
    let agree = rows.iter().map(|r| ((r[1] - r[2]) / r[2]).abs()).fold(0.0f64, f64::max);
    meta["q_monotone_outward"] = monotone.into();
    meta["q_max_relative_disagreement"] = agree.into();
    let table = Emission {
        name: "fig4-q.csv".into(),
        csv: table_csv(&["psi", "q", "q_flux"], rows.iter().map(|r| r.to_vec())),
        meta,
    };
    Ok(vec![fields, table])
}
