//! The eleven acceptance criteria. Each prints one PASS/FAIL line; the test
//! fails if any criterion does. Run with `--nocapture` to see the lines.

use gs_core::catalog::{dshape_boundary, dshape_inner, instantiate, instantiate_unchecked, Family, Params};
use gs_core::cli::figures::fig4_q_table;
use gs_core::cli::{exceptional_seed, power_profiles, run_reduction};
use gs_core::fields::{b_field, divergence, p0_for_boundary, p_and_i_maps, FluxProfile};
use gs_core::grid::GridSpec;
use gs_core::linear::{particular_solution, radial_solve, separable, superpose, ParticularCase, SeparableSpec, ZKind};
use gs_core::profiles::{classify, dshape_params_from, weak_family, ProfileSpec, Tag};
use gs_core::reductions::{integrate, reduce, weak_pair_compatibility, ReducedOde, ReducedTable, Start};
use gs_core::residual::{residual, residual_sampled};
use gs_core::special::bessel_j1;
use gs_core::symmetry::{commutator, exceptional_map, max_difference, PointGenerator};
use gs_core::{Expr, Number, Solution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// `k * p` as a new profile.
fn scaled(p: &ProfileSpec, k: Number) -> ProfileSpec {
    ProfileSpec::from_expr(p.role, Expr::Num(k) * p.raw.clone()).unwrap()
}

/// One violated constraint per family.
fn negative_control(fam: Family) -> Solution {
    let mut p = fam.default_params();
    let bump = |p: &mut Params, key: &str, k: f64| {
        let v = instantiate(fam, &fam.default_params()).unwrap().param(key).unwrap();
        p.insert(key.into(), v * k);
    };
    match fam {
        Family::CylQuartic => {
            p.insert("A".into(), 2.0);
        }
        Family::SqrtR | Family::RotPower => bump(&mut p, "A", 1.5),
        Family::LogCyl => {
            p.insert("b".into(), 3.0);
        }
        Family::WeakPower => {
            bump(&mut p, "A", 1.0);
            bump(&mut p, "a", 1.5);
        }
        Family::Dshape | Family::DshapeComplement => bump(&mut p, "a", 1.5),
        _ => {
            // No parameter relation to break: scale the profile the family pins.
            let mut s = instantiate(fam, &p).unwrap();
            if s.g.is_zero() {
                s.f = scaled(&s.f, Number::ratio(3, 2));
            } else {
                s.g = scaled(&s.g, Number::ratio(11, 10));
            }
            return s;
        }
    }
    instantiate_unchecked(fam, &p).unwrap()
}

fn c1_catalog() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut weakest = f64::INFINITY;
    for fam in Family::ALL {
        let s = instantiate(fam, &fam.default_params()).map_err(|e| format!("{fam}: {e}"))?;
        let rep = residual_sampled(&s, 1000, 1).map_err(|e| format!("{fam}: {e}"))?;
        ensure(rep.n_points >= 900 && rep.passes(1e-9), format!("{fam}: {rep:?}"))?;
        worst = worst.max(rep.max_rel);
        let bad = residual_sampled(&negative_control(fam), 1000, 1).map_err(|e| format!("{fam} control: {e}"))?;
        ensure(bad.max_rel >= 1e-2, format!("{fam} control only reaches {:e}", bad.max_rel))?;
        weakest = weakest.min(bad.max_rel);
    }
    Ok(format!("12 families, worst residual {worst:.1e}, weakest control {weakest:.1e}"))
}

fn c2_round_trip() -> Outcome {
    let (_, _, a, b) = weak_family(-0.25, -1.0, -1.0).map_err(|e| e.to_string())?;
    ensure((a + 1.5).abs() <= 1e-12 && (b - 0.25).abs() <= 1e-12, format!("(a, b) = ({a}, {b})"))?;
    let (amp, sigma) = dshape_params_from(-1.5, 0.25).map_err(|e| e.to_string())?;
    ensure((amp + 1.0).abs() <= 1e-12 && (sigma + 1.0).abs() <= 1e-12, format!("(A, sigma) = ({amp}, {sigma})"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let amp = -rng.gen_range(0.05..5.0);
        let sigma = -rng.gen_range(0.01..8.0);
        let (_, _, a, b) = weak_family(-0.25, amp, sigma).map_err(|e| e.to_string())?;
        let (a2, s2) = dshape_params_from(a, b).map_err(|e| e.to_string())?;
        worst = worst.max(((a2 - amp) / amp).abs()).max(((s2 - sigma) / sigma).abs());
    }
    ensure(worst <= 1e-12, format!("random round trip error {worst:e}"))?;
    Ok(format!("exact pair recovered, 100 random trips within {worst:.1e}"))
}

fn c3_exceptional_map() -> Outcome {
    let seed = exceptional_seed().map_err(|e| e.message)?;
    let d = instantiate(Family::Dshape, &params(&[("lambda", 1.0), ("A", -1.0), ("sigma", -1.0)])).unwrap();
    let m = exceptional_map(&seed, 1.0).map_err(|e| e.to_string())?;
    let pts = d.sample_points(1000, 3).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for &(r, z) in &pts {
        let (a, b) = (m.value(r, z).map_err(|e| e.to_string())?, d.value(r, z).map_err(|e| e.to_string())?);
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-12, format!("lambda = 1 differs by {worst:e}"))?;
    let id = exceptional_map(&seed, 0.0).map_err(|e| e.to_string())?;
    let mut id_worst: f64 = 0.0;
    for (r, z) in seed.sample_points(1000, 4).map_err(|e| e.to_string())? {
        id_worst = id_worst.max((id.value(r, z).unwrap() - seed.value(r, z).unwrap()).abs());
    }
    ensure(id_worst <= 1e-12, format!("lambda = 0 differs by {id_worst:e}"))?;
    Ok(format!("{} points, max difference {worst:.1e}, identity {id_worst:.1e}", pts.len()))
}

fn c4_commutator() -> Outcome {
    let xe = PointGenerator::x_exceptional(0.0);
    let c = commutator(&PointGenerator::x1(-0.25), &xe);
    let d = max_difference(&c, &xe, 50, 4).map_err(|e| e.to_string())?;
    ensure(d <= 1e-10, format!("difference {d:e}"))?;
    Ok(format!("50 points, max difference {d:.1e}"))
}

/// Roots in `r` of the D-shape polynomial along `z = const`, by bisection.
fn zeros_on_line(s: &Solution, z: f64, r_hi: f64) -> Vec<f64> {
    let f = |r: f64| dshape_inner(s, r, z).unwrap();
    let n = 4000;
    let mut out = Vec::new();
    for k in 0..n {
        let (mut a, mut b) = (r_hi * k as f64 / n as f64 + 1e-9, r_hi * (k + 1) as f64 / n as f64 + 1e-9);
        let (mut fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            out.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm == 0.0 || b - a < 1e-15 {
                a = m;
                b = m;
                break;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

fn c5_geometry() -> Outcome {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for sigma in [-0.5, -1.0, -5.0] {
        let lambda = 1.0;
        let s = instantiate(Family::Dshape, &params(&[("lambda", lambda), ("A", -1.0), ("sigma", sigma)])).unwrap();
        let (cr, zc, rad) = (
            sigma.abs().sqrt() / (2.0 * lambda),
            -1.0 / (2.0 * lambda),
            (1.0 + sigma.abs()).sqrt() / (2.0 * lambda),
        );
        let circles = dshape_boundary(&s).map_err(|e| e.to_string())?;
        for (c, sign) in circles.iter().zip([1.0, -1.0]) {
            let e = (c.center.0 - sign * cr).abs().max((c.center.1 - zc).abs()).max((c.radius - rad).abs());
            ensure(e <= 1e-10, format!("sigma = {sigma}: circle {c:?}"))?;
        }
        for k in 1..40 {
            let z = zc - rad + 2.0 * rad * k as f64 / 40.0;
            for r in zeros_on_line(&s, z, cr + rad + 0.5) {
                let d = [1.0, -1.0]
                    .iter()
                    .map(|sg| ((r - sg * cr).hypot(z - zc) - rad).abs())
                    .fold(f64::INFINITY, f64::min);
                ensure(d <= 1e-10, format!("sigma = {sigma}: zero ({r}, {z}) is {d:e} off the circles"))?;
                worst = worst.max(d);
                count += 1;
            }
        }
    }
    ensure(count >= 100, format!("only {count} zeros found"))?;
    Ok(format!("{count} zeros located, max distance to circles {worst:.1e}"))
}

fn class_ode(f: &ProfileSpec, g: &ProfileSpec, tag: Tag) -> Result<ReducedOde, String> {
    let class = classify(f, g).into_iter().find(|c| c.tag == tag).ok_or(format!("no {tag:?} class"))?;
    reduce(&class, f, g).map_err(|e| e.to_string())
}

fn c6_reduction() -> Outcome {
    let (f, g) = power_profiles(-0.5, -1.0, 0.0).map_err(|e| e.message)?;
    let ode = class_ode(&f, &g, Tag::A)?;
    let c = 2f64.powf(-0.25);
    let w = |y: f64| c * ((2.0 * y * y + 1.0) / (y * y)).sqrt();
    let dw = |y: f64| -c / (y * y * (2.0 * y * y + 1.0).sqrt());
    let tab = integrate(&ode, Start::Values { t0: 0.5, w: w(0.5), dw: dw(0.5) }, (0.5, 3.0), 1e-12).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..=500 {
        let y = 0.5 + 2.5 * k as f64 / 500.0;
        let (u, _) = tab.hermite(y).ok_or(format!("no value at {y}"))?;
        worst = worst.max((u[0] / w(y) - 1.0).abs());
    }
    ensure(worst <= 1e-6, format!("closed form missed by {worst:e}"))?;

    let (q, eps, hi) = (1.0, 1e-3, 5.0);
    let (f, g) = power_profiles(q, -1.0, 1.0).map_err(|e| e.message)?;
    let grid = GridSpec::new((0.05, 2.0), (-2.0, 2.0), 121, 121).unwrap();
    let red = run_reduction(Tag::A, f, g, Start::regular(q, eps), (eps, hi), 1e-10, grid).map_err(|e| e.message)?;
    let order = red.meta["fd_order"].as_f64().ok_or("no FD order")?;
    ensure((order - 2.0).abs() <= 0.3, format!("FD order {order}"))?;
    Ok(format!("closed form within {worst:.1e}, reconstructed FD order {order:.2}"))
}

fn c7_linear() -> Outcome {
    let rs = radial_solve(-1.0, 0.0, 3.0, 1e-12).map_err(|e| e.to_string())?;
    let mut e1: f64 = 0.0;
    for k in 1..=300 {
        let r = 0.01 * k as f64;
        e1 = e1.max((rs.eval(r).unwrap() - 2.0 * (0.5 * r * r).sin()).abs());
    }
    ensure(e1 <= 1e-8, format!("sin branch off by {e1:e}"))?;
    // R / r^2 -> 1 fixes R = 2 r J1(r).
    let rs = radial_solve(0.0, 1.0, 10.0, 1e-12).map_err(|e| e.to_string())?;
    let mut e2: f64 = 0.0;
    for k in 1..=1000 {
        let r = 0.01 * k as f64;
        e2 = e2.max((rs.eval(r).unwrap() - 2.0 * r * bessel_j1(r)).abs());
    }
    ensure(e2 <= 1e-6, format!("Bessel branch off by {e2:e}"))?;

    let p: BTreeMap<String, f64> = [("a0".to_string(), 2.0), ("b1".to_string(), -2.0)].into();
    let c2 = particular_solution(ParticularCase::CDoublePrime, &p).map_err(|e| e.to_string())?;
    let w1 = separable(&SeparableSpec::new(0.0, -2.0, ZKind::Osc { nu: 1.0 }, [1.0, 0.0, 0.0, 1.0])).map_err(|e| e.to_string())?;
    let sum = superpose(&c2, &[w1]).map_err(|e| e.to_string())?;
    let rep = residual_sampled(&sum, 1000, 5).map_err(|e| e.to_string())?;
    ensure(rep.passes(1e-9), format!("superposition: {rep:?}"))?;

    let p: BTreeMap<String, f64> = [("b0".to_string(), 1.0), ("alpha".to_string(), 1.0)].into();
    let c3 = particular_solution(ParticularCase::CTriplePrime, &p).map_err(|e| e.to_string())?;
    let (z0, z1) = c3.sample.z;
    let pts: Vec<(f64, f64)> = (0..=40)
        .flat_map(|i| (0..=24).map(move |j| (0.2 + 2.8 * i as f64 / 40.0, z0 + (z1 - z0) * j as f64 / 24.0)))
        .collect();
    let rep3 = residual(&c3, &pts).map_err(|e| e.to_string())?;
    ensure(rep3.max_rel <= 1e-8 && rep3.n_points > 900, format!("particular: {rep3:?}"))?;
    Ok(format!(
        "sin {e1:.1e}, Bessel {e2:.1e}, superposition {:.1e}, Si/Ci particular {:.1e}",
        rep.max_rel, rep3.max_rel
    ))
}

fn weak_run(f: &ProfileSpec, g: &ProfileSpec, class_g: &ProfileSpec) -> Result<(ReducedOde, ReducedTable), String> {
    let class = classify(f, class_g).into_iter().find(|c| c.tag == Tag::WeakSigma).ok_or("no weak class")?;
    let ode = reduce(&class, f, g).map_err(|e| e.to_string())?;
    let tab = integrate(&ode, Start::Values { t0: -1.0, w: 1.0, dw: -0.25 }, (-3.0, -0.1), 1e-11).map_err(|e| e.to_string())?;
    Ok((ode, tab))
}

fn c8_weak_pair() -> Outcome {
    let (f, g, a, b) = weak_family(-0.25, -1.0, -1.0).map_err(|e| e.to_string())?;
    ensure((a, b) == (-1.5, 0.25), "pair")?;
    let (ode, tab) = weak_run(&f, &g, &g)?;
    let first = (0..tab.len())
        .map(|k| ode.residual(tab.t[k], tab.y[k][0], tab.y[k][1], tab.dy[k][1]).unwrap_or(f64::NAN).abs())
        .fold(0.0, f64::max);
    let second = weak_pair_compatibility(&ode, &tab).ok_or("second equation undefined")?;
    ensure(first <= 1e-8 && second <= 1e-8, format!("residuals {first:e}, {second:e}"))?;
    let g_bad = scaled(&g, Number::ratio(101, 100));
    let (ode_bad, tab_bad) = weak_run(&f, &g_bad, &g)?;
    let broken = weak_pair_compatibility(&ode_bad, &tab_bad).ok_or("second equation undefined")?;
    ensure(broken >= 1e-3, format!("perturbed b only breaks it by {broken:e}"))?;
    Ok(format!("first {first:.1e}, second {second:.1e}; b + 1% gives {broken:.1e}"))
}

fn c9_physics() -> Outcome {
    let mut worst: f64 = 0.0;
    for fam in [Family::CylQuartic, Family::SqrtR, Family::LogCyl, Family::WeakPower, Family::Dshape] {
        let s = instantiate(fam, &fam.default_params()).unwrap();
        for (r, z) in s.sample_points(200, 9).map_err(|e| e.to_string())? {
            let d = divergence(&*s.field, r, z).map_err(|e| e.to_string())?;
            b_field(&*s.field, &FluxProfile::constant(1.0), r, z).map_err(|e| e.to_string())?;
            worst = worst.max(d.abs());
        }
    }
    ensure(worst <= 1e-10, format!("div B = {worst:e}"))?;
    let (a, b) = (-1.5, 0.25);
    let pc = p_and_i_maps(a, b, p0_for_boundary(a, 0.4), 0.0);
    let mut dev: f64 = 0.0;
    for k in 0..50 {
        let psi = 0.4 + 0.6 * k as f64 / 49.0;
        let h = 1e-3 * psi;
        let d = |f: &dyn Fn(f64) -> f64| (f(psi - 2.0 * h) - 8.0 * f(psi - h) + 8.0 * f(psi + h) - f(psi + 2.0 * h)) / (12.0 * h);
        let fv = a * psi.powi(-7);
        let gv = b * psi.powi(-3);
        let dp = d(&|x| pc.pressure(x).unwrap());
        let di = d(&|x| pc.current(x).unwrap());
        dev = dev
            .max(((dp + fv / (4.0 * PI)) / (fv / (4.0 * PI))).abs())
            .max(((-pc.current(psi).unwrap() * di - gv) / gv).abs());
    }
    ensure(dev <= 1e-8, format!("p/I deviation {dev:e}"))?;
    Ok(format!("max |div B| {worst:.1e}, p/I relative deviation {dev:.1e}"))
}

fn c10_safety() -> Outcome {
    let s = instantiate(Family::Dshape, &params(&[("lambda", 1.0), ("A", -1.0), ("sigma", -1.0)])).unwrap();
    let (a, b) = (s.param("a").unwrap(), s.param("b").unwrap());
    let pc = p_and_i_maps(a, b, p0_for_boundary(a, 0.4), 0.0);
    let (_, rows) = fig4_q_table(&s, 0.4, &pc.i).map_err(|e| e.message)?;
    let qs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let table = format!("q = [{}]", qs.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(", "));
    ensure(rows.len() >= 8, format!("{} surfaces; {table}", rows.len()))?;
    ensure(qs.windows(2).all(|w| w[1] > w[0]), format!("not monotone; {table}"))?;
    let agree = rows.iter().map(|r| ((r[1] - r[2]) / r[2]).abs()).fold(0.0, f64::max);
    ensure(agree <= 0.02, format!("definitions disagree by {agree:e}; {table}"))?;
    let (inner, outer) = (qs[0], qs[qs.len() - 1]);
    ensure((0.5..=2.0).contains(&inner), format!("innermost q {inner:.3} outside [0.5, 2]; {table}"))?;
    ensure(
        (3.0..=7.0).contains(&outer),
        format!("outermost q {outer:.3} outside [3, 7] (monotone, agreement {agree:.1e}); {table}"),
    )?;
    Ok(format!("{} surfaces, agreement {agree:.1e}; {table}", rows.len()))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gs"))
        .args(args)
        .current_dir(dir)
        .env_remove("GS_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    let mut files = vec![("stdout".to_string(), out.stdout)];
    let mut paths: Vec<_> = walk(dir);
    paths.sort();
    for p in paths {
        let name = p.strip_prefix(dir).unwrap().display().to_string();
        files.push((name, std::fs::read(&p).map_err(|e| e.to_string())?));
    }
    Ok(files)
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap().flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn c11_determinism() -> Outcome {
    let runs: [&[&str]; 3] = [
        &["--seed", "7", "figure", "fig4", "--n", "41", "--out-dir", "out"],
        &["--seed", "7", "figure", "fig1", "--n", "41", "--out-dir", "out"],
        &["--seed", "7", "solution", "--family", "weak_cubic", "--nr", "31", "--nz", "31"],
    ];
    let mut files = 0;
    for args in runs {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (a, b) = (run_cli(args, d1.path())?, run_cli(args, d2.path())?);
        ensure(a == b, format!("{args:?} differs between runs"))?;
        files += a.len();
    }
    Ok(format!("3 commands, {files} outputs byte-identical"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("catalog residuals", c1_catalog),
        ("weak-family round trip", c2_round_trip),
        ("exceptional map", c3_exceptional_map),
        ("commutator", c4_commutator),
        ("D-shape geometry", c5_geometry),
        ("reduction fidelity", c6_reduction),
        ("linear case", c7_linear),
        ("weak-pair compatibility", c8_weak_pair),
        ("physics consistency", c9_physics),
        ("safety factor", c10_safety),
        ("determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({secs:.1}s)", k + 1),
            Err(msg) => {
                println!("FAIL {:>2} {name}: {msg} ({secs:.1}s)", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
