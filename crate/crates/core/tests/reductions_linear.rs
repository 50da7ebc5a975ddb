use gs_core::catalog::{instantiate, Family};
use gs_core::cli::eps_drift;
use gs_core::grid::{GridField, GridSpec};
use gs_core::linear::{
    particular_solution, radial_solve, separable, superpose, ParticularCase, SeparableSpec, ZKind, RADIAL_EPS,
};
use gs_core::ode::{dopri5, OdeOptions};
use gs_core::profiles::{classify, parse_profile, weak_family, Role, Tag};
use gs_core::reductions::{integrate, reconstruct, reduce, table_from_fn, ReducedKind, ReducedOde, Start};
use gs_core::residual::{grid_residual_study, residual_sampled};
use std::collections::BTreeMap;

fn ode(f: &str, g: &str, tag: Tag) -> ReducedOde {
    let (f, g) = (parse_profile(f, Role::F).unwrap(), parse_profile(g, Role::G).unwrap());
    let class = classify(&f, &g).into_iter().find(|c| c.tag == tag).unwrap();
    reduce(&class, &f, &g).unwrap()
}

#[test]
fn reduced_kinds() {
    assert_eq!(ode("-psi^3", "psi^2", Tag::A).kind, ReducedKind::X1Similarity);
    assert_eq!(ode("-psi^-3", "-psi^-3", Tag::ConditionalKappa).kind, ReducedKind::CondKappa);
    assert_eq!(ode("0", "8*psi^3", Tag::ConditionalRotation).kind, ReducedKind::Rot);
    assert_eq!(ode("-psi^-3", "0", Tag::WeakSigma).kind, ReducedKind::WeakPair);
}

#[test]
fn both_branches_cancel_at_leading_order() {
    for q in [1.0, 2.0, -0.5] {
        let o = ode(&format!("psi^({})", 1.0 + 2.0 / q), &format!("psi^({})", 1.0 + 1.0 / q), Tag::A);
        for m in [2.0 * q, 2.0 * q + 2.0] {
            let t: f64 = 1e-3;
            let (w, dw, d2w) = (t.powf(m), m * t.powf(m - 1.0), m * (m - 1.0) * t.powf(m - 2.0));
            // Only the y^4 and y^3 terms survive, two orders above the monomial.
            let rest = d2w * t.powi(4) + 2.0 * t.powi(3) * dw;
            let lhs = o.lhs_homogeneous(t, w, dw, d2w);
            assert!((lhs - rest).abs() <= 1e-12 * w.abs(), "q = {q}, m = {m}");
            assert!(lhs.abs() <= (m * (m + 1.0)).abs().max(1.0) * t * t * w.abs() * (1.0 + 1e-9));
        }
    }
}

#[test]
fn quartic_table_reconstructs_exactly() {
    let o = ode("4", "4*psi^(1/2)", Tag::A);
    assert_eq!(o.q, -2.0);
    let ts: Vec<f64> = (0..=400).map(|k| 0.01 + 0.05 * k as f64).collect();
    let tab = table_from_fn(&ts, |_| (1.0, 0.0, 0.0));
    let spec = GridSpec::new((0.2, 2.0), (0.1, 1.5), 64, 64).unwrap();
    let g = reconstruct(&o, &tab, spec).unwrap();
    for i in 0..64 {
        for j in 0..64 {
            if let Some(v) = g.get(i, j) {
                assert!((v - spec.r(i).powi(4)).abs() <= 1e-8);
            }
        }
    }
    assert!(g.valid_count() > 3000);
}

#[test]
fn weak_pair_reconstruction_matches_closed_form() {
    let (f, g, _, _) = weak_family(-0.25, -1.0, -1.0).unwrap();
    let class = classify(&f, &g).into_iter().find(|c| c.tag == Tag::WeakSigma).unwrap();
    assert_eq!(class.params.sigma, Some(-1.0));
    let o = reduce(&class, &f, &g).unwrap();
    let tab = integrate(&o, Start::Values { t0: -1.0, w: 1.0, dw: -0.25 }, (-3.0, -0.1), 1e-11).unwrap();
    let spec = GridSpec::new((0.6, 1.6), (-0.5, 0.5), 41, 41).unwrap();
    let grid = reconstruct(&o, &tab, spec).unwrap();
    let seed = gs_core::cli::exceptional_seed().unwrap();
    let mut worst = 0.0f64;
    for i in 0..41 {
        for j in 0..41 {
            if let Some(v) = grid.get(i, j) {
                let exact = seed.value(spec.r(i), spec.z(j)).unwrap();
                worst = worst.max((v - exact).abs() / exact);
            }
        }
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn fig1_start_is_insensitive_to_eps() {
    let o = ode("-psi^3", "psi^2", Tag::A);
    let d = eps_drift(&o, 4.0, 1e-3, 5.0, 1e-10).unwrap();
    assert!(d <= 1e-4, "{d}");
}

#[test]
fn halving_tol_is_sane() {
    let exact = |t: f64| (2.0 * t).sqrt();
    let run = |tol: f64| {
        let opts = OdeOptions::<f64>::new(tol).unwrap();
        let tab = dopri5(|_, u: &[f64; 2]| [u[1], -u[0].powi(-3)], 1.0, [2f64.sqrt(), 0.5f64.sqrt()], 10.0, &opts).unwrap();
        let err = tab.t.iter().zip(&tab.y).map(|(t, u)| (u[0] - exact(*t)).abs()).fold(0.0, f64::max);
        (tab.stats.steps, err)
    };
    let (n1, e1) = run(1e-7);
    let (n2, e2) = run(5e-8);
    assert!(n2 <= 2 * n1, "{n1} -> {n2}");
    assert!(e2 < e1, "{e1} -> {e2}");
}

#[test]
fn radial_branch_matches_closed_forms() {
    let rs = radial_solve(-1.0, 0.0, 3.0, 1e-12).unwrap();
    for k in 1..=300 {
        let r = 0.01 * k as f64;
        let want = 2.0 * (0.5 * r * r).sin();
        assert!((rs.eval(r).unwrap() - want).abs() <= 1e-8 * want.abs().max(r * r), "{r}");
    }
    let rs = radial_solve(0.0, 1.0, 10.0, 1e-12).unwrap();
    let scale = rs.eval(1.0).unwrap() / gs_core::special::bessel_j1(1.0);
    for k in 1..=1000 {
        let r = 0.01 * k as f64;
        let want = scale * r * gs_core::special::bessel_j1(r);
        assert!((rs.eval(r).unwrap() - want).abs() <= 1e-6 * want.abs().max(r * r).max(1.0), "{r}");
    }
}

#[test]
fn radial_branch_properties() {
    let rs = radial_solve(-1.0, 1.0, 12.0, 1e-12).unwrap();
    let max_on = |a: f64, b: f64| (0..=600).map(|k| a + (b - a) * k as f64 / 600.0).filter_map(|r| rs.eval(r)).map(f64::abs).fold(0.0, f64::max);
    assert!(max_on(6.0, 12.0) <= 1.5 * max_on(RADIAL_EPS, 6.0));
    let sign_changes = (1..600).filter(|k| {
        let (a, b) = (rs.eval(0.02 * *k as f64).unwrap(), rs.eval(0.02 * (*k + 1) as f64).unwrap());
        a * b < 0.0
    });
    assert!(sign_changes.count() >= 3);
    for e in [RADIAL_EPS, 2.0 * RADIAL_EPS] {
        assert!((rs.eval(e).unwrap() / (e * e) - 1.0).abs() <= 1e-6);
    }
    // Equal mu from different (h, b1) gives the same radial branch.
    let a = SeparableSpec::new(-1.0, -2.0, ZKind::Osc { nu: 1.0 }, [1.0, 0.0, 1.0, 0.0]);
    let b = SeparableSpec::new(-1.0, 0.0, ZKind::Hyp { k: 1.0 }, [1.0, 0.0, 1.0, 0.0]);
    assert_eq!(a.mu(), b.mu());
    let (ra, rb) = (radial_solve(-1.0, a.mu(), 12.0, 1e-12).unwrap(), radial_solve(-1.0, b.mu(), 12.0, 1e-12).unwrap());
    assert_eq!(ra.table.y, rb.table.y);
}

#[test]
fn separation_identity() {
    for (a1, b1, z) in [
        (-1.0, -2.0, ZKind::Osc { nu: 1.0 }),
        (0.5, 0.2, ZKind::Hyp { k: 0.5 }),
        (-2.0, 1.0, ZKind::Linear),
    ] {
        let sp = SeparableSpec::new(a1, b1, z, [1.0, 0.0, 0.5, 1.0]);
        let s = separable(&sp).unwrap();
        let rs = radial_solve(a1, sp.mu(), sp.r_max, sp.tol).unwrap();
        let pts = s.sample_points(500, 3).unwrap();
        let zmax = pts.iter().map(|&(r, zz)| (s.value(r, zz).unwrap() / rs.eval(r).unwrap()).abs()).fold(0.0, f64::max);
        let rmax = pts.iter().map(|&(r, _)| rs.ode_residual(r).unwrap().abs()).fold(0.0, f64::max);
        let rep = gs_core::residual::residual(&s, &pts).unwrap();
        assert!(rep.max_abs <= rmax * zmax * (1.0 + 1e-6) + 1e-12, "{a1} {b1}: {} vs {}", rep.max_abs, rmax * zmax);
    }
}

#[test]
fn separable_examples() {
    let sp = SeparableSpec::new(-1.0, -1.0, ZKind::Osc { nu: 1.0 }, [1.0, 0.0, 1.0, 0.0]);
    assert_eq!(sp.mu(), 0.0);
    let s = separable(&sp).unwrap();
    let (r, z) = (1.3, 0.7);
    assert!((s.value(r, z).unwrap() - (0.5 * r * r).sin() * z.sin()).abs() < 1e-14);
    let spec = GridSpec::new((0.2, 3.0), (-2.0, 2.0), 33, 33).unwrap();
    let (_, order) = grid_residual_study(|g| GridField::sample(&*s.field, g), spec, &s.f, &s.g).unwrap();
    assert!((1.7..=2.3).contains(&order), "{order}");
    let lin = separable(&SeparableSpec::new(0.0, -1.0, ZKind::Linear, [1.0, 0.0, 1.0, 2.0])).unwrap();
    assert!(residual_sampled(&lin, 500, 1).unwrap().passes(1e-9));
    let fig2 = separable(&SeparableSpec::new(-1.0, -2.0, ZKind::Osc { nu: 1.0 }, [1.0, 0.0, 0.0, 1.0])).unwrap();
    assert!(residual_sampled(&fig2, 1000, 1).unwrap().passes(1e-6));
}

#[test]
fn particular_solutions_and_superposition() {
    let p: BTreeMap<String, f64> = [("b0".to_string(), 1.0), ("alpha".to_string(), 1.0)].into();
    let c3 = particular_solution(ParticularCase::CTriplePrime, &p).unwrap();
    assert!(residual_sampled(&c3, 1000, 1).unwrap().max_rel <= 1e-8);
    let p: BTreeMap<String, f64> = [("a0".to_string(), 2.0), ("b1".to_string(), -2.0)].into();
    let c2 = particular_solution(ParticularCase::CDoublePrime, &p).unwrap();
    let same = superpose(&c2, &[]).unwrap();
    assert_eq!(same.value(1.1, 0.3).unwrap(), c2.value(1.1, 0.3).unwrap());
    // mu = -nu^2 - b1 = 1 with a1 = 0: the Bessel term.
    let w = separable(&SeparableSpec::new(0.0, -2.0, ZKind::Osc { nu: 1.0 }, [1.0, 0.0, 0.0, 1.0])).unwrap();
    let w2 = separable(&SeparableSpec::new(0.0, -2.0, ZKind::Osc { nu: 1.0 }, [0.5, 0.3, 1.0, 0.0])).unwrap();
    let s = superpose(&c2, &[w.clone(), w2.clone()]).unwrap();
    assert!(residual_sampled(&s, 1000, 1).unwrap().max_rel <= 1e-9);
    let hom = superpose(&w, &[w2]).unwrap();
    assert!(residual_sampled(&hom, 1000, 1).unwrap().max_rel <= 1e-9);
}

#[test]
fn dshape_is_reachable_from_its_class() {
    let d = instantiate(Family::Dshape, &Family::Dshape.default_params()).unwrap();
    let tags: Vec<Tag> = classify(&d.f, &d.g).iter().map(|c| c.tag).collect();
    assert!(tags.contains(&Tag::ADoublePrime) && tags.contains(&Tag::WeakSigma), "{tags:?}");
}
