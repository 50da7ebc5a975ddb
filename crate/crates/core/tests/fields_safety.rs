use gs_core::catalog::{dshape_boundary, instantiate, Family, Params};
use gs_core::contour::trace_contour;
use gs_core::expr::parse;
use gs_core::fields::{b_field, divergence, p0_for_boundary, p_and_i_maps, FluxProfile};
use gs_core::grid::{GridField, GridSpec};
use gs_core::safety::{safety_factor, safety_factor_flux, SafetyError};
use gs_core::solution::ExprField;
use proptest::prelude::*;
use std::f64::consts::PI;

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn field(text: &str) -> ExprField {
    ExprField::new(parse(text).unwrap(), vec![])
}

#[test]
fn field_examples() {
    let zero = FluxProfile::constant(0.0);
    let b = b_field(&field("r^4"), &zero, 1.5, 0.3).unwrap();
    assert_eq!((b.b_r, b.b_phi), (0.0, 0.0));
    assert!((b.b_z / (1.5 * 1.5) - 4.0).abs() < 1e-14);
    let b = b_field(&field("-2*log(r)"), &FluxProfile::constant(3.0), 2.0, -1.0).unwrap();
    assert_eq!(b.b_r, 0.0);
    assert!((b.b_z + 2.0 / 4.0).abs() < 1e-15);
    assert_eq!(b.b_phi, 1.5);
    assert!(b_field(&field("r^4"), &zero, 0.0, 0.0).is_err());
}

#[test]
fn pressure_and_current_examples() {
    let pc = p_and_i_maps(-1.5, 0.25, 0.0, 0.0);
    for psi in [0.3, 0.8, 2.0] {
        assert!((pc.current(psi).unwrap() - 0.5 / psi).abs() < 1e-15);
    }
    let p0 = p0_for_boundary(-1.5, 0.4);
    assert!((p0 - 0.4f64.powi(-6) / (16.0 * PI)).abs() < 1e-12 * p0);
    let pc = p_and_i_maps(-1.5, 0.25, p0, 0.0);
    assert!(pc.pressure(0.4).unwrap().abs() < 1e-12 * p0);
    let flat = p_and_i_maps(0.0, 0.25, 2.5, 0.0);
    assert_eq!(flat.pressure(0.7).unwrap(), 2.5);
    assert!(p_and_i_maps(0.0, -1.0, 0.0, 0.5).current(1.0).is_err());
}

#[test]
fn divergence_vanishes_for_catalog_solutions() {
    let i = FluxProfile::constant(1.0);
    for fam in [Family::CylQuartic, Family::SqrtR, Family::LogCyl, Family::WeakPower, Family::Dshape] {
        let s = instantiate(fam, &fam.default_params()).unwrap();
        for (r, z) in s.sample_points(100, 8).unwrap() {
            assert!(divergence(&*s.field, r, z).unwrap().abs() <= 1e-10);
            // Independent check from differences of B itself.
            let j = s.jet(r, z).unwrap();
            let grad = j.d_r.hypot(j.d_z).max(1e-300);
            let curv = j.d_rr.abs() + j.d_rz.abs() + j.d_zz.abs();
            let len = (j.value.abs() / grad).min(grad / curv.max(1e-300));
            let h = 0.002 * len.min(r).min(1.0);
            let b = |r: f64, z: f64| b_field(&*s.field, &i, r, z).ok();
            let (w, o) = ([1.0, -8.0, 8.0, -1.0], [-2.0, -1.0, 1.0, 2.0]);
            let mut div = 0.0;
            for k in 0..4 {
                let (Some(br), Some(bz)) = (b(r + o[k] * h, z), b(r, z + o[k] * h)) else {
                    div = f64::NAN;
                    break;
                };
                div += w[k] * ((r + o[k] * h) * br.b_r / r + bz.b_z) / (12.0 * h);
            }
            if div.is_nan() {
                continue;
            }
            let scale = (j.d_rr.abs() + j.d_rz.abs() + j.d_zz.abs()) / r + j.d_r.hypot(j.d_z) / (r * r);
            assert!(div.abs() <= 1e-6 * scale, "{fam} ({r}, {z}): {div}");
        }
    }
}

#[test]
fn circular_surfaces_give_unit_q() {
    let f = field("(r - 10)^2 + z^2");
    let i = FluxProfile::constant(20.0);
    let rho = [0.02, 0.04, 0.06];
    let levels: Vec<f64> = rho.iter().map(|x| x * x).collect();
    let grid = GridSpec::new((9.9, 10.1), (-0.1, 0.1), 41, 41).unwrap();
    let q = safety_factor(&f, &i, &levels, (10.0, 0.0), grid, None).unwrap();
    for e in &q {
        assert!((e.q - 1.0).abs() <= 0.01, "{e:?}");
    }
    let flux = safety_factor_flux(&f, &i, &levels, (10.0, 0.0), 0.2, -1.0).unwrap();
    for (_, qf) in flux {
        assert!((qf - 1.0).abs() <= 0.01, "{qf}");
    }
}

#[test]
fn open_surfaces_are_reported() {
    let f = field("r + z");
    let grid = GridSpec::new((0.5, 1.5), (-0.5, 0.5), 21, 21).unwrap();
    let e = safety_factor(&f, &FluxProfile::constant(1.0), &[1.0], (1.0, 0.0), grid, None).unwrap_err();
    assert_eq!(e, SafetyError::OpenContour(1.0));
}

#[test]
fn dshape_contours_hug_the_circles() {
    let s = instantiate(Family::Dshape, &params(&[("lambda", 1.0), ("A", -1.0), ("sigma", -1.0)])).unwrap();
    let circles = dshape_boundary(&s).unwrap();
    let spec = GridSpec::new((0.0, 1.3), (-1.3, 0.3), 201, 201).unwrap();
    let g = GridField::from_fn(spec, |r, z| Some(s.value(r, z).unwrap_or(0.0)));
    let set = trace_contour(&g, 0.05);
    let pl = set.polylines.iter().find(|p| p.encloses((0.866, -0.5))).unwrap();
    let dist = |c: &gs_core::catalog::Circle, p: (f64, f64)| ((p.0 - c.center.0).hypot(p.1 - c.center.1) - c.radius).abs();
    let mut on_right = 0;
    for &p in &pl.points {
        let d = dist(&circles[0], p).min(dist(&circles[1], p));
        assert!(d <= 0.02, "{p:?}");
        if dist(&circles[0], p) <= 0.02 {
            on_right += 1;
        }
    }
    assert!(2 * on_right >= pl.points.len());
    assert!(trace_contour(&g, 2.0).polylines.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn contour_vertices_sit_on_the_level(
        r0 in 0.5f64..1.5, z0 in -0.5f64..0.5, alpha in 0.5f64..2.0, level in 0.05f64..0.4, n in 21usize..61,
    ) {
        let spec = GridSpec::new((r0 - 1.0, r0 + 1.0), (z0 - 1.0, z0 + 1.0), n, n).unwrap();
        let psi = |r: f64, z: f64| alpha * ((r - r0).powi(2) + (z - z0).powi(2));
        let g = GridField::from_fn(spec, |r, z| Some(psi(r, z)));
        let h = spec.h_r();
        for pl in trace_contour(&g, level).polylines {
            for (r, z) in pl.points {
                prop_assert!((psi(r, z) - level).abs() <= 2.0 * h * h);
            }
        }
    }

    #[test]
    fn pressure_and_current_reproduce_profiles(
        a in -5.0f64..5.0, b in 0.01f64..3.0, p0 in -2.0f64..2.0, i0 in 0.0f64..2.0, psi in 0.3f64..3.0,
    ) {
        let pc = p_and_i_maps(a, b, p0, i0);
        let h = 1e-3 * psi;
        let d = |f: &dyn Fn(f64) -> f64| {
            (f(psi - 2.0 * h) - 8.0 * f(psi - h) + 8.0 * f(psi + h) - f(psi + 2.0 * h)) / (12.0 * h)
        };
        let dp = d(&|x| pc.pressure(x).unwrap());
        let f = a * psi.powi(-7);
        let floor = 1e-13 * pc.pressure(psi).unwrap().abs().max(1.0) / h;
        prop_assert!((dp + f / (4.0 * PI)).abs() <= 1e-8 * (f / (4.0 * PI)).abs() + floor);
        let di = d(&|x| pc.current(x).unwrap());
        let g = b * psi.powi(-3);
        prop_assert!((-pc.current(psi).unwrap() * di - g).abs() <= 1e-8 * g.abs());
    }
}
