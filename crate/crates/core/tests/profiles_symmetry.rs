use approx::assert_relative_eq;
use gs_core::catalog::{instantiate, Family, Params};
use gs_core::profiles::{classify, dshape_params_from, parse_profile, weak_family, ProfileForm, Role, Tag};
use gs_core::residual::residual_sampled;
use gs_core::symmetry::{
    builtins, commutator, exceptional_map, exp_case_map, generators_equal, max_difference, scaling_map, PointGenerator,
};
use gs_core::Number;
use proptest::prelude::*;

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn parse_recognizes_forms() {
    let p = parse_profile("2*(psi+1)^-7", Role::F).unwrap();
    assert_eq!(
        p.form,
        ProfileForm::PowerShifted {
            a: Number::int(2),
            c: Number::int(1),
            p: Number::int(-7)
        }
    );
    let p = parse_profile("3 + 0.5*psi", Role::G).unwrap();
    assert_eq!(
        p.form,
        ProfileForm::Affine {
            k0: Number::int(3),
            k1: Number::ratio(1, 2)
        }
    );
}

#[test]
fn classify_known_pairs() {
    let f = |s| parse_profile(s, Role::F).unwrap();
    let g = |s| parse_profile(s, Role::G).unwrap();
    let c = classify(&f("psi^3"), &g("psi^2"));
    assert_eq!(c[0].tag, Tag::A);
    assert_eq!(c[0].params.q, Some(1.0));
    let c = classify(&f("2*(psi+1)^-7"), &g("3*(psi+1)^-3"));
    assert!(c.iter().any(|c| c.tag == Tag::ADoublePrime && c.params.q == Some(-0.25) && c.params.c == Some(1.0)));
    let c = classify(&f("-psi^-3"), &g("-psi^-3"));
    assert!(c.iter().any(|c| c.tag == Tag::ConditionalKappa && c.params.kappa == Some(1.0)));
    let c = classify(&f("0"), &g("8*psi^3"));
    assert_eq!(c[0].tag, Tag::ConditionalRotation);
    assert_eq!(c[0].params.beta, Some(3.0));
    assert_eq!(classify(&f("psi^3"), &g("psi^5"))[0].tag, Tag::None);
}

#[test]
fn weak_family_values() {
    let (_, _, a, b) = weak_family(-0.25, -1.0, -1.0).unwrap();
    assert_eq!((a, b), (-1.5, 0.25));
    let (_, g, a, b) = weak_family(-0.5, 0.5f64.sqrt(), 2.0).unwrap();
    assert_relative_eq!(a, -1.0, max_relative = 1e-15);
    assert_eq!(b, 0.0);
    assert!(g.is_zero());
    let (_, _, a, b) = weak_family(-0.25, -1.0, -5.0).unwrap();
    assert_eq!((a, b), (-22.5, 0.25));
    assert!(weak_family(-0.25, -1.0, 1.0).is_err());
}

#[test]
fn dshape_params_examples() {
    assert_eq!(dshape_params_from(-1.5, 0.25).unwrap(), (-1.0, -1.0));
    let (amp, s) = dshape_params_from(-9.0 / 16.0, 0.25).unwrap();
    assert_eq!(amp, -1.0);
    assert_relative_eq!(s, -0.5, max_relative = 1e-15);
    assert_eq!(dshape_params_from(3.0 / 16.0, 0.25).unwrap().1, 0.5);
    assert!(dshape_params_from(1.0, 0.25).is_err());
}

#[test]
fn commutator_examples() {
    let xe = PointGenerator::x_exceptional(0.0);
    assert!(generators_equal(&commutator(&PointGenerator::x1(-0.25), &xe), &xe));
    let two_x1 = PointGenerator::x1(-0.25).scaled(2.0);
    assert!(generators_equal(&commutator(&PointGenerator::z_translate(), &xe), &two_x1));
    for v in builtins() {
        assert!(generators_equal(&commutator(&v, &v), &PointGenerator::zero()), "{v}");
    }
}

#[test]
fn maps_fix_invariant_solutions() {
    let quartic = instantiate(Family::CylQuartic, &Family::CylQuartic.default_params()).unwrap();
    let m = scaling_map(&quartic, 0.7, -2.0, 0.0).unwrap();
    for (r, z) in [(0.5, 0.1), (1.2, -0.4)] {
        assert_relative_eq!(m.value(r, z).unwrap(), quartic.value(r, z).unwrap(), max_relative = 1e-13);
    }
    let sq = instantiate(Family::SqrtR, &Family::SqrtR.default_params()).unwrap();
    let m = exceptional_map(&sq, 0.4).unwrap();
    for (r, z) in [(0.5, 0.1), (1.2, -0.4)] {
        assert_relative_eq!(m.value(r, z).unwrap(), sq.value(r, z).unwrap(), max_relative = 1e-13);
    }
    let lg = instantiate(Family::LogCyl, &Family::LogCyl.default_params()).unwrap();
    let m = exp_case_map(&lg, 0.5).unwrap();
    assert_relative_eq!(m.value(1.3, 0.2).unwrap(), lg.value(1.3, 0.2).unwrap(), max_relative = 1e-13);
}

#[test]
fn scaling_map_refuses_wrong_q() {
    let quartic = instantiate(Family::CylQuartic, &Family::CylQuartic.default_params()).unwrap();
    assert!(scaling_map(&quartic, 0.7, 1.0, 0.0).is_err());
}

#[test]
fn mapped_solutions_keep_passing() {
    let seed = instantiate(Family::WeakPower, &params(&[("q", -0.25), ("sigma", -1.0), ("A", -1.0)])).unwrap();
    for lambda in [0.3, 1.0] {
        let m = exceptional_map(&seed, lambda).unwrap();
        assert_eq!((m.f.clone(), m.g.clone()), (seed.f.clone(), seed.g.clone()));
        let rep = residual_sampled(&m, 300, 5).unwrap();
        assert!(rep.max_rel <= 1e-9, "{lambda}: {rep:?}");
    }
    let wp = instantiate(Family::WeakPower, &Family::WeakPower.default_params()).unwrap();
    let m = scaling_map(&wp, 0.3, -0.5, 0.0).unwrap();
    assert!(residual_sampled(&m, 300, 5).unwrap().max_rel <= 1e-9);
}

fn sum(a: &PointGenerator, b: &PointGenerator, c: &PointGenerator) -> PointGenerator {
    PointGenerator::new(
        "sum",
        a.xi_r.clone() + b.xi_r.clone() + c.xi_r.clone(),
        a.xi_z.clone() + b.xi_z.clone() + c.xi_z.clone(),
        a.eta.clone() + b.eta.clone() + c.eta.clone(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weak_family_round_trips_through_dshape_params(amp in -5.0f64..-0.05, sigma in -8.0f64..-0.01) {
        let (_, _, a, b) = weak_family(-0.25, amp, sigma).unwrap();
        let (a2, s2) = dshape_params_from(a, b).unwrap();
        prop_assert!((a2 - amp).abs() <= 1e-12 * amp.abs());
        prop_assert!((s2 - sigma).abs() <= 1e-12 * sigma.abs().max(1.0));
    }

    #[test]
    fn weak_pairs_classify_as_power_family(
        q in prop::sample::select(vec![-2.0, -1.5, -0.75, -0.5, -0.25, 0.5, 1.0, 2.0, 3.0]),
        amp in 0.1f64..3.0,
        sigma in prop::sample::select(vec![-3.0, -1.0, -0.5, 2.0, 4.0]),
    ) {
        let (f, g, _, _) = weak_family(q, amp, sigma).unwrap();
        let tags: Vec<Tag> = classify(&f, &g).iter().map(|c| c.tag).collect();
        let want = if q == -0.25 { Tag::ADoublePrime } else { Tag::A };
        prop_assert!(tags.contains(&want), "{tags:?}");
    }

    #[test]
    fn printing_round_trips(a in -9i64..9, c in -4i64..4, p in -8i64..8) {
        prop_assume!(a != 0);
        let text = format!("{a}*(psi + {c})^({p})");
        let spec = parse_profile(&text, Role::F).unwrap();
        let again = parse_profile(&spec.to_string(), Role::F).unwrap();
        prop_assert_eq!(&spec, &again);
    }

    #[test]
    fn canonical_and_raw_evaluation_agree(a in -3.0f64..3.0, c in 0.0f64..2.0, psi in 0.2f64..3.0) {
        let text = format!("{a}*(psi + {c})^3 - 2*exp(psi)");
        let spec = parse_profile(&text, Role::G).unwrap();
        let raw = gs_core::expr::parse(&text).unwrap().eval_psi(psi).unwrap();
        let v = spec.eval(psi).unwrap();
        prop_assert!((v - raw).abs() <= 4.0 * f64::EPSILON * raw.abs().max(1.0));
    }

    #[test]
    fn jacobi_identity(i in 0usize..12, j in 0usize..12, k in 0usize..12) {
        let b = builtins();
        let (x, y, z) = (&b[i], &b[j], &b[k]);
        let total = sum(
            &commutator(x, &commutator(y, z)),
            &commutator(y, &commutator(z, x)),
            &commutator(z, &commutator(x, y)),
        );
        let d = max_difference(&total, &PointGenerator::zero(), 50, 7).unwrap();
        prop_assert!(d <= 1e-9, "{} {} {}: {d}", x.label, y.label, z.label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn exceptional_map_is_a_one_parameter_group(l1 in -0.4f64..0.4, l2 in -0.4f64..0.4) {
        let seed = instantiate(Family::WeakPower, &params(&[("q", -0.25), ("sigma", -1.0), ("A", -1.0)])).unwrap();
        let two = exceptional_map(&exceptional_map(&seed, l1).unwrap(), l2).unwrap();
        let one = exceptional_map(&seed, l1 + l2).unwrap();
        let mut checked = 0;
        for k in 0..400 {
            let r = 0.3 + 2.5 * ((k * 37 % 101) as f64 / 101.0);
            let z = -1.5 + 3.0 * ((k * 53 % 97) as f64 / 97.0);
            if let (Ok(a), Ok(b)) = (two.value(r, z), one.value(r, z)) {
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-3), "({r}, {z}): {a} vs {b}");
                checked += 1;
            }
        }
        prop_assert!(checked >= 100);
    }
}
