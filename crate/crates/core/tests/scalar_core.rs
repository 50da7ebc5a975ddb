use gs_core::expr::parse;
use gs_core::special::{bessel_j1, bessel_y1, ci, si};
use gs_core::Jet;
use proptest::prelude::*;

/// Composite Gauss-Legendre (5 nodes) on [a, b] with `n` panels.
fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / n as f64;
    let mut s = 0.0;
    for k in 0..n {
        let m = a + (k as f64 + 0.5) * h;
        for i in 0..5 {
            s += W[i] * f(m + 0.5 * h * X[i]);
        }
    }
    s * 0.5 * h
}

fn si_oracle(x: f64) -> f64 {
    let sinc = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
    gauss(sinc, 0.0, x, 400)
}

fn ci_oracle(x: f64) -> f64 {
    let g = |t: f64| if t == 0.0 { 0.0 } else { (t.cos() - 1.0) / t };
    0.577_215_664_901_532_9 + x.ln() + gauss(g, 0.0, x, 400)
}

/// Bessel integral J1(x) = (1/pi) int_0^pi cos(t - x sin t) dt.
fn j1_oracle(x: f64) -> f64 {
    gauss(|t| (t - x * t.sin()).cos(), 0.0, std::f64::consts::PI, 200) / std::f64::consts::PI
}

/// Y1(x) = (1/pi) int_0^pi sin(x sin t - t) dt - (1/pi) int_0^inf 2 sinh(t) e^{-x sinh t} dt.
fn y1_oracle(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let a = gauss(|t| (x * t.sin() - t).sin(), 0.0, pi, 200);
    let upper = (60.0 / x).asinh() + 1.0;
    let b = gauss(|t| 2.0 * t.sinh() * (-x * t.sinh()).exp(), 0.0, upper, 400);
    (a - b) / pi
}

#[test]
fn sine_and_cosine_integrals_match_quadrature() {
    assert_eq!(si(0.0_f64), 0.0);
    assert!((ci(1.0_f64).unwrap() - 0.337_403_9).abs() < 1e-7);
    assert!((si(100.0_f64) - 1.562_226).abs() < 1e-6);
    let mut x = 0.05;
    while x <= 100.0 {
        assert!((si(x) - si_oracle(x)).abs() <= 1e-10, "si({x})");
        assert!((ci(x).unwrap() - ci_oracle(x)).abs() <= 1e-10, "ci({x})");
        x += 0.37;
    }
    assert!(ci(0.0_f64).is_err());
    assert!(ci(-2.0_f64).is_err());
}

#[test]
fn bessel_functions_match_integral_representations() {
    assert_eq!(bessel_j1(0.0_f64), 0.0);
    assert!((bessel_j1(1.0_f64) - 0.440_050_6).abs() < 1e-7);
    assert!((bessel_y1(1.0_f64).unwrap() + 0.781_212_8).abs() < 1e-7);
    let mut x = 0.1;
    while x <= 50.0 {
        assert!((bessel_j1(x) - j1_oracle(x)).abs() <= 1e-8, "j1({x})");
        assert!((bessel_y1(x).unwrap() - y1_oracle(x)).abs() <= 1e-8, "y1({x})");
        x += 0.173;
    }
    assert!(bessel_y1(0.0_f64).is_err());
}

#[test]
fn bessel_wronskian() {
    let d5 = |f: &dyn Fn(f64) -> f64, x: f64| {
        let h = 1e-3;
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    };
    let y1 = |x: f64| bessel_y1(x).unwrap();
    let mut x = 0.5;
    while x <= 20.0 {
        let dj = d5(&bessel_j1, x);
        let dy = d5(&y1, x);
        let w = bessel_j1(x) * dy - dj * bessel_y1(x).unwrap();
        let exact = 2.0 / (std::f64::consts::PI * x);
        assert!((w - exact).abs() <= 1e-8 * exact, "x = {x}: {w} vs {exact}");
        x += 0.25;
    }
}

#[test]
fn quarter_power_jet_matches_finite_differences() {
    let e = parse("(r^2 - z^2)^(1/4)").unwrap();
    let (r, z) = Jet::seed(2.0_f64, 1.0);
    let j = e.eval_with(r, z, Jet::constant(0.0)).unwrap();
    assert!((j.value - 1.316_074_012_952_492_4).abs() < 1e-15);
    let f = |r: f64, z: f64| e.eval(r, z, 0.0).unwrap();
    let h = 1e-5;
    let fr = (f(2.0 + h, 1.0) - f(2.0 - h, 1.0)) / (2.0 * h);
    let fz = (f(2.0, 1.0 + h) - f(2.0, 1.0 - h)) / (2.0 * h);
    assert!((fr - j.d_r).abs() <= 1e-6 * j.d_r.abs());
    assert!((fz - j.d_z).abs() <= 1e-6 * j.d_z.abs());
}

proptest! {
    #[test]
    fn si_is_odd(x in 0.0f64..100.0) {
        prop_assert_eq!(si(-x), -si(x));
    }

    #[test]
    fn product_jet_equals_jet_of_product(r0 in 0.5f64..3.0, z0 in -2.0f64..2.0) {
        let (r, z) = Jet::seed(r0, z0);
        let f = (r * z).sin();
        let g = (r + z * z).exp();
        let prod = f * g;
        let whole = parse("sin(r*z)*exp(r + z^2)").unwrap().eval_with(r, z, Jet::constant(0.0)).unwrap();
        for (a, b) in [
            (prod.value, whole.value), (prod.d_r, whole.d_r), (prod.d_z, whole.d_z),
            (prod.d_rr, whole.d_rr), (prod.d_rz, whole.d_rz), (prod.d_zz, whole.d_zz),
        ] {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0));
        }
    }
}
