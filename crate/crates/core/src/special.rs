//! Sine/cosine integrals and Bessel functions of orders 0 and 1.
//!
//! Small arguments use power series; large arguments use the continued
//! fraction for `E1(ix)` (Si/Ci) or the Hankel asymptotic expansion (Bessel).

use crate::scalar::Scalar;
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{function}({x}) is outside the function domain ({requirement})")]
pub struct SpecialDomainError {
    pub function: &'static str,
    pub x: f64,
    pub requirement: &'static str,
}

fn domain_error<T: Scalar>(function: &'static str, x: T, requirement: &'static str) -> SpecialDomainError {
    SpecialDomainError {
        function,
        x: x.to_f64().unwrap_or(f64::NAN),
        requirement,
    }
}

/// Boundary between the Bessel power series and the asymptotic expansion.
const BESSEL_SWITCH: f64 = 12.0;
/// Boundary between the Si/Ci series and the continued fraction.
const SICI_SWITCH: f64 = 2.0;

/// `(Si(|x|), Ci(|x|))`, Ci undefined (NaN) at 0.
fn sici_abs<T: Scalar>(t: T) -> (T, T) {
    let eps = T::epsilon();
    if t == T::zero() {
        return (T::zero(), T::nan());
    }
    if t > T::lit(SICI_SWITCH) {
        // Lentz evaluation of the continued fraction for E1(i t).
        let one = T::one();
        let two = T::lit(2.0);
        let fpmin = T::min_positive_value() * T::lit(4.0);
        let mut b = Complex::new(one, t);
        let mut c = Complex::new(fpmin.recip(), T::zero());
        let mut d = Complex::new(one, T::zero()) / b;
        let mut h = d;
        for i in 2..400 {
            let im1 = T::from_i32(i - 1).unwrap();
            let a = -(im1 * im1);
            b = b + Complex::new(two, T::zero());
            d = Complex::new(one, T::zero()) / (d * a + b);
            c = b + Complex::new(a, T::zero()) / c;
            let del = c * d;
            h = h * del;
            if (del.re - one).abs() + del.im.abs() < eps {
                break;
            }
        }
        let (s, co) = t.sin_cos();
        let h = Complex::new(co, -s) * h;
        (T::FRAC_PI_2() + h.im, -h.re)
    } else {
        // Alternating series, even powers feed Ci and odd powers feed Si.
        let mut sums = T::zero();
        let mut sumc = T::zero();
        let mut fact = T::one();
        let mut sign = T::one();
        for k in 1..200 {
            let kf = T::from_i32(k).unwrap();
            fact = fact * t / kf;
            let term = fact / kf;
            if k % 2 == 1 {
                sums = sums + sign * term;
            } else {
                sumc = sumc - sign * term;
                sign = -sign;
            }
            if term < eps * (sums.abs() + sumc.abs()).max(eps) {
                break;
            }
        }
        (sums, sumc + t.ln() + T::euler_gamma())
    }
}

/// Sine integral `Si(x)`; odd in `x`.
pub fn si<T: Scalar>(x: T) -> T {
    let (s, _) = sici_abs(x.abs());
    if x < T::zero() {
        -s
    } else {
        s
    }
}

/// Cosine integral `Ci(x)` for `x > 0`.
pub fn ci<T: Scalar>(x: T) -> Result<T, SpecialDomainError> {
    if !(x > T::zero()) {
        return Err(domain_error("ci", x, "x > 0"));
    }
    Ok(sici_abs(x).1)
}

/// Hankel asymptotic `(P, Q)` pair for order `n`.
fn hankel_pq<T: Scalar>(n: i32, x: T) -> (T, T) {
    let mu = T::from_i32(4 * n * n).unwrap();
    let eight_x = T::lit(8.0) * x;
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut last = T::infinity();
    for k in 1..60 {
        let odd = T::from_i32(2 * k - 1).unwrap();
        term = term * (mu - odd * odd) / (T::from_i32(k).unwrap() * eight_x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // P collects even k with alternating sign, Q odd k.
        match k % 4 {
            1 => q = q + term,
            2 => p = p - term,
            3 => q = q - term,
            _ => p = p + term,
        }
        if term.abs() < T::epsilon() * T::lit(1e-2) {
            break;
        }
    }
    (p, q)
}

fn hankel_jy<T: Scalar>(n: i32, x: T) -> (T, T) {
    let (p, q) = hankel_pq(n, x);
    let chi = x - (T::lit(0.5) * T::from_i32(n).unwrap() + T::lit(0.25)) * T::PI();
    let (s, c) = chi.sin_cos();
    let amp = (T::lit(2.0) / (T::PI() * x)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// Series for `J0` and the harmonic-weighted companion used by `Y0`.
fn series_0<T: Scalar>(x: T) -> (T, T) {
    let y = x * x * T::lit(0.25);
    let mut term = T::one();
    let mut j = T::one();
    let mut h = T::zero();
    let mut harmonic = T::zero();
    for k in 1..200 {
        let kf = T::from_i32(k).unwrap();
        term = -term * y / (kf * kf);
        harmonic = harmonic + kf.recip();
        j = j + term;
        h = h - term * harmonic;
        if term.abs() < T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    (j, h)
}

/// Series for `J1` and the digamma-weighted companion used by `Y1`.
fn series_1<T: Scalar>(x: T) -> (T, T) {
    let half = x * T::lit(0.5);
    let y = half * half;
    let gamma = T::euler_gamma();
    // k = 0 term: (x/2) / (0! 1!)
    let mut term = half;
    let mut j = term;
    let mut psi_k1 = -gamma; // digamma(k + 1)
    let mut psi_k2 = T::one() - gamma; // digamma(k + 2)
    let mut s = (psi_k1 + psi_k2) * term;
    for k in 1..200 {
        let kf = T::from_i32(k).unwrap();
        term = -term * y / (kf * (kf + T::one()));
        psi_k1 = psi_k1 + kf.recip();
        psi_k2 = psi_k2 + (kf + T::one()).recip();
        j = j + term;
        s = s + (psi_k1 + psi_k2) * term;
        if term.abs() < T::epsilon() * T::lit(1e-3) * j.abs().max(T::epsilon()) {
            break;
        }
    }
    (j, s)
}

/// Bessel function of the first kind, order 0.
pub fn bessel_j0<T: Scalar>(x: T) -> T {
    let t = x.abs();
    if t > T::lit(BESSEL_SWITCH) {
        hankel_jy(0, t).0
    } else {
        series_0(t).0
    }
}

/// Bessel function of the first kind, order 1; odd in `x`.
pub fn bessel_j1<T: Scalar>(x: T) -> T {
    let t = x.abs();
    let j = if t > T::lit(BESSEL_SWITCH) {
        hankel_jy(1, t).0
    } else {
        series_1(t).0
    };
    if x < T::zero() {
        -j
    } else {
        j
    }
}

/// Bessel function of the second kind, order 0, for `x > 0`.
pub fn bessel_y0<T: Scalar>(x: T) -> Result<T, SpecialDomainError> {
    if !(x > T::zero()) {
        return Err(domain_error("y0", x, "x > 0"));
    }
    if x > T::lit(BESSEL_SWITCH) {
        return Ok(hankel_jy(0, x).1);
    }
    let (j, h) = series_0(x);
    let two_pi = T::lit(2.0) / T::PI();
    Ok(two_pi * ((x * T::lit(0.5)).ln() + T::euler_gamma()) * j + two_pi * h)
}

/// Bessel function of the second kind, order 1, for `x > 0`.
pub fn bessel_y1<T: Scalar>(x: T) -> Result<T, SpecialDomainError> {
    if !(x > T::zero()) {
        return Err(domain_error("y1", x, "x > 0"));
    }
    if x > T::lit(BESSEL_SWITCH) {
        return Ok(hankel_jy(1, x).1);
    }
    let (j, s) = series_1(x);
    let pi = T::PI();
    let two = T::lit(2.0);
    Ok(-two / (pi * x) + two / pi * (x / two).ln() * j - s / pi)
}

/// `(f, f', f'')` triples used when these functions appear inside jet expressions.
pub(crate) mod derivs {
    use super::*;

    pub fn si3<T: Scalar>(x: T) -> (T, T, T) {
        let f = si(x);
        if x.abs() < T::lit(1e-4) {
            let x2 = x * x;
            return (f, T::one() - x2 / T::lit(6.0), -x / T::lit(3.0));
        }
        let (s, c) = x.sin_cos();
        (f, s / x, (x * c - s) / (x * x))
    }

    pub fn ci3<T: Scalar>(x: T) -> Result<(T, T, T), SpecialDomainError> {
        let f = ci(x)?;
        let (s, c) = x.sin_cos();
        Ok((f, c / x, -s / x - c / (x * x)))
    }

    pub fn j0_3<T: Scalar>(x: T) -> (T, T, T) {
        let (_, d1, _) = j1_3(x);
        let j1 = bessel_j1(x);
        (bessel_j0(x), -j1, -d1)
    }

    pub fn j1_3<T: Scalar>(x: T) -> (T, T, T) {
        let j1 = bessel_j1(x);
        if x.abs() < T::lit(1e-4) {
            let x2 = x * x;
            return (j1, T::lit(0.5) - T::lit(3.0) * x2 / T::lit(16.0), -T::lit(3.0) * x / T::lit(8.0));
        }
        let d1 = bessel_j0(x) - j1 / x;
        (j1, d1, -d1 / x - (T::one() - (x * x).recip()) * j1)
    }

    pub fn y0_3<T: Scalar>(x: T) -> Result<(T, T, T), SpecialDomainError> {
        let y0 = bessel_y0(x)?;
        let y1 = bessel_y1(x)?;
        Ok((y0, -y1, -(y0 - y1 / x)))
    }

    pub fn y1_3<T: Scalar>(x: T) -> Result<(T, T, T), SpecialDomainError> {
        let y1 = bessel_y1(x)?;
        let d1 = bessel_y0(x)? - y1 / x;
        Ok((y1, d1, -d1 / x - (T::one() - (x * x).recip()) * y1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_values() {
        assert_eq!(si(0.0_f64), 0.0);
        assert_eq!(bessel_j1(0.0_f64), 0.0);
        assert_eq!(bessel_j0(0.0_f64), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(ci(0.0_f64).is_err());
        assert!(ci(-1.0_f64).is_err());
        assert!(bessel_y1(0.0_f64).is_err());
        assert!(bessel_y0(-2.0_f64).is_err());
    }

    #[test]
    fn si_is_odd() {
        for &x in &[0.3, 1.7, 2.0, 2.5, 9.0, 40.0] {
            assert_eq!(si(-x), -si(x));
        }
    }

    #[test]
    fn continuity_across_switch_points() {
        let below = |f: &dyn Fn(f64) -> f64, x: f64| (f(x - 1e-12) - f(x + 1e-12)).abs();
        assert!(below(&|x| si(x), SICI_SWITCH) < 1e-12);
        assert!(below(&|x| ci(x).unwrap(), SICI_SWITCH) < 1e-12);
        assert!(below(&|x| bessel_j1(x), BESSEL_SWITCH) < 1e-10);
        assert!(below(&|x| bessel_y1(x).unwrap(), BESSEL_SWITCH) < 1e-10);
        assert!(below(&|x| bessel_j0(x), BESSEL_SWITCH) < 1e-10);
        assert!(below(&|x| bessel_y0(x).unwrap(), BESSEL_SWITCH) < 1e-10);
    }

    #[test]
    fn derivative_triples_match_differences() {
        let h = 1e-5;
        for &x in &[0.5, 1.0, 3.0, 7.5, 14.0] {
            let checks: [(&dyn Fn(f64) -> (f64, f64, f64), &dyn Fn(f64) -> f64); 4] = [
                (&|x| derivs::si3(x), &|x| si(x)),
                (&|x| derivs::ci3(x).unwrap(), &|x| ci(x).unwrap()),
                (&|x| derivs::j1_3(x), &|x| bessel_j1(x)),
                (&|x| derivs::y1_3(x).unwrap(), &|x| bessel_y1(x).unwrap()),
            ];
            for (trip, f) in checks {
                let (_, d1, d2) = trip(x);
                let fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
                let fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                assert!((d1 - fd1).abs() < 1e-8, "x={x} d1={d1} fd={fd1}");
                assert!((d2 - fd2).abs() < 1e-4, "x={x} d2={d2} fd={fd2}");
            }
        }
    }
}
