//! Explicit Runge-Kutta integration: adaptive Dormand-Prince 5(4) with PI
//! step control, a fixed-step RK4 fallback, and Hermite interpolation of the
//! resulting tables.

use crate::scalar::Scalar;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("tolerance {0:e} outside [1e-12, 1e-4]")]
    Tolerance(f64),
    #[error("step size underflow at t = {t} after {rejects} consecutive rejections")]
    StepFailure { t: f64, rejects: usize },
    #[error("step budget of {0} exhausted")]
    MaxSteps(usize),
    #[error("empty integration span")]
    EmptySpan,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Upper bound on `|h|`; `None` leaves it at the span length.
    pub h_max: Option<T>,
    pub max_steps: usize,
    pub max_rejects: usize,
    /// Integration stops, flagging the table, once any component exceeds this.
    pub blowup: T,
}

impl<T: Scalar> OdeOptions<T> {
    /// Equal relative and absolute tolerance `tol`, which must lie in `[1e-12, 1e-4]`.
    pub fn new(tol: f64) -> Result<Self, OdeError> {
        if !(1e-12..=1e-4).contains(&tol) {
            return Err(OdeError::Tolerance(tol));
        }
        Ok(Self {
            rtol: T::lit(tol),
            atol: T::lit(tol),
            h_max: None,
            max_steps: 1_000_000,
            max_rejects: 60,
            blowup: T::lit(1e12),
        })
    }

    pub fn with_h_max(mut self, h: f64) -> Self {
        self.h_max = Some(T::lit(h));
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integration samples with their derivatives, ordered by increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTable<T, const N: usize> {
    pub t: Vec<T>,
    pub y: Vec<[T; N]>,
    pub dy: Vec<[T; N]>,
    pub stats: OdeStats,
    pub tol: f64,
    /// Set when integration stopped early on blow-up.
    pub truncated: bool,
}

impl<T: Scalar, const N: usize> OdeTable<T, N> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn span(&self) -> (T, T) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn contains(&self, t: T) -> bool {
        !self.is_empty() && t >= self.t[0] && t <= self.t[self.t.len() - 1]
    }

    /// Interval index `k` with `t[k] <= t <= t[k + 1]`.
    pub fn locate(&self, t: T) -> Option<usize> {
        if !self.contains(t) || self.len() < 2 {
            return None;
        }
        let k = self.t.partition_point(|x| *x <= t);
        Some(k.saturating_sub(1).min(self.len() - 2))
    }

    /// Cubic Hermite dense output: state and its derivative at `t`.
    pub fn hermite(&self, t: T) -> Option<([T; N], [T; N])> {
        let k = self.locate(t)?;
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let mut p = [T::zero(); N];
        let mut d = [T::zero(); N];
        for i in 0..N {
            let (v, dv) = cubic_hermite(t, t0, t1, (self.y[k][i], self.dy[k][i]), (self.y[k + 1][i], self.dy[k + 1][i]));
            p[i] = v;
            d[i] = dv;
        }
        Some((p, d))
    }
}

/// Cubic Hermite value and slope on `[t0, t1]`.
pub fn cubic_hermite<T: Scalar>(t: T, t0: T, t1: T, a: (T, T), b: (T, T)) -> (T, T) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let six = T::lit(6.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    let v = h00 * a.0 + h10 * h * a.1 + h01 * b.0 + h11 * h * b.1;
    let d00 = six * s2 - six * s;
    let d10 = three * s2 - T::lit(4.0) * s + T::one();
    let d01 = six * s - six * s2;
    let d11 = three * s2 - two * s;
    let dv = (d00 * a.0 + d01 * b.0) / h + d10 * a.1 + d11 * b.1;
    (v, dv)
}

/// Quintic Hermite value, first and second derivative on `[t0, t1]` from
/// `(f, f', f'')` at both ends.
pub fn quintic_hermite<T: Scalar>(t: T, t0: T, t1: T, a: (T, T, T), b: (T, T, T)) -> (T, T, T) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let l = |x: f64| T::lit(x);
    // Basis polynomials in s as coefficient lists (ascending).
    const B: [[f64; 6]; 6] = [
        [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
        [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
        [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
        [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
        [0.0, 0.0, 0.0, -4.0, 7.0, -3.0],
        [0.0, 0.0, 0.0, 0.5, -1.0, 0.5],
    ];
    let w = [a.0, a.1 * h, a.2 * h * h, b.0, b.1 * h, b.2 * h * h];
    let (mut v, mut dv, mut d2v) = (T::zero(), T::zero(), T::zero());
    for (row, wk) in B.iter().zip(w) {
        let (mut p, mut dp, mut d2p) = (T::zero(), T::zero(), T::zero());
        for j in (0..6).rev() {
            p = p * s + l(row[j]);
            if j >= 1 {
                dp = dp * s + l(row[j] * j as f64);
            }
            if j >= 2 {
                d2p = d2p * s + l(row[j] * (j * (j - 1)) as f64);
            }
        }
        v = v + p * wk;
        dv = dv + dp * wk;
        d2v = d2v + d2p * wk;
    }
    (v, dv / h, d2v / (h * h))
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpy<T: Scalar, const N: usize>(y: &[T; N], h: T, k: &[[T; N]; 7], w: &[f64], upto: usize) -> [T; N] {
    let mut out = *y;
    for (s, ks) in k.iter().enumerate().take(upto) {
        let ws = w[s];
        if ws != 0.0 {
            for i in 0..N {
                out[i] = out[i] + h * T::lit(ws) * ks[i];
            }
        }
    }
    out
}

fn finite<T: Scalar, const N: usize>(y: &[T; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn finish<T: Scalar, const N: usize>(mut tab: OdeTable<T, N>) -> OdeTable<T, N> {
    if tab.t.len() > 1 && tab.t[0] > tab.t[1] {
        tab.t.reverse();
        tab.y.reverse();
        tab.dy.reverse();
    }
    tab
}

/// Adaptive Dormand-Prince 5(4) from `t0` to `t1` (either direction).
pub fn dopri5<T: Scalar, const N: usize>(
    mut f: impl FnMut(T, &[T; N]) -> [T; N],
    t0: T,
    y0: [T; N],
    t1: T,
    opts: &OdeOptions<T>,
) -> Result<OdeTable<T, N>, OdeError> {
    let span = t1 - t0;
    if span == T::zero() || !span.is_finite() {
        return Err(OdeError::EmptySpan);
    }
    let dir = span.signum();
    let h_max = opts.h_max.unwrap_or(span.abs()).min(span.abs());
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k = [[T::zero(); N]; 7];
    k[0] = f(t, &y);
    stats.evaluations += 1;
    let mut tab = OdeTable {
        t: vec![t],
        y: vec![y],
        dy: vec![k[0]],
        stats,
        tol: opts.rtol.to_f64().unwrap(),
        truncated: false,
    };

    let norm = |v: &[T; N], a: &[T; N], b: &[T; N]| -> T {
        let mut s = T::zero();
        for i in 0..N {
            let sc = opts.atol + opts.rtol * a[i].abs().max(b[i].abs());
            s = s + (v[i] / sc).powi(2);
        }
        (s / T::lit(N as f64)).sqrt()
    };

    // Initial step (Hairer, Norsett, Wanner).
    let zero = [T::zero(); N];
    let d0 = norm(&y, &y, &y);
    let d1 = norm(&k[0], &y, &y);
    let _ = zero;
    let mut h = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h = h.min(h_max);
    {
        let y1: [T; N] = std::array::from_fn(|i| y[i] + dir * h * k[0][i]);
        let f1 = f(t + dir * h, &y1);
        stats.evaluations += 1;
        let diff: [T; N] = std::array::from_fn(|i| f1[i] - k[0][i]);
        let d2 = norm(&diff, &y, &y) / h;
        let h1 = if d1.max(d2) <= T::lit(1e-15) {
            (h * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
        };
        h = (T::lit(100.0) * h).min(h1).min(h_max);
    }

    let beta = T::lit(0.04);
    let alpha = T::lit(0.2) - beta * T::lit(0.75);
    let mut err_prev = T::lit(1e-4);
    let mut rejects = 0usize;
    let mut last_rejected = false;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= T::epsilon() * t1.abs().max(T::one()) {
            break;
        }
        if stats.steps >= opts.max_steps {
            return Err(OdeError::MaxSteps(opts.max_steps));
        }
        let hs = h.min(remaining);
        let hd = dir * hs;
        for s in 1..7 {
            let ys = axpy(&y, hd, &k, &A[s], s);
            k[s] = f(t + T::lit(C[s]) * hd, &ys);
        }
        stats.evaluations += 6;
        let y_new = axpy(&y, hd, &k, &A[6], 6);
        let mut errv = [T::zero(); N];
        for (s, ks) in k.iter().enumerate() {
            for i in 0..N {
                errv[i] = errv[i] + hd * T::lit(E[s]) * ks[i];
            }
        }
        let err = norm(&errv, &y, &y_new);
        if !finite(&y_new) || !err.is_finite() || err > T::one() {
            stats.rejected += 1;
            rejects += 1;
            if rejects > opts.max_rejects || hs < T::lit(1e-14) * t.abs().max(T::one()) {
                return Err(OdeError::StepFailure {
                    t: t.to_f64().unwrap(),
                    rejects,
                });
            }
            let fac = if err.is_finite() {
                (T::lit(0.9) * err.powf(-T::lit(0.2))).max(T::lit(0.2))
            } else {
                T::lit(0.1)
            };
            h = hs * fac;
            last_rejected = true;
            continue;
        }
        rejects = 0;
        stats.steps += 1;
        t = if hs == remaining { t1 } else { t + hd };
        y = y_new;
        k[0] = k[6];
        tab.t.push(t);
        tab.y.push(y);
        tab.dy.push(k[0]);
        if y.iter().any(|v| v.abs() > opts.blowup) {
            tab.truncated = true;
            break;
        }
        let e = err.max(T::lit(1e-10));
        let mut fac = T::lit(0.9) * e.powf(-alpha) * err_prev.powf(beta);
        fac = fac.max(T::lit(0.2)).min(T::lit(10.0));
        if last_rejected {
            fac = fac.min(T::one());
        }
        err_prev = e;
        last_rejected = false;
        h = (hs * fac).min(h_max);
    }
    tab.stats = stats;
    Ok(finish(tab))
}

/// Classical RK4 with `n` equal steps.
pub fn rk4<T: Scalar, const N: usize>(mut f: impl FnMut(T, &[T; N]) -> [T; N], t0: T, y0: [T; N], t1: T, n: usize) -> OdeTable<T, N> {
    let n = n.max(1);
    let h = (t1 - t0) / T::lit(n as f64);
    let half = T::lit(0.5);
    let mut y = y0;
    let mut stats = OdeStats::default();
    let mut d = f(t0, &y);
    let mut tab = OdeTable {
        t: vec![t0],
        y: vec![y],
        dy: vec![d],
        stats,
        tol: 0.0,
        truncated: false,
    };
    for s in 0..n {
        let t = t0 + h * T::lit(s as f64);
        let k1 = d;
        let y2: [T; N] = std::array::from_fn(|i| y[i] + half * h * k1[i]);
        let k2 = f(t + half * h, &y2);
        let y3: [T; N] = std::array::from_fn(|i| y[i] + half * h * k2[i]);
        let k3 = f(t + half * h, &y3);
        let y4: [T; N] = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = f(t + h, &y4);
        y = std::array::from_fn(|i| y[i] + h / T::lit(6.0) * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]));
        let tn = if s + 1 == n { t1 } else { t + h };
        d = f(tn, &y);
        stats.steps += 1;
        stats.evaluations += 4;
        tab.t.push(tn);
        tab.y.push(y);
        tab.dy.push(d);
        if !finite(&y) || y.iter().any(|v| v.abs() > T::lit(1e12)) {
            tab.truncated = true;
            break;
        }
    }
    tab.stats = stats;
    finish(tab)
}

/// Monotone piecewise-cubic interpolant (Fritsch-Carlson) through `(x, y)`
/// with optional known slopes, limited where needed to preserve monotonicity.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` strictly increasing, at least two points.
    pub fn new(x: Vec<f64>, y: Vec<f64>, slopes: Option<Vec<f64>>) -> Option<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[0] < w[1])) {
            return None;
        }
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
        let mut m = match slopes {
            Some(s) if s.len() == n => s,
            _ => {
                let mut m = vec![0.0; n];
                m[0] = delta[0];
                m[n - 1] = delta[n - 2];
                for k in 1..n - 1 {
                    m[k] = if delta[k - 1] * delta[k] <= 0.0 {
                        0.0
                    } else {
                        0.5 * (delta[k - 1] + delta[k])
                    };
                }
                m
            }
        };
        for k in 0..n - 1 {
            if delta[k] == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            let a = m[k] / delta[k];
            let b = m[k + 1] / delta[k];
            if a < 0.0 {
                m[k] = 0.0;
            }
            if b < 0.0 {
                m[k + 1] = 0.0;
            }
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[k] = tau * a * delta[k];
                m[k + 1] = tau * b * delta[k];
            }
        }
        Some(Self { x, y, m })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let k = self.x.partition_point(|v| *v <= t).saturating_sub(1).min(self.x.len() - 2);
        Some(cubic_hermite(t, self.x[k], self.x[k + 1], (self.y[k], self.m[k]), (self.y[k + 1], self.m[k + 1])).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions::<f64>::new(1e-10).unwrap();
        let tab = dopri5(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &opts).unwrap();
        let (_, last) = tab.span();
        assert_eq!(last, 5.0);
        assert!((tab.y.last().unwrap()[0] - (-5.0f64).exp()).abs() < 1e-9);
        assert!(!tab.truncated);
    }

    #[test]
    fn backward_and_f32() {
        let opts = OdeOptions::<f32>::new(1e-5).unwrap();
        let tab = dopri5(|_, y: &[f32; 2]| [y[1], -y[0]], 1.0f32, [1.0f32.sin(), 1.0f32.cos()], 0.0, &opts).unwrap();
        assert_eq!(tab.t[0], 0.0);
        assert!(tab.y[0][0].abs() < 1e-4);
    }

    #[test]
    fn blowup_truncates() {
        let opts = OdeOptions::<f64>::new(1e-8).unwrap();
        let tab = dopri5(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &opts).unwrap();
        assert!(tab.truncated);
        assert!((tab.span().1 - 1.0).abs() < 1e-6, "{:?}", tab.span());
    }

    #[test]
    fn tolerance_bounds() {
        assert!(OdeOptions::<f64>::new(1e-3).is_err());
        assert!(OdeOptions::<f64>::new(1e-13).is_err());
    }

    #[test]
    fn rk4_order() {
        let err = |n| (rk4(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0, n).y.last().unwrap()[0] - 1f64.exp()).abs();
        let ratio = err(20) / err(40);
        assert!((ratio.log2() - 4.0).abs() < 0.2);
    }

    #[test]
    fn quintic_reproduces_quintics() {
        let p = |t: f64| (1.0 + 2.0 * t - t * t * t + 0.5 * t.powi(5), 2.0 - 3.0 * t * t + 2.5 * t.powi(4), -6.0 * t + 10.0 * t.powi(3));
        let (a, b) = (p(0.3), p(1.1));
        let (v, d, d2) = quintic_hermite(0.7, 0.3, 1.1, a, b);
        let e = p(0.7);
        assert!((v - e.0).abs() < 1e-13 && (d - e.1).abs() < 1e-12 && (d2 - e.2).abs() < 1e-11);
    }

    #[test]
    fn monotone_cubic_no_overshoot() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let m = MonotoneCubic::new(x, y, None).unwrap();
        for i in 0..=300 {
            let v = m.eval(i as f64 / 100.0).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(m.eval(3.5).is_none());
    }
}
