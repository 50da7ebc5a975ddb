//! Second-order truncated Taylor arithmetic in the two independents `(r, z)`.
//!
//! A [`Jet`] carries a value together with its exact first and second partial
//! derivatives. Arithmetic propagates the product and chain rules, so any
//! expression evaluated on jets seeded with [`Jet::r`] / [`Jet::z`] yields the
//! exact Hessian of that expression up to rounding. Second order is all the
//! flux operator needs.

use crate::scalar::Scalar;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Value and partial derivatives up to second order at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet<T> {
    pub value: T,
    pub d_r: T,
    pub d_z: T,
    pub d_rr: T,
    pub d_rz: T,
    pub d_zz: T,
}

impl<T: Scalar> Jet<T> {
    pub fn new(value: T, d_r: T, d_z: T, d_rr: T, d_rz: T, d_zz: T) -> Self {
        Self {
            value,
            d_r,
            d_z,
            d_rr,
            d_rz,
            d_zz,
        }
    }

    pub fn constant(value: T) -> Self {
        let o = T::zero();
        Self::new(value, o, o, o, o, o)
    }

    /// The coordinate `r` seeded at `r0`.
    pub fn r(r0: T) -> Self {
        let o = T::zero();
        Self::new(r0, T::one(), o, o, o, o)
    }

    /// The coordinate `z` seeded at `z0`.
    pub fn z(z0: T) -> Self {
        let o = T::zero();
        Self::new(z0, o, T::one(), o, o, o)
    }

    /// Both coordinate jets at `(r0, z0)`.
    pub fn seed(r0: T, z0: T) -> (Self, Self) {
        (Self::r(r0), Self::z(z0))
    }

    /// Composes a scalar function through this jet given `f`, `f'`, `f''` at `self.value`.
    #[inline]
    pub fn chain(self, f: T, df: T, d2f: T) -> Self {
        Self {
            value: f,
            d_r: df * self.d_r,
            d_z: df * self.d_z,
            d_rr: d2f * self.d_r * self.d_r + df * self.d_rr,
            d_rz: d2f * self.d_r * self.d_z + df * self.d_rz,
            d_zz: d2f * self.d_z * self.d_z + df * self.d_zz,
        }
    }

    pub fn scale(self, k: T) -> Self {
        Self {
            value: self.value * k,
            d_r: self.d_r * k,
            d_z: self.d_z * k,
            d_rr: self.d_rr * k,
            d_rz: self.d_rz * k,
            d_zz: self.d_zz * k,
        }
    }

    pub fn recip(self) -> Self {
        let inv = self.value.recip();
        let inv2 = inv * inv;
        self.chain(inv, -inv2, (T::one() + T::one()) * inv2 * inv)
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(T::one()),
            1 => self,
            _ => {
                let v = self.value;
                let nf = T::from_i32(n).unwrap();
                self.chain(
                    v.powi(n),
                    nf * v.powi(n - 1),
                    nf * (nf - T::one()) * v.powi(n - 2),
                )
            }
        }
    }

    /// Real power for a positive base.
    pub fn powf(self, p: T) -> Self {
        let v = self.value;
        let f = v.powf(p);
        let df = p * f / v;
        let d2f = p * (p - T::one()) * f / (v * v);
        self.chain(f, df, d2f)
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let half = T::lit(0.5);
        self.chain(s, half / s, -T::lit(0.25) / (s * self.value))
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), v.recip(), -(v * v).recip())
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn abs(self) -> Self {
        if self.value < T::zero() {
            -self
        } else {
            self
        }
    }

    /// Chain rule through a change of coordinates: `outer` holds derivatives
    /// with respect to `(u, v)` in its `r`/`z` slots, `u` and `v` are jets of
    /// the new coordinates in terms of `(r, z)`.
    pub fn compose(outer: Self, u: Self, v: Self) -> Self {
        let o = outer;
        let two = T::one() + T::one();
        Self {
            value: o.value,
            d_r: o.d_r * u.d_r + o.d_z * v.d_r,
            d_z: o.d_r * u.d_z + o.d_z * v.d_z,
            d_rr: o.d_rr * u.d_r * u.d_r
                + two * o.d_rz * u.d_r * v.d_r
                + o.d_zz * v.d_r * v.d_r
                + o.d_r * u.d_rr
                + o.d_z * v.d_rr,
            d_rz: o.d_rr * u.d_r * u.d_z
                + o.d_rz * (u.d_r * v.d_z + u.d_z * v.d_r)
                + o.d_zz * v.d_r * v.d_z
                + o.d_r * u.d_rz
                + o.d_z * v.d_rz,
            d_zz: o.d_rr * u.d_z * u.d_z
                + two * o.d_rz * u.d_z * v.d_z
                + o.d_zz * v.d_z * v.d_z
                + o.d_r * u.d_zz
                + o.d_z * v.d_zz,
        }
    }

    /// Gradient `(d_r, d_z)`.
    pub fn gradient(&self) -> (T, T) {
        (self.d_r, self.d_z)
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(
            self.value + o.value,
            self.d_r + o.d_r,
            self.d_z + o.d_z,
            self.d_rr + o.d_rr,
            self.d_rz + o.d_rz,
            self.d_zz + o.d_zz,
        )
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.value - o.value,
            self.d_r - o.d_r,
            self.d_z - o.d_z,
            self.d_rr - o.d_rr,
            self.d_rz - o.d_rz,
            self.d_zz - o.d_zz,
        )
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self::new(
            a.value * b.value,
            a.d_r * b.value + a.value * b.d_r,
            a.d_z * b.value + a.value * b.d_z,
            a.d_rr * b.value + (a.d_r * b.d_r + a.d_r * b.d_r) + a.value * b.d_rr,
            a.d_rz * b.value + a.d_r * b.d_z + a.d_z * b.d_r + a.value * b.d_rz,
            a.d_zz * b.value + (a.d_z * b.d_z + a.d_z * b.d_z) + a.value * b.d_zz,
        )
    }
}

impl<T: Scalar> Div for Jet<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Add<T> for Jet<T> {
    type Output = Self;
    fn add(mut self, k: T) -> Self {
        self.value = self.value + k;
        self
    }
}

impl<T: Scalar> Sub<T> for Jet<T> {
    type Output = Self;
    fn sub(mut self, k: T) -> Self {
        self.value = self.value - k;
        self
    }
}

impl<T: Scalar> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

impl<T: Scalar> Div<T> for Jet<T> {
    type Output = Self;
    fn div(self, k: T) -> Self {
        self.scale(k.recip())
    }
}

impl<T: Scalar> AddAssign for Jet<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Jet<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Jet<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

/// Numbers that can flow through the expression evaluator: plain scalars
/// (values only) and jets (values plus derivatives).
pub trait Differentiable<T: Scalar>:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: T) -> Self;
    fn value(&self) -> T;
    /// Applies a scalar function given its value and first two derivatives at `self.value()`.
    fn chain(self, f: T, df: T, d2f: T) -> Self;
}

impl<T: Scalar> Differentiable<T> for T {
    #[inline]
    fn constant(c: T) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> T {
        *self
    }
    #[inline]
    fn chain(self, f: T, _df: T, _d2f: T) -> Self {
        f
    }
}

impl<T: Scalar> Differentiable<T> for Jet<T> {
    #[inline]
    fn constant(c: T) -> Self {
        Jet::constant(c)
    }
    #[inline]
    fn value(&self) -> T {
        self.value
    }
    #[inline]
    fn chain(self, f: T, df: T, d2f: T) -> Self {
        Jet::chain(self, f, df, d2f)
    }
}
