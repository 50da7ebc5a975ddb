//! Point-symmetry generators on `(r, z, psi)` and the finite maps that send
//! solutions to solutions.

mod maps;

pub use maps::{exceptional_map, exp_case_map, scaling_map, MapError};

use crate::expr::{DomainError, Expr, Var};
use crate::profiles::approx_number;
use crate::solution::{FieldError, FluxField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// `xi_r d/dr + xi_z d/dz + eta d/dpsi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGenerator {
    pub label: String,
    pub xi_r: Expr,
    pub xi_z: Expr,
    pub eta: Expr,
}

/// Default seed for randomized generator comparisons.
pub const COMPARE_SEED: u64 = 0x5eed_0001;

fn k(x: f64) -> Expr {
    Expr::Num(approx_number(x))
}

impl PointGenerator {
    pub fn new(label: impl Into<String>, xi_r: Expr, xi_z: Expr, eta: Expr) -> Self {
        Self {
            label: label.into(),
            xi_r,
            xi_z,
            eta,
        }
    }

    pub fn zero() -> Self {
        Self::new("0", Expr::int(0), Expr::int(0), Expr::int(0))
    }

    /// `d/dz`.
    pub fn z_translate() -> Self {
        Self::new("Z_TRANSLATE", Expr::int(0), Expr::int(1), Expr::int(0))
    }

    /// `psi d/dpsi`.
    pub fn scale_psi() -> Self {
        Self::new("SCALE_PSI", Expr::int(0), Expr::int(0), Expr::psi())
    }

    /// `r d/dr + z d/dz`.
    pub fn scale_rz() -> Self {
        Self::new("SCALE_RZ", Expr::r(), Expr::z(), Expr::int(0))
    }

    pub fn x1(q: f64) -> Self {
        Self::new(format!("X1(q={q})"), Expr::r(), Expr::z(), k(-2.0 * q) * Expr::psi())
    }

    pub fn x1_prime(q: f64, c: f64) -> Self {
        Self::new(
            format!("X1'(q={q},c={c})"),
            Expr::r(),
            Expr::z(),
            k(-2.0 * q) * (Expr::psi() + k(c)),
        )
    }

    /// Extra generator of the exceptional case.
    pub fn x_exceptional(c: f64) -> Self {
        Self::new(
            format!("X''(c={c})"),
            Expr::int(2) * Expr::r() * Expr::z(),
            Expr::z().powi(2) - Expr::r().powi(2),
            Expr::z() * (Expr::psi() + k(c)),
        )
    }

    pub fn x2(c: f64) -> Self {
        Self::new(format!("X2(c={c})"), Expr::r(), Expr::z(), k(-2.0 / c))
    }

    /// Conditional generator for `G = kappa^2 F`.
    pub fn y_cond_kappa(kappa: f64) -> Self {
        Self::new(format!("Y_COND_KAPPA(kappa={kappa})"), k(kappa), Expr::r(), Expr::int(0))
    }

    /// Conditional rotation for `F = 0`.
    pub fn y_rot() -> Self {
        Self::new("Y_ROT", Expr::z(), -Expr::r(), Expr::int(0))
    }

    /// Weak conditional generator.
    pub fn y_weak(sigma: f64) -> Self {
        Self::new(format!("Y_WEAK(sigma={sigma})"), Expr::z(), -(k(sigma) * Expr::r()), Expr::int(0))
    }

    /// Whether this generator admits a finite solution map. Conditional
    /// generators only feed reductions.
    pub fn is_conditional(&self) -> bool {
        self.label.starts_with('Y')
    }

    /// Applies the vector field to a function of `(r, z, psi)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.xi_r.clone() * f.diff(Var::R) + self.xi_z.clone() * f.diff(Var::Z) + self.eta.clone() * f.diff(Var::Psi)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(
            format!("{s}*{}", self.label),
            k(s) * self.xi_r.clone(),
            k(s) * self.xi_z.clone(),
            k(s) * self.eta.clone(),
        )
    }

    pub fn components(&self) -> [&Expr; 3] {
        [&self.xi_r, &self.xi_z, &self.eta]
    }

    pub fn eval(&self, r: f64, z: f64, psi: f64) -> Result<[f64; 3], DomainError> {
        Ok([
            self.xi_r.eval(r, z, psi)?,
            self.xi_z.eval(r, z, psi)?,
            self.eta.eval(r, z, psi)?,
        ])
    }

    /// `eta - xi_r psi_r - xi_z psi_z` on a flux field; zero where the
    /// field is invariant.
    pub fn invariance_defect(&self, field: &dyn FluxField, r: f64, z: f64) -> Result<f64, FieldError> {
        let j = field.jet(r, z)?;
        let [xr, xz, eta] = self.eval(r, z, j.value)?;
        Ok(eta - xr * j.d_r - xz * j.d_z)
    }
}

impl fmt::Display for PointGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = ({}, {}, {})", self.label, self.xi_r, self.xi_z, self.eta)
    }
}

/// Lie bracket `[V, W]^i = V(W^i) - W(V^i)`.
pub fn commutator(v: &PointGenerator, w: &PointGenerator) -> PointGenerator {
    let comp = |a: &Expr, b: &Expr| v.apply(a) - w.apply(b);
    PointGenerator::new(
        format!("[{}, {}]", v.label, w.label),
        comp(&w.xi_r, &v.xi_r),
        comp(&w.xi_z, &v.xi_z),
        comp(&w.eta, &v.eta),
    )
}

/// Largest component difference over `n` random points of
/// `r in [0.2, 3], z in [-2, 2], psi in [0.2, 3]`.
pub fn max_difference(v: &PointGenerator, w: &PointGenerator, n: usize, seed: u64) -> Result<f64, DomainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let (r, z, psi) = (rng.gen_range(0.2..3.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
        let a = v.eval(r, z, psi)?;
        let b = w.eval(r, z, psi)?;
        for i in 0..3 {
            worst = worst.max((a[i] - b[i]).abs());
        }
    }
    Ok(worst)
}

/// Generator equality by evaluation at 50 seeded random points, `1e-10` absolute.
pub fn generators_equal(v: &PointGenerator, w: &PointGenerator) -> bool {
    max_difference(v, w, 50, COMPARE_SEED).is_ok_and(|d| d <= 1e-10)
}

/// All built-in generators with representative parameters.
pub fn builtins() -> Vec<PointGenerator> {
    vec![
        PointGenerator::z_translate(),
        PointGenerator::scale_psi(),
        PointGenerator::scale_rz(),
        PointGenerator::x1(1.0),
        PointGenerator::x1(-0.25),
        PointGenerator::x1_prime(0.5, 1.0),
        PointGenerator::x_exceptional(0.0),
        PointGenerator::x_exceptional(1.0),
        PointGenerator::x2(1.0),
        PointGenerator::y_cond_kappa(1.5),
        PointGenerator::y_rot(),
        PointGenerator::y_weak(-1.0),
    ]
}
