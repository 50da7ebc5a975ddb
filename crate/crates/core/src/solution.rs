//! Flux fields `psi(r, z)` with exact jets, validity domains and the
//! profile pair they solve.

use crate::expr::{DomainError, Expr};
use crate::jet::Jet;
use crate::profiles::ProfileSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type Jet64 = Jet<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("point ({r}, {z}) lies outside the validity domain")]
    OutOfDomain { r: f64, z: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("no sample points found inside the validity domain")]
    EmptyDomain,
}

/// A flux function with exact second-order derivatives.
pub trait FluxField: Send + Sync + fmt::Debug {
    /// Value and partials at `(r, z)`; fails outside the domain.
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError>;
    fn contains(&self, r: f64, z: f64) -> bool;
}

/// Closed-form field: an expression in `(r, z)` valid where every guard is
/// strictly positive and `r > 0`.
#[derive(Debug, Clone)]
pub struct ExprField {
    pub expr: Expr,
    pub guards: Vec<Expr>,
}

impl ExprField {
    pub fn new(expr: Expr, guards: Vec<Expr>) -> Self {
        Self { expr, guards }
    }
}

impl FluxField for ExprField {
    fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        if !self.contains(r, z) {
            return Err(FieldError::OutOfDomain { r, z });
        }
        let (jr, jz) = Jet::seed(r, z);
        Ok(self.expr.eval_with(jr, jz, Jet::constant(0.0))?)
    }

    fn contains(&self, r: f64, z: f64) -> bool {
        r > 0.0
            && self
                .guards
                .iter()
                .all(|g| g.eval(r, z, 0.0).map(|v| v > 0.0).unwrap_or(false))
    }
}

/// Axis-aligned box used to draw sample points; rejection against the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub r: (f64, f64),
    pub z: (f64, f64),
}

impl SampleBox {
    pub fn new(r: (f64, f64), z: (f64, f64)) -> Self {
        Self { r, z }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            r: (self.r.0 * k, self.r.1 * k),
            z: (self.z.0 * k, self.z.1 * k),
        }
    }
}

/// A solution family instance.
#[derive(Clone)]
pub struct Solution {
    /// Stable family name, or a description of how the field was derived.
    pub family: String,
    pub params: BTreeMap<String, f64>,
    /// Human-readable formula.
    pub formula: String,
    pub f: ProfileSpec,
    pub g: ProfileSpec,
    pub field: Arc<dyn FluxField>,
    pub sample: SampleBox,
}

impl fmt::Debug for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solution")
            .field("family", &self.family)
            .field("params", &self.params)
            .field("formula", &self.formula)
            .field("F", &self.f.to_string())
            .field("G", &self.g.to_string())
            .finish()
    }
}

impl Solution {
    pub fn jet(&self, r: f64, z: f64) -> Result<Jet64, FieldError> {
        self.field.jet(r, z)
    }

    pub fn value(&self, r: f64, z: f64) -> Result<f64, FieldError> {
        self.field.jet(r, z).map(|j| j.value)
    }

    pub fn contains(&self, r: f64, z: f64) -> bool {
        self.field.contains(r, z)
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// `n` in-domain points drawn from the sample box with a fixed seed.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>, FieldError> {
        sample_in(&*self.field, self.sample, n, seed)
    }
}

/// Rejection sampling inside `field`'s domain.
pub fn sample_in(field: &dyn FluxField, bx: SampleBox, n: usize, seed: u64) -> Result<Vec<(f64, f64)>, FieldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut tries = 0usize;
    while pts.len() < n {
        tries += 1;
        if tries > 2000 * n.max(1) {
            return Err(FieldError::EmptyDomain);
        }
        let r = rng.gen_range(bx.r.0..bx.r.1);
        let z = rng.gen_range(bx.z.0..bx.z.1);
        if field.contains(r, z) && field.jet(r, z).is_ok() {
            pts.push((r, z));
        }
    }
    Ok(pts)
}
