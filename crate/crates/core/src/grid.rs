//! Uniform `(r, z)` grids and sampled fields.

use crate::solution::FluxField;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid size {n_r}x{n_z} outside [5, 4096]")]
    Size { n_r: usize, n_z: usize },
    #[error("degenerate grid bounds")]
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_r: usize,
    pub n_z: usize,
}

impl GridSpec {
    pub fn new(r: (f64, f64), z: (f64, f64), n_r: usize, n_z: usize) -> Result<Self, GridError> {
        let s = Self {
            r_min: r.0,
            r_max: r.1,
            z_min: z.0,
            z_max: z.1,
            n_r,
            n_z,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(5..=4096).contains(&self.n_r) || !(5..=4096).contains(&self.n_z) {
            return Err(GridError::Size {
                n_r: self.n_r,
                n_z: self.n_z,
            });
        }
        if !(self.r_min < self.r_max && self.z_min < self.z_max) || !self.r_min.is_finite() || !self.z_max.is_finite() {
            return Err(GridError::Bounds);
        }
        Ok(())
    }

    pub fn h_r(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n_r - 1) as f64
    }

    pub fn h_z(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_z - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + self.h_r() * i as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + self.h_z() * j as f64
    }

    /// Same bounds, spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            n_r: 2 * self.n_r - 1,
            n_z: 2 * self.n_z - 1,
            ..*self
        }
    }
}

/// Field samples indexed `[i_r, i_z]`; invalid points hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub psi: Array2<f64>,
    pub valid: Array2<bool>,
}

impl GridField {
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> Option<f64>) -> Self {
        let mut psi = Array2::from_elem((spec.n_r, spec.n_z), f64::NAN);
        let mut valid = Array2::from_elem((spec.n_r, spec.n_z), false);
        for i in 0..spec.n_r {
            for j in 0..spec.n_z {
                if let Some(v) = f(spec.r(i), spec.z(j)).filter(|v| v.is_finite()) {
                    psi[[i, j]] = v;
                    valid[[i, j]] = true;
                }
            }
        }
        Self { spec, psi, valid }
    }

    pub fn sample(field: &dyn FluxField, spec: GridSpec) -> Self {
        Self::from_fn(spec, |r, z| field.jet(r, z).ok().map(|j| j.value))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.valid[[i, j]].then(|| self.psi[[i, j]])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Finite min and max over valid points.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.psi.iter().zip(self.valid.iter()).filter(|(_, v)| **v).map(|(p, _)| *p);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p))))
    }

    /// Bilinear interpolation; `None` if any corner is invalid or the point is outside.
    pub fn interpolate(&self, r: f64, z: f64) -> Option<f64> {
        let s = &self.spec;
        let x = (r - s.r_min) / s.h_r();
        let y = (z - s.z_min) / s.h_z();
        if !(x >= 0.0 && y >= 0.0 && x <= (s.n_r - 1) as f64 && y <= (s.n_z - 1) as f64) {
            return None;
        }
        let i = (x.floor() as usize).min(s.n_r - 2);
        let j = (y.floor() as usize).min(s.n_z - 2);
        let (tx, ty) = (x - i as f64, y - j as f64);
        let v00 = self.get(i, j)?;
        let v10 = self.get(i + 1, j)?;
        let v01 = self.get(i, j + 1)?;
        let v11 = self.get(i + 1, j + 1)?;
        Some((1.0 - tx) * (1.0 - ty) * v00 + tx * (1.0 - ty) * v10 + (1.0 - tx) * ty * v01 + tx * ty * v11)
    }

    /// Applies `f` pointwise to valid samples.
    pub fn map(&self, f: impl Fn(f64, f64, f64) -> Option<f64>) -> Self {
        let mut out = self.clone();
        for i in 0..self.spec.n_r {
            for j in 0..self.spec.n_z {
                if self.valid[[i, j]] {
                    match f(self.spec.r(i), self.spec.z(j), self.psi[[i, j]]).filter(|v| v.is_finite()) {
                        Some(v) => out.psi[[i, j]] = v,
                        None => {
                            out.psi[[i, j]] = f64::NAN;
                            out.valid[[i, j]] = false;
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_bounds() {
        assert!(GridSpec::new((0.0, 1.0), (0.0, 1.0), 4, 10).is_err());
        assert!(GridSpec::new((1.0, 1.0), (0.0, 1.0), 10, 10).is_err());
        let s = GridSpec::new((0.0, 1.0), (-1.0, 1.0), 11, 21).unwrap();
        assert_eq!(s.h_r(), 0.1);
        assert_eq!(s.refined().n_r, 21);
    }

    #[test]
    fn bilinear_is_exact_for_bilinear_fields() {
        let s = GridSpec::new((0.0, 1.0), (0.0, 1.0), 6, 6).unwrap();
        let g = GridField::from_fn(s, |r, z| Some(1.0 + 2.0 * r - z + r * z));
        let v = g.interpolate(0.33, 0.71).unwrap();
        assert!((v - (1.0 + 0.66 - 0.71 + 0.33 * 0.71)).abs() < 1e-14);
    }
}
