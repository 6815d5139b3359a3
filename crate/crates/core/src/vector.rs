//! Dense real vectors used for iterates, gradients and comparators.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-empty point in `R^d` with the Euclidean geometry.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyVector);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector coordinates".into(),
            });
        }
        Ok(Vector(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be positive");
        Vector(vec![0.0; dim])
    }

    pub fn scalar(x: f64) -> Self {
        Vector(vec![x])
    }

    /// `scale * e_1` in `dim` dimensions.
    pub fn basis(dim: usize, scale: f64) -> Self {
        let mut v = Self::zeros(dim);
        v.0[0] = scale;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    /// Euclidean norm, computed with scaling so that large coordinates do not overflow.
    pub fn norm(&self) -> f64 {
        let max = self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if max == 0.0 || !max.is_finite() {
            return max;
        }
        let s: f64 = self.0.iter().map(|c| (c / max) * (c / max)).sum();
        max * s.sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add_assign(&mut self, other: &Vector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn direction(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}
