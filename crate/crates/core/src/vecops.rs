//! Dense vectors and the two sign operators.

use std::ops::Index;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LionError, Result};
use crate::rng::RandomStream;

/// Dense real vector of fixed dimension.
///
/// Constructed from user data through [`Vector::new`], which rejects empty or
/// non-finite input. Arithmetic results are not re-checked; the optimizers
/// test finiteness once per step and report divergence with the step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LionError::InvalidInput("vector must have dim >= 1".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(LionError::InvalidInput(format!(
                "non-finite entry {} at index {k}",
                values[k]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn check_dim(&self, other: &Vector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(LionError::Shape {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// `a * x + b * y`, evaluated per coordinate in that order.
    pub fn axpby(a: f64, x: &Vector, b: f64, y: &Vector) -> Result<Vector> {
        x.check_dim(y)?;
        Ok(Vector(
            x.0.iter()
                .zip(&y.0)
                .map(|(xi, yi)| a * xi + b * yi)
                .collect(),
        ))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.check_dim(other)?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.check_dim(other)?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&self, a: f64) -> Vector {
        Vector(self.0.iter().map(|v| a * v).collect())
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Vector) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        Ok(())
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `||self - other||^2`.
    pub fn dist_sq(&self, other: &Vector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Vector over `{-1, 0, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_vector(&self) -> Vector {
        Vector(self.0.iter().map(|&s| f64::from(s)).collect())
    }

    pub fn norm_sq(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }

    pub fn linf(&self) -> i8 {
        self.0.iter().map(|s| s.abs()).max().unwrap_or(0)
    }
}

/// Componentwise sign with `sign(0) = 0` and strict comparison against zero.
pub fn sign(v: &Vector) -> Result<SignVector> {
    sign_slice(v.as_slice())
}

pub fn sign_slice(v: &[f64]) -> Result<SignVector> {
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            if x > 0.0 {
                Ok(1)
            } else if x < 0.0 {
                Ok(-1)
            } else if x == 0.0 {
                Ok(0)
            } else {
                Err(LionError::InvalidInput(format!(
                    "sign of non-finite entry {x} at index {k}"
                )))
            }
        })
        .collect::<Result<Vec<i8>>>()
        .map(SignVector)
}

/// Unbiased randomized sign `S_R`.
///
/// Coordinate `k` becomes `+1` with probability `(R + v_k) / (2R)` and `-1`
/// otherwise, so `E[out] = v / R`. One uniform draw per coordinate in index
/// order; `+1` iff `u < (R + v_k) / (2R)`.
pub fn unbiased_sign(v: &Vector, radius: f64, rng: &mut RandomStream) -> Result<SignVector> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LionError::InvalidParameter(format!(
            "unbiased sign radius must be positive and finite, got {radius}"
        )));
    }
    for (k, &x) in v.as_slice().iter().enumerate() {
        if !x.is_finite() {
            return Err(LionError::InvalidInput(format!(
                "unbiased sign of non-finite entry {x} at index {k}"
            )));
        }
        if x.abs() > radius {
            return Err(LionError::Range {
                index: k,
                value: x.abs(),
                radius,
                context: String::new(),
            });
        }
    }
    let two_r = 2.0 * radius;
    Ok(SignVector(
        v.as_slice()
            .iter()
            .map(|&x| {
                let u: f64 = rng.gen();
                if u < (radius + x) / two_r {
                    1
                } else {
                    -1
                }
            })
            .collect(),
    ))
}
