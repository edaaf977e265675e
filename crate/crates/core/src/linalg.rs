//! Dense vector and symmetric-matrix primitives.
//!
//! Feature dimensions in the target workloads are small (p <= 60), so
//! everything is stored dense and the covariance path costs O(p^2) per
//! update without any sparse machinery.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A fixed-dimension dense vector of finite 64-bit floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { context: "Vector::new" });
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.0[i] = value;
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Vector, factor: f64) -> Result<()> {
        check_dim(self.dim(), other.dim())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.0 {
            *a *= factor;
        }
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|e| e.is_finite())
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// A p-by-p symmetric matrix stored dense; `get(i, j) == get(j, i)` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from row-major entries, rejecting asymmetric or non-finite input.
    pub fn from_rows(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { context: "SymMatrix::from_rows" });
        }
        for i in 0..dim {
            for j in 0..i {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::InvalidConfig(format!(
                        "asymmetric entries at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.dim + j] = value;
        self.entries[j * self.dim + i] = value;
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            *e *= factor;
        }
    }

    /// `self += factor * v v^T`.
    pub fn add_outer(&mut self, v: &Vector, factor: f64) -> Result<()> {
        check_dim(self.dim, v.dim())?;
        for i in 0..self.dim {
            let vi = v.get(i);
            for j in 0..self.dim {
                self.entries[i * self.dim + j] += factor * vi * v.get(j);
            }
        }
        Ok(())
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &SymMatrix, factor: f64) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Replaces the entries with `(M + M^T) / 2`, restoring exact symmetry
    /// after rank-one arithmetic.
    pub fn resymmetrize(&mut self) {
        for i in 0..self.dim {
            for j in 0..i {
                let avg = 0.5 * (self.entries[i * self.dim + j] + self.entries[j * self.dim + i]);
                self.entries[i * self.dim + j] = avg;
                self.entries[j * self.dim + i] = avg;
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Inner product of two equal-dimension vectors.
pub fn dot(u: &Vector, v: &Vector) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    Ok(u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a * b).sum())
}

/// Quadratic form `w^T M w`.
///
/// Covariance matrices built by this crate are PSD up to round-off, and the
/// surrogate losses take a square root of this value, so a tiny negative
/// result (within `1e-12 * ||w||^2 * trace(M)`) is clamped to zero.
pub fn quad_form(m: &SymMatrix, w: &Vector) -> Result<f64> {
    check_dim(m.dim(), w.dim())?;
    let mut acc = 0.0;
    for i in 0..m.dim() {
        let mut row = 0.0;
        for j in 0..m.dim() {
            row += m.get(i, j) * w.get(j);
        }
        acc += w.get(i) * row;
    }
    if acc < 0.0 {
        let w2 = w.as_slice().iter().map(|a| a * a).sum::<f64>();
        let tol = 1e-12 * w2 * m.trace().max(0.0);
        if acc >= -tol {
            acc = 0.0;
        }
    }
    Ok(acc)
}

/// Matrix-vector product `M w`.
pub fn matvec(m: &SymMatrix, w: &Vector) -> Result<Vector> {
    check_dim(m.dim(), w.dim())?;
    let mut out = Vector::zeros(m.dim());
    for i in 0..m.dim() {
        let mut row = 0.0;
        for j in 0..m.dim() {
            row += m.get(i, j) * w.get(j);
        }
        out.set(i, row);
    }
    Ok(out)
}
