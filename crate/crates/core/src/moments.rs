//! Running first- and second-order statistics for one class.
//!
//! The covariance uses population normalization (divide by N, no Bessel
//! correction) and is updated by the exact rank-one recursions
//!
//! ```text
//! xbar_t  = xbar_{t-1} + (x - xbar_{t-1}) / N_t
//! Sigma_t = Sigma_{t-1} + xbar_{t-1} xbar_{t-1}^T - xbar_t xbar_t^T
//!           + (x x^T - Sigma_{t-1} - xbar_{t-1} xbar_{t-1}^T) / N_t
//! ```
//!
//! followed by a `(M + M^T)/2` resymmetrization so `quad_form` never drifts
//! off the PSD contract.

use serde::{Deserialize, Serialize};

use crate::linalg::{SymMatrix, Vector};
use crate::{Error, Result};

/// Count, mean and covariance of every instance of one class seen so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMoments {
    count: usize,
    mean: Vector,
    cov: SymMatrix,
}

impl ClassMoments {
    /// Zero moments: count 0, zero mean, zero covariance.
    pub fn empty(dim: usize) -> Self {
        Self { count: 0, mean: Vector::zeros(dim), cov: SymMatrix::zeros(dim) }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// Folds one observation into the running statistics.
    pub fn update(&mut self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        self.count += 1;
        let n = self.count as f64;
        let old_mean = self.mean.clone();
        self.mean.add_scaled(&x.sub(&old_mean)?, 1.0 / n)?;

        // Sigma_t = (1 - 1/n) (Sigma_{t-1} + xbar_{t-1} xbar_{t-1}^T)
        //           - xbar_t xbar_t^T + x x^T / n
        self.cov.scale(1.0 - 1.0 / n);
        self.cov.add_outer(&old_mean, 1.0 - 1.0 / n)?;
        self.cov.add_outer(&self.mean, -1.0)?;
        self.cov.add_outer(x, 1.0 / n)?;
        self.cov.resymmetrize();
        Ok(())
    }

    /// Recomputes the same statistics from a full point list in one pass over
    /// the definition; the verification oracle for [`ClassMoments::update`].
    pub fn batch_recompute(dim: usize, points: &[Vector]) -> Result<Self> {
        let mut mean = Vector::zeros(dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        if points.is_empty() {
            return Ok(Self::empty(dim));
        }
        let n = points.len() as f64;
        for p in points {
            mean.add_scaled(p, 1.0 / n)?;
        }
        let mut cov = SymMatrix::zeros(dim);
        for p in points {
            cov.add_outer(&p.sub(&mean)?, 1.0 / n)?;
        }
        cov.resymmetrize();
        Ok(Self { count: points.len(), mean, cov })
    }
}
