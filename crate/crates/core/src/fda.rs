//! Functional samples and datasets as coefficient vectors on a shared basis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::Error;
use crate::grid::uniform_spacing;
use crate::Result;

/// One curve: a coefficient vector on a referenced basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalSample {
    coefficients: DVector<f64>,
    basis: Arc<BasisSpec>,
}

impl FunctionalSample {
    pub fn new(coefficients: DVector<f64>, basis: Arc<BasisSpec>) -> Result<Self> {
        if coefficients.len() != basis.num_basis() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient length {} does not match basis size {}",
                coefficients.len(),
                basis.num_basis()
            )));
        }
        Ok(Self {
            coefficients,
            basis,
        })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    /// Curve values `Phi(grid)^T c` at the given points.
    pub fn eval_on_grid(&self, grid: &[f64]) -> Result<DVector<f64>> {
        let phi = self.basis.evaluate_matrix(grid)?;
        Ok(phi * &self.coefficients)
    }
}

/// A collection of curves sharing one basis, stored as an `N x K`
/// coefficient matrix (one row per sample).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalDataset {
    coefficients: DMatrix<f64>,
    basis: Arc<BasisSpec>,
}

impl FunctionalDataset {
    pub fn from_rows(coefficients: DMatrix<f64>, basis: Arc<BasisSpec>) -> Result<Self> {
        if coefficients.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if coefficients.ncols() != basis.num_basis() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix has {} columns, basis has {} functions",
                coefficients.ncols(),
                basis.num_basis()
            )));
        }
        Ok(Self {
            coefficients,
            basis,
        })
    }

    pub fn from_samples(samples: &[FunctionalSample]) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let basis = first.basis().clone();
        if samples.iter().any(|s| s.basis().as_ref() != basis.as_ref()) {
            return Err(Error::BasisMismatch);
        }
        let mut coefficients = DMatrix::zeros(samples.len(), basis.num_basis());
        for (i, s) in samples.iter().enumerate() {
            coefficients
                .row_mut(i)
                .copy_from(&s.coefficients().transpose());
        }
        Self::from_rows(coefficients, basis)
    }

    pub fn n_samples(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    pub fn sample(&self, i: usize) -> FunctionalSample {
        FunctionalSample {
            coefficients: self.coefficients.row(i).transpose(),
            basis: self.basis.clone(),
        }
    }

    /// Coefficientwise mean curve. Exact by linearity of the expansion.
    pub fn mean_function(&self) -> FunctionalSample {
        let mean: RowDVector<f64> = self.coefficients.row_mean();
        FunctionalSample {
            coefficients: mean.transpose(),
            basis: self.basis.clone(),
        }
    }

    /// Subtracts the mean curve from every sample; returns the centered
    /// dataset together with the removed mean.
    pub fn center(&self) -> (FunctionalDataset, FunctionalSample) {
        let mean = self.mean_function();
        let mut centered = self.coefficients.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.coefficients().transpose();
        }
        (
            FunctionalDataset {
                coefficients: centered,
                basis: self.basis.clone(),
            },
            mean,
        )
    }

    /// Values of every sample on a grid, as an `N x J` matrix.
    pub fn eval_on_grid(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let phi = self.basis.evaluate_matrix(grid)?;
        Ok(&self.coefficients * phi.transpose())
    }

    /// Dataset restricted to the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut coefficients = DMatrix::zeros(indices.len(), self.coefficients.ncols());
        for (r, &i) in indices.iter().enumerate() {
            coefficients.row_mut(r).copy_from(&self.coefficients.row(i));
        }
        Ok(Self {
            coefficients,
            basis: self.basis.clone(),
        })
    }
}

/// L2 distance between two curves, approximated by a left-endpoint Riemann
/// sum on a uniformly spaced grid.
pub fn l2_distance(f: &FunctionalSample, g: &FunctionalSample, grid: &[f64]) -> Result<f64> {
    if f.basis().domain() != g.basis().domain() {
        let (a, b) = f.basis().domain();
        let (c, d) = g.basis().domain();
        return Err(Error::DomainMismatch(a, b, c, d));
    }
    let dt = uniform_spacing(grid)?;
    let fv = f.eval_on_grid(grid)?;
    let gv = g.eval_on_grid(grid)?;
    Ok(l2_distance_values(fv.as_slice(), gv.as_slice(), dt))
}

/// Riemann-sum L2 distance between two curves already evaluated on a uniform
/// grid with spacing `dt`. Uses the left endpoints of the `J - 1` intervals.
pub fn l2_distance_values(a: &[f64], b: &[f64], dt: f64) -> f64 {
    let n = a.len().min(b.len());
    let sum: f64 = (0..n.saturating_sub(1))
        .map(|j| {
            let d = a[j] - b[j];
            d * d
        })
        .sum();
    (sum * dt).sqrt()
}

/// Mean over samples of the L2 distance between matching rows of two
/// `N x J` value matrices on a uniform grid with spacing `dt`.
pub fn mean_l2_distance(truth: &DMatrix<f64>, pred: &DMatrix<f64>, dt: f64) -> f64 {
    let n = truth.nrows();
    let total: f64 = (0..n)
        .map(|i| {
            let a: Vec<f64> = truth.row(i).iter().cloned().collect();
            let b: Vec<f64> = pred.row(i).iter().cloned().collect();
            l2_distance_values(&a, &b, dt)
        })
        .sum();
    total / n as f64
}
