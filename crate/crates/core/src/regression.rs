//! Function-on-function linear regression with closed-form maximum-likelihood
//! estimation.
//!
//! With the response expanded as `y_i(t) = c_i' Phi(t)` and predictor m as
//! `x_im(s) = d_im' Psi_m(s)`, the model reduces to a multivariate linear
//! regression of the coefficient rows: `C = Z B + E`, where row i of `Z`
//! concatenates `d_im' zeta_m` over predictors and `zeta_m` is the Gram
//! matrix of predictor m's basis. The ML estimate is the least-squares
//! solution `B = Z^+ C` (generalized inverse, so rank deficiency never
//! aborts) with `Sigma = (C - Z B)'(C - Z B) / N`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::Error;
use crate::fda::{FunctionalDataset, FunctionalSample};
use crate::linalg::solve_least_squares;
use crate::Result;

/// Design matrix for a function-on-function fit, with everything needed to
/// rebuild rows for new data: predictor bases, Gram matrices, and the means
/// removed by centering.
#[derive(Debug, Clone)]
pub struct FofDesign {
    matrix: DMatrix<f64>,
    bases: Vec<Arc<BasisSpec>>,
    grams: Vec<DMatrix<f64>>,
    means: Vec<FunctionalSample>,
}

impl FofDesign {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn predictor_means(&self) -> &[FunctionalSample] {
        &self.means
    }

    pub fn grams(&self) -> &[DMatrix<f64>] {
        &self.grams
    }
}

/// Assembles `[D_1 G_1 | ... | D_M G_M]` from coefficient blocks and their
/// Gram matrices.
pub fn assemble_design(blocks: &[DMatrix<f64>], grams: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if blocks.is_empty() || blocks.len() != grams.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient blocks vs {} Gram matrices",
            blocks.len(),
            grams.len()
        )));
    }
    let n = blocks[0].nrows();
    let total: usize = grams.iter().map(|g| g.ncols()).sum();
    let mut z = DMatrix::zeros(n, total);
    let mut offset = 0;
    for (block, gram) in blocks.iter().zip(grams) {
        if block.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "predictor block has {} samples, expected {n}",
                block.nrows()
            )));
        }
        if block.ncols() != gram.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "predictor block has {} coefficients but its Gram matrix is {}x{}",
                block.ncols(),
                gram.nrows(),
                gram.ncols()
            )));
        }
        z.columns_mut(offset, gram.ncols()).copy_from(&(block * gram));
        offset += gram.ncols();
    }
    Ok(z)
}

/// Centers each predictor dataset and assembles the stacked design matrix.
pub fn build_design(predictors: &[FunctionalDataset]) -> Result<FofDesign> {
    if predictors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = predictors[0].n_samples();
    if predictors.iter().any(|p| p.n_samples() != n) {
        return Err(Error::DimensionMismatch(format!(
            "predictor sample counts differ: {:?}",
            predictors.iter().map(|p| p.n_samples()).collect::<Vec<_>>()
        )));
    }
    let mut blocks = Vec::with_capacity(predictors.len());
    let mut grams = Vec::with_capacity(predictors.len());
    let mut means = Vec::with_capacity(predictors.len());
    let mut bases = Vec::with_capacity(predictors.len());
    for p in predictors {
        let (centered, mean) = p.center();
        grams.push(p.basis().gram_matrix());
        blocks.push(centered.coefficients().clone());
        means.push(mean);
        bases.push(p.basis().clone());
    }
    let matrix = assemble_design(&blocks, &grams)?;
    Ok(FofDesign {
        matrix,
        bases,
        grams,
        means,
    })
}

/// A fitted function-on-function model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FofFit {
    b_hat: DMatrix<f64>,
    sigma_hat: DMatrix<f64>,
    response_mean: FunctionalSample,
    predictor_means: Vec<FunctionalSample>,
    predictor_bases: Vec<Arc<BasisSpec>>,
    grams: Vec<DMatrix<f64>>,
    response_basis: Arc<BasisSpec>,
    log_likelihood: Option<f64>,
}

/// Maximum-likelihood fit of the response dataset on a prepared design.
///
/// The response is centered internally; its mean is stored on the fit so
/// predictions can add it back.
pub fn fit_ml(design: &FofDesign, response: &FunctionalDataset) -> Result<FofFit> {
    let n = design.matrix.nrows();
    if response.n_samples() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, response has {} samples",
            response.n_samples()
        )));
    }
    let (centered, response_mean) = response.center();
    let c = centered.coefficients();
    let z = &design.matrix;
    let b_hat = solve_least_squares(z, c);
    let resid = c - z * &b_hat;
    let scatter = resid.transpose() * &resid;
    let sigma_hat = &scatter / n as f64;

    // Gaussian log-likelihood at the optimum; absent when Sigma is singular,
    // which happens on noiseless data.
    let log_likelihood = nalgebra::Cholesky::new(sigma_hat.clone()).map(|chol| {
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let trace = chol.solve(&scatter).trace();
        -0.5 * n as f64 * log_det - 0.5 * trace
    });

    Ok(FofFit {
        b_hat,
        sigma_hat,
        response_mean,
        predictor_means: design.means.clone(),
        predictor_bases: design.bases.clone(),
        grams: design.grams.clone(),
        response_basis: response.basis().clone(),
        log_likelihood,
    })
}

impl FofFit {
    pub fn b_hat(&self) -> &DMatrix<f64> {
        &self.b_hat
    }

    pub fn sigma_hat(&self) -> &DMatrix<f64> {
        &self.sigma_hat
    }

    pub fn log_likelihood(&self) -> Option<f64> {
        self.log_likelihood
    }

    pub fn response_mean(&self) -> &FunctionalSample {
        &self.response_mean
    }

    pub fn predictor_means(&self) -> &[FunctionalSample] {
        &self.predictor_means
    }

    pub fn response_basis(&self) -> &Arc<BasisSpec> {
        &self.response_basis
    }

    pub fn grams(&self) -> &[DMatrix<f64>] {
        &self.grams
    }

    /// Predicted response coefficient rows for new predictor datasets,
    /// centered with the training means and shifted by the training response
    /// mean.
    pub fn predict_coefficients(&self, new_predictors: &[FunctionalDataset]) -> Result<DMatrix<f64>> {
        if new_predictors.len() != self.predictor_bases.len() {
            return Err(Error::DimensionMismatch(format!(
                "fit has {} predictors, got {}",
                self.predictor_bases.len(),
                new_predictors.len()
            )));
        }
        let n = new_predictors[0].n_samples();
        let mut blocks = Vec::with_capacity(new_predictors.len());
        for (m, p) in new_predictors.iter().enumerate() {
            if p.basis().as_ref() != self.predictor_bases[m].as_ref() {
                return Err(Error::BasisMismatch);
            }
            if p.n_samples() != n {
                return Err(Error::DimensionMismatch(
                    "new predictor sample counts differ".into(),
                ));
            }
            let mut block = p.coefficients().clone();
            for mut row in block.row_iter_mut() {
                row -= self.predictor_means[m].coefficients().transpose();
            }
            blocks.push(block);
        }
        let z_new = assemble_design(&blocks, &self.grams)?;
        let mut coefs = z_new * &self.b_hat;
        for mut row in coefs.row_iter_mut() {
            row += self.response_mean.coefficients().transpose();
        }
        Ok(coefs)
    }

    /// Predicted response curves for new predictor datasets.
    pub fn predict(&self, new_predictors: &[FunctionalDataset]) -> Result<FunctionalDataset> {
        let coefs = self.predict_coefficients(new_predictors)?;
        FunctionalDataset::from_rows(coefs, self.response_basis.clone())
    }

    /// The bivariate coefficient surface of predictor `m` at `(s, t)`:
    /// `Psi_m(s)' B_m Phi(t)`.
    pub fn coefficient_surface(&self, m: usize, s: f64, t: f64) -> Result<f64> {
        if m >= self.predictor_bases.len() {
            return Err(Error::PredictorIndexOutOfRange {
                index: m,
                count: self.predictor_bases.len(),
            });
        }
        let offset: usize = self.predictor_bases[..m]
            .iter()
            .map(|b| b.num_basis())
            .sum();
        let k_m = self.predictor_bases[m].num_basis();
        let psi = self.predictor_bases[m].evaluate(s)?;
        let phi = self.response_basis.evaluate(t)?;
        let block = self.b_hat.rows(offset, k_m);
        Ok((psi.transpose() * block * phi)[(0, 0)])
    }
}

/// Convenience wrapper: design construction plus ML fit in one call.
pub fn fit_fof(
    predictors: &[FunctionalDataset],
    response: &FunctionalDataset,
) -> Result<FofFit> {
    let design = build_design(predictors)?;
    fit_ml(&design, response)
}
