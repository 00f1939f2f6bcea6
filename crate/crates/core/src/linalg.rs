//! Shared dense linear-algebra helpers.

use nalgebra::DMatrix;

/// Moore-Penrose pseudoinverse via SVD.
///
/// Singular values below `max(nrows, ncols) * eps * sigma_max` are treated as
/// zero, so rank-deficient systems yield the minimum-norm least-squares
/// solution instead of aborting.
pub(crate) fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max;
    svd.pseudo_inverse(tol)
        .expect("SVD was computed with both U and V")
}

/// Minimum-norm least-squares solution of `a x = b` for each column of `b`.
pub(crate) fn solve_least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    pseudo_inverse(a) * b
}
