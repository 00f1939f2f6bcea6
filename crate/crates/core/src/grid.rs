//! Evaluation-grid helpers.

use crate::error::Error;
use crate::Result;

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

pub fn is_strictly_increasing(grid: &[f64]) -> bool {
    grid.windows(2).all(|w| w[0] < w[1])
}

/// Returns the common spacing of a uniform grid, or an error if the spacing
/// varies by more than a small relative tolerance.
pub fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::NonUniformGrid);
    }
    let dt = grid[1] - grid[0];
    if dt <= 0.0 {
        return Err(Error::NonMonotonicGrid);
    }
    let span = grid[grid.len() - 1] - grid[0];
    let tol = 1e-8 * span.abs().max(1.0);
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > tol {
            return Err(Error::NonUniformGrid);
        }
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_both_endpoints() {
        let g = linspace(0.0, 1.0, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[99], 1.0);
        assert!(is_strictly_increasing(&g));
    }

    #[test]
    fn uniform_spacing_detects_irregular_grids() {
        assert!(uniform_spacing(&[0.0, 0.1, 0.2, 0.31]).is_err());
        let dt = uniform_spacing(&linspace(0.0, 1.0, 11)).unwrap();
        assert!((dt - 0.1).abs() < 1e-12);
    }
}
