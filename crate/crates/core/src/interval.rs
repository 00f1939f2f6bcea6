//! Interval-valued functional data: paired lower/upper limit curves on one
//! common basis, with derived center and half-range curves.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::Error;
use crate::fda::{FunctionalDataset, FunctionalSample};
use crate::Result;

/// One interval-valued curve: lower and upper limit functions sharing a basis.
#[derive(Debug, Clone)]
pub struct IntervalFunctionalSample {
    lower: FunctionalSample,
    upper: FunctionalSample,
}

impl IntervalFunctionalSample {
    pub fn new(lower: FunctionalSample, upper: FunctionalSample) -> Result<Self> {
        if lower.basis().as_ref() != upper.basis().as_ref() {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &FunctionalSample {
        &self.lower
    }

    pub fn upper(&self) -> &FunctionalSample {
        &self.upper
    }

    /// Center curve `(upper + lower) / 2`, exact in coefficient space because
    /// both limits share the basis.
    pub fn center_curve(&self) -> FunctionalSample {
        let c = (self.upper.coefficients() + self.lower.coefficients()) * 0.5;
        FunctionalSample::new(c, self.lower.basis().clone()).expect("same basis as limits")
    }

    /// Half-range curve `(upper - lower) / 2`.
    pub fn range_curve(&self) -> FunctionalSample {
        let r = (self.upper.coefficients() - self.lower.coefficients()) * 0.5;
        FunctionalSample::new(r, self.lower.basis().clone()).expect("same basis as limits")
    }
}

/// A set of interval-valued curves on one common basis, remembering the
/// observation grid they were smoothed from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalFunctionalDataset {
    lower: FunctionalDataset,
    upper: FunctionalDataset,
    grid: Vec<f64>,
}

impl IntervalFunctionalDataset {
    /// Smooths discretely observed lower/upper values (`N x J` each) onto a
    /// shared basis. Inputs must satisfy `lower <= upper` elementwise; the
    /// first violation is reported with its sample and grid indices.
    pub fn from_discrete(
        lower_values: &DMatrix<f64>,
        upper_values: &DMatrix<f64>,
        grid: &[f64],
        spec: &BasisSpec,
    ) -> Result<Self> {
        if lower_values.shape() != upper_values.shape() {
            return Err(Error::DimensionMismatch(format!(
                "lower values are {:?}, upper values are {:?}",
                lower_values.shape(),
                upper_values.shape()
            )));
        }
        if lower_values.ncols() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} value columns for a grid of {} points",
                lower_values.ncols(),
                grid.len()
            )));
        }
        if lower_values.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        for i in 0..lower_values.nrows() {
            for j in 0..lower_values.ncols() {
                if lower_values[(i, j)] > upper_values[(i, j)] {
                    return Err(Error::InvertedInterval {
                        sample: i,
                        index: j,
                        lower: lower_values[(i, j)],
                        upper: upper_values[(i, j)],
                    });
                }
            }
        }
        let basis = Arc::new(spec.clone());
        let smoother = basis.smoother(grid)?;
        let lower = FunctionalDataset::from_rows(smoother.apply_rows(lower_values)?, basis.clone())?;
        let upper = FunctionalDataset::from_rows(smoother.apply_rows(upper_values)?, basis)?;
        Ok(Self {
            lower,
            upper,
            grid: grid.to_vec(),
        })
    }

    /// Wraps already-smoothed limb datasets that share a basis.
    pub fn from_datasets(
        lower: FunctionalDataset,
        upper: FunctionalDataset,
        grid: Vec<f64>,
    ) -> Result<Self> {
        if lower.basis().as_ref() != upper.basis().as_ref() {
            return Err(Error::BasisMismatch);
        }
        if lower.n_samples() != upper.n_samples() {
            return Err(Error::DimensionMismatch(format!(
                "{} lower samples vs {} upper samples",
                lower.n_samples(),
                upper.n_samples()
            )));
        }
        Ok(Self { lower, upper, grid })
    }

    pub fn n_samples(&self) -> usize {
        self.lower.n_samples()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        self.lower.basis()
    }

    pub fn lower(&self) -> &FunctionalDataset {
        &self.lower
    }

    pub fn upper(&self) -> &FunctionalDataset {
        &self.upper
    }

    pub fn sample(&self, i: usize) -> IntervalFunctionalSample {
        IntervalFunctionalSample {
            lower: self.lower.sample(i),
            upper: self.upper.sample(i),
        }
    }

    /// Center curves `(upper + lower) / 2` of every sample.
    pub fn center_dataset(&self) -> FunctionalDataset {
        let c = (self.upper.coefficients() + self.lower.coefficients()) * 0.5;
        FunctionalDataset::from_rows(c, self.basis().clone()).expect("limbs share the basis")
    }

    /// Half-range curves `(upper - lower) / 2` of every sample.
    pub fn range_dataset(&self) -> FunctionalDataset {
        let r = (self.upper.coefficients() - self.lower.coefficients()) * 0.5;
        FunctionalDataset::from_rows(r, self.basis().clone()).expect("limbs share the basis")
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            lower: self.lower.subset(indices)?,
            upper: self.upper.subset(indices)?,
            grid: self.grid.clone(),
        })
    }
}

/// Pointwise (min, max) of two equally shaped value matrices, the standard
/// fix for crossing predicted limit curves.
pub fn enforce_ordering(
    lower: &DMatrix<f64>,
    upper: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if lower.shape() != upper.shape() {
        return Err(Error::DimensionMismatch(format!(
            "lower is {:?}, upper is {:?}",
            lower.shape(),
            upper.shape()
        )));
    }
    let lo = lower.zip_map(upper, f64::min);
    let hi = lower.zip_map(upper, f64::max);
    Ok((lo, hi))
}

/// Number of points where `lower > upper`.
pub fn ordering_violations(lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> usize {
    lower
        .iter()
        .zip(upper.iter())
        .filter(|(l, u)| l > u)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> BasisSpec {
        BasisSpec::cubic(6, 0.0, 1.0).unwrap()
    }

    #[test]
    fn degenerate_intervals_have_zero_range() {
        let grid = linspace(0.0, 1.0, 20);
        let vals = DMatrix::from_fn(3, 20, |i, j| (i as f64 + 1.0) * grid[j]);
        let ds = IntervalFunctionalDataset::from_discrete(&vals, &vals, &grid, &spec()).unwrap();
        let center = ds.center_dataset();
        assert!((center.coefficients() - ds.lower().coefficients()).amax() < 1e-12);
        assert!(ds.range_dataset().coefficients().amax() < 1e-12);
    }

    #[test]
    fn constant_limits_give_constant_center_and_range() {
        let grid = linspace(0.0, 1.0, 20);
        let lower = DMatrix::from_element(2, 20, 1.0);
        let upper = DMatrix::from_element(2, 20, 3.0);
        let ds = IntervalFunctionalDataset::from_discrete(&lower, &upper, &grid, &spec()).unwrap();
        for v in ds.center_dataset().coefficients().iter() {
            assert!((v - 2.0).abs() < 1e-10);
        }
        for v in ds.range_dataset().coefficients().iter() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn representable_curves_round_trip_through_smoothing() {
        let s = spec();
        let grid = linspace(0.0, 1.0, 30);
        let phi = s.evaluate_matrix(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c_low = DMatrix::from_fn(4, 6, |_, _| rng.random::<f64>());
        let c_rng = DMatrix::from_fn(4, 6, |_, _| rng.random::<f64>() * 0.5);
        let lower = &c_low * phi.transpose();
        let upper = &(&c_low + &c_rng) * phi.transpose();
        let ds = IntervalFunctionalDataset::from_discrete(&lower, &upper, &grid, &s).unwrap();
        let lower_back = ds.lower().eval_on_grid(&grid).unwrap();
        let upper_back = ds.upper().eval_on_grid(&grid).unwrap();
        assert!((lower_back - lower).amax() < 1e-8);
        assert!((upper_back - upper).amax() < 1e-8);
    }

    #[test]
    fn inverted_input_names_the_offending_cell() {
        let grid = linspace(0.0, 1.0, 10);
        let lower = DMatrix::from_element(2, 10, 1.0);
        let mut upper = DMatrix::from_element(2, 10, 2.0);
        upper[(1, 3)] = 0.5;
        let err = IntervalFunctionalDataset::from_discrete(&lower, &upper, &grid, &spec())
            .unwrap_err();
        match err {
            Error::InvertedInterval { sample, index, .. } => {
                assert_eq!((sample, index), (1, 3));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn mirrored_limits_center_at_zero() {
        let b = Arc::new(spec());
        let c = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let upper = FunctionalSample::new(c.clone(), b.clone()).unwrap();
        let lower = FunctionalSample::new(-c, b).unwrap();
        let s = IntervalFunctionalSample::new(lower, upper).unwrap();
        assert!(s.center_curve().coefficients().amax() < 1e-15);
    }

    #[test]
    fn recomposition_identity_holds_coefficientwise() {
        let grid = linspace(0.0, 1.0, 25);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let lower = DMatrix::from_fn(5, 25, |_, j| (grid[j] * 3.0).sin() + rng.random::<f64>() * 0.1);
        let width = DMatrix::from_fn(5, 25, |_, _| rng.random::<f64>() + 0.1);
        let upper = &lower + &width;
        let ds = IntervalFunctionalDataset::from_discrete(&lower, &upper, &grid, &spec()).unwrap();
        let center = ds.center_dataset();
        let range = ds.range_dataset();
        let re_upper = center.coefficients() + range.coefficients();
        let re_lower = center.coefficients() - range.coefficients();
        assert!((re_upper - ds.upper().coefficients()).amax() < 1e-14);
        assert!((re_lower - ds.lower().coefficients()).amax() < 1e-14);
    }

    #[test]
    fn center_matches_pointwise_average_on_grid() {
        let grid = linspace(0.0, 1.0, 25);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let lower = DMatrix::from_fn(3, 25, |_, _| rng.random::<f64>());
        let upper = &lower + DMatrix::from_fn(3, 25, |_, _| rng.random::<f64>());
        let ds = IntervalFunctionalDataset::from_discrete(&lower, &upper, &grid, &spec()).unwrap();
        let center_vals = ds.center_dataset().eval_on_grid(&grid).unwrap();
        let avg = (ds.lower().eval_on_grid(&grid).unwrap()
            + ds.upper().eval_on_grid(&grid).unwrap())
            * 0.5;
        assert!((center_vals - avg).amax() < 1e-12);
    }

    #[test]
    fn enforce_ordering_base_cases() {
        let lo = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 2.0]);
        let hi = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let (l, u) = enforce_ordering(&lo, &hi).unwrap();
        assert_eq!(l, lo);
        assert_eq!(u, hi);
        // fully swapped inputs come back swapped
        let (l, u) = enforce_ordering(&hi, &lo).unwrap();
        assert_eq!(l, lo);
        assert_eq!(u, hi);
        // shape mismatch
        let narrow = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        assert!(enforce_ordering(&lo, &narrow).is_err());
    }

    #[test]
    fn ordering_violations_counts_crossings() {
        let lo = DMatrix::from_row_slice(1, 3, &[0.0, 5.0, 2.0]);
        let hi = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert_eq!(ordering_violations(&lo, &hi), 1);
    }

    proptest! {
        #[test]
        fn enforce_ordering_preserves_values_and_is_idempotent(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(4, 7, |_, _| rng.random::<f64>() * 10.0 - 5.0);
            let b = DMatrix::from_fn(4, 7, |_, _| rng.random::<f64>() * 10.0 - 5.0);
            let (lo, hi) = enforce_ordering(&a, &b).unwrap();
            for i in 0..4 {
                for j in 0..7 {
                    prop_assert!(lo[(i, j)] <= hi[(i, j)]);
                    // the multiset {lo, hi} equals the multiset {a, b}
                    let mut got = [lo[(i, j)], hi[(i, j)]];
                    let mut want = [a[(i, j)], b[(i, j)]];
                    got.sort_by(f64::total_cmp);
                    want.sort_by(f64::total_cmp);
                    prop_assert_eq!(got, want);
                }
            }
            let (lo2, hi2) = enforce_ordering(&lo, &hi).unwrap();
            prop_assert_eq!(lo, lo2);
            prop_assert_eq!(hi, hi2);
        }
    }
}
