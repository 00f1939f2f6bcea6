//! Clamped B-spline bases: construction, evaluation, Gram matrices, and
//! least-squares smoothing of discretely observed curves.
//!
//! A basis is a partition of unity on its closed domain: the endpoint knots
//! are repeated `order` times and interior knots are equally spaced unless
//! supplied. Gram entries are integrated exactly with per-span Gauss-Legendre
//! quadrature, since products of basis functions are piecewise polynomial.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::is_strictly_increasing;
use crate::linalg::pseudo_inverse;
use crate::Result;

/// Conventional default spline order (cubic splines).
pub const DEFAULT_ORDER: usize = 4;

/// A clamped B-spline basis of `num_basis` functions on a closed interval.
///
/// `order` is the polynomial degree plus one, so the default of 4 gives cubic
/// splines. The knot vector always has `num_basis + order` nondecreasing
/// entries with the first and last `order` of them pinned to the domain
/// endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    order: usize,
    num_basis: usize,
    domain: (f64, f64),
    knots: Vec<f64>,
}

impl BasisSpec {
    /// Clamped basis with equally spaced interior knots.
    pub fn new(num_basis: usize, order: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::validate_shape(num_basis, order, lo, hi)?;
        let interior = num_basis - order;
        let step = (hi - lo) / (interior + 1) as f64;
        let mut knots = Vec::with_capacity(num_basis + order);
        knots.extend(std::iter::repeat_n(lo, order));
        knots.extend((1..=interior).map(|i| lo + step * i as f64));
        knots.extend(std::iter::repeat_n(hi, order));
        Ok(Self {
            order,
            num_basis,
            domain: (lo, hi),
            knots,
        })
    }

    /// Cubic basis (`order = 4`) with equally spaced interior knots.
    pub fn cubic(num_basis: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(num_basis, DEFAULT_ORDER, lo, hi)
    }

    /// Clamped basis with caller-supplied interior knots.
    pub fn with_interior_knots(
        num_basis: usize,
        order: usize,
        lo: f64,
        hi: f64,
        interior: &[f64],
    ) -> Result<Self> {
        Self::validate_shape(num_basis, order, lo, hi)?;
        if interior.len() != num_basis - order {
            return Err(Error::InvalidKnots(format!(
                "expected {} interior knots, got {}",
                num_basis - order,
                interior.len()
            )));
        }
        if interior.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots(
                "interior knots must be nondecreasing".into(),
            ));
        }
        if interior.iter().any(|&k| k <= lo || k >= hi) {
            return Err(Error::InvalidKnots(
                "interior knots must lie strictly inside the domain".into(),
            ));
        }
        let mut knots = Vec::with_capacity(num_basis + order);
        knots.extend(std::iter::repeat_n(lo, order));
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(hi, order));
        Ok(Self {
            order,
            num_basis,
            domain: (lo, hi),
            knots,
        })
    }

    fn validate_shape(num_basis: usize, order: usize, lo: f64, hi: f64) -> Result<()> {
        if order == 0 || num_basis < order {
            return Err(Error::InvalidBasisSpec { num_basis, order });
        }
        if lo >= hi || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidKnots(format!(
                "domain [{lo}, {hi}] is not a proper finite interval"
            )));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_basis(&self) -> usize {
        self.num_basis
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && t <= self.domain.1
    }

    fn check_in_domain(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                t,
                lo: self.domain.0,
                hi: self.domain.1,
            })
        }
    }

    /// Index of the knot span containing `t`, clamped so that the span is
    /// nondegenerate and `t = b` maps to the last span.
    fn find_span(&self, t: f64) -> usize {
        let k = self.num_basis;
        if t >= self.knots[k] {
            return k - 1;
        }
        if t <= self.knots[self.order - 1] {
            return self.order - 1;
        }
        let mut low = self.order - 1;
        let mut high = k;
        let mut mid = (low + high) / 2;
        while t < self.knots[mid] || t >= self.knots[mid + 1] {
            if t < self.knots[mid] {
                high = mid;
            } else {
                low = mid;
            }
            mid = (low + high) / 2;
        }
        mid
    }

    /// Values of all `num_basis` functions at `t` (Cox-de Boor recursion).
    ///
    /// The result is nonnegative and sums to one anywhere in the domain;
    /// points outside the domain are rejected rather than clamped.
    pub fn evaluate(&self, t: f64) -> Result<DVector<f64>> {
        self.check_in_domain(t)?;
        let mut out = DVector::zeros(self.num_basis);
        let (span, local) = self.evaluate_local(t);
        for (r, v) in local.iter().enumerate() {
            out[span + 1 - self.order + r] = *v;
        }
        Ok(out)
    }

    /// The `order` possibly-nonzero values at `t`, returned with their span.
    fn evaluate_local(&self, t: f64) -> (usize, Vec<f64>) {
        let o = self.order;
        let span = self.find_span(t);
        let mut values = vec![0.0; o];
        let mut left = vec![0.0; o];
        let mut right = vec![0.0; o];
        values[0] = 1.0;
        for degree in 1..o {
            left[degree] = t - self.knots[span + 1 - degree];
            right[degree] = self.knots[span + degree] - t;
            let mut saved = 0.0;
            for r in 0..degree {
                let denom = right[r + 1] + left[degree - r];
                let temp = if denom != 0.0 { values[r] / denom } else { 0.0 };
                values[r] = saved + right[r + 1] * temp;
                saved = left[degree - r] * temp;
            }
            values[degree] = saved;
        }
        (span, values)
    }

    /// Basis matrix with one row per grid point: `phi[j][k] = phi_k(grid[j])`.
    pub fn evaluate_matrix(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(grid.len(), self.num_basis);
        for (j, &t) in grid.iter().enumerate() {
            self.check_in_domain(t)?;
            let (span, local) = self.evaluate_local(t);
            for (r, v) in local.iter().enumerate() {
                m[(j, span + 1 - self.order + r)] = *v;
            }
        }
        Ok(m)
    }

    /// Gram matrix of pairwise inner products `∫ phi_j(t) phi_k(t) dt`.
    ///
    /// Integrated per knot span with an `order`-node Gauss-Legendre rule,
    /// which is exact for the piecewise-polynomial integrand.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let k = self.num_basis;
        let mut gram = DMatrix::zeros(k, k);
        let (nodes, weights) = gauss_legendre(self.order);
        for span in (self.order - 1)..k {
            let (a, b) = (self.knots[span], self.knots[span + 1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (&x, &w) in nodes.iter().zip(&weights) {
                let t = mid + half * x;
                let (sp, local) = self.evaluate_local(t);
                let first = sp + 1 - self.order;
                let scaled = w * half;
                for (r1, v1) in local.iter().enumerate() {
                    for (r2, v2) in local.iter().enumerate() {
                        gram[(first + r1, first + r2)] += scaled * v1 * v2;
                    }
                }
            }
        }
        gram
    }

    /// Cross Gram matrix `∫ phi_j(t) psi_k(t) dt` between two bases on the
    /// same domain. Integration runs over the union of both knot partitions.
    pub fn cross_gram(&self, other: &BasisSpec) -> Result<DMatrix<f64>> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(
                self.domain.0,
                self.domain.1,
                other.domain.0,
                other.domain.1,
            ));
        }
        let mut breaks: Vec<f64> = self
            .knots
            .iter()
            .chain(other.knots.iter())
            .cloned()
            .collect();
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();

        let (nodes, weights) = gauss_legendre(self.order.max(other.order));
        let mut cross = DMatrix::zeros(self.num_basis, other.num_basis);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (&x, &wq) in nodes.iter().zip(&weights) {
                let t = mid + half * x;
                let (sp_r, local_r) = self.evaluate_local(t);
                let (sp_c, local_c) = other.evaluate_local(t);
                let first_r = sp_r + 1 - self.order;
                let first_c = sp_c + 1 - other.order;
                let scaled = wq * half;
                for (r, vr) in local_r.iter().enumerate() {
                    for (c, vc) in local_c.iter().enumerate() {
                        cross[(first_r + r, first_c + c)] += scaled * vr * vc;
                    }
                }
            }
        }
        Ok(cross)
    }

    /// Least-squares coefficients for discrete observations of one curve.
    ///
    /// Solved through the generalized inverse, so a rank-deficient design
    /// still yields the minimum-norm solution.
    pub fn smooth(&self, grid: &[f64], values: &[f64]) -> Result<DVector<f64>> {
        let smoother = self.smoother(grid)?;
        smoother.apply(values)
    }

    /// Precomputed smoother for repeatedly projecting curves observed on the
    /// same grid.
    pub fn smoother(&self, grid: &[f64]) -> Result<Smoother> {
        if grid.len() < self.num_basis {
            return Err(Error::UnderDetermined {
                points: grid.len(),
                num_basis: self.num_basis,
            });
        }
        if !is_strictly_increasing(grid) {
            return Err(Error::NonMonotonicGrid);
        }
        let phi = self.evaluate_matrix(grid)?;
        Ok(Smoother {
            projection: pseudo_inverse(&phi),
            grid_len: grid.len(),
        })
    }
}

/// Maps observed curve values to basis coefficients via a cached projector.
#[derive(Debug, Clone)]
pub struct Smoother {
    projection: DMatrix<f64>, // K x J
    grid_len: usize,
}

impl Smoother {
    pub fn apply(&self, values: &[f64]) -> Result<DVector<f64>> {
        if values.len() != self.grid_len {
            return Err(Error::DimensionMismatch(format!(
                "expected {} observed values, got {}",
                self.grid_len,
                values.len()
            )));
        }
        Ok(&self.projection * DVector::from_column_slice(values))
    }

    /// Smooths every row of an `N x J` value matrix into an `N x K`
    /// coefficient matrix.
    pub fn apply_rows(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if values.ncols() != self.grid_len {
            return Err(Error::DimensionMismatch(format!(
                "expected {} columns of observed values, got {}",
                self.grid_len,
                values.ncols()
            )));
        }
        Ok(values * self.projection.transpose())
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}
