//! Regression models for interval-valued functional data.
//!
//! Five model kinds share one estimation engine:
//!
//! * `flm`  - two independent function-on-function fits, lower limits on
//!   lower limits and upper limits on upper limits;
//! * `cm`   - center method: one fit of response centers on predictor
//!   centers, applied to the lower and upper limit designs at prediction
//!   time;
//! * `crm`  - center-range method: separate fits for centers and
//!   half-ranges, limits recomposed as center -+ range;
//! * `bcrm` - bivariate center-range method: centers and half-ranges both
//!   regressed on the concatenated (center, range) predictor set;
//! * `mcm`  - Monte Carlo method: curves drawn pointwise-uniformly between
//!   the limit functions, refit per draw, coefficient matrices averaged.
//!
//! Every prediction passes through a pointwise min/max step so the returned
//! lower limit never exceeds the upper limit; how many points needed fixing
//! is reported alongside the curves. The MCM fit additionally supports
//! residual-bootstrap prediction bands with empirical quantiles.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::derive_seed;
use crate::error::Error;
use crate::fda::{FunctionalDataset, FunctionalSample};
use crate::interval::{enforce_ordering, ordering_violations, IntervalFunctionalDataset};
use crate::regression::{assemble_design, build_design, fit_ml, FofFit};
use crate::Result;

/// The model kinds, ordered as they are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Flm,
    Cm,
    Crm,
    Bcrm,
    Mcm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Flm,
        ModelKind::Cm,
        ModelKind::Crm,
        ModelKind::Bcrm,
        ModelKind::Mcm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Flm => "flm",
            ModelKind::Cm => "cm",
            ModelKind::Crm => "crm",
            ModelKind::Bcrm => "bcrm",
            ModelKind::Mcm => "mcm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flm" => Ok(ModelKind::Flm),
            "cm" => Ok(ModelKind::Cm),
            "crm" => Ok(ModelKind::Crm),
            "bcrm" => Ok(ModelKind::Bcrm),
            "mcm" => Ok(ModelKind::Mcm),
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind '{other}' (expected flm, cm, crm, bcrm, or mcm)"
            ))),
        }
    }
}

/// Fit-time options. Only the Monte Carlo method reads them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of Monte Carlo refits for `mcm`.
    pub mcm_replicates: usize,
    /// Master seed; per-replicate streams are derived from it.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mcm_replicates: 100,
            seed: 0,
        }
    }
}

/// Replicate coefficient matrices kept by a Monte Carlo fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmFit {
    replicates: Vec<DMatrix<f64>>,
    mean: DMatrix<f64>,
}

impl McmFit {
    pub fn replicates(&self) -> &[DMatrix<f64>] {
        &self.replicates
    }

    pub fn mean_coefficients(&self) -> &DMatrix<f64> {
        &self.mean
    }
}

/// A fitted interval model: the underlying fits plus the limb means and Gram
/// matrices needed to rebuild lower/upper designs at prediction time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalFitResult {
    kind: ModelKind,
    fits: Vec<FofFit>,
    mcm: Option<McmFit>,
    y_lower_mean: FunctionalSample,
    y_upper_mean: FunctionalSample,
    x_lower_means: Vec<FunctionalSample>,
    x_upper_means: Vec<FunctionalSample>,
    grams: Vec<DMatrix<f64>>,
    predictor_bases: Vec<Arc<BasisSpec>>,
    response_basis: Arc<BasisSpec>,
}

impl IntervalFitResult {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// The underlying function-on-function fits: one for `cm`, two for
    /// `crm`/`bcrm`/`flm`, none for `mcm` (see [`IntervalFitResult::mcm`]).
    pub fn fits(&self) -> &[FofFit] {
        &self.fits
    }

    pub fn mcm(&self) -> Option<&McmFit> {
        self.mcm.as_ref()
    }

    pub fn response_basis(&self) -> &Arc<BasisSpec> {
        &self.response_basis
    }
}

/// Predicted limit curves evaluated on a grid, with the number of points the
/// pointwise min/max step had to swap.
#[derive(Debug, Clone)]
pub struct LimitPredictions {
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
    pub corrected_points: usize,
}

/// Pointwise bootstrap bands for the lower and upper limit functions.
#[derive(Debug, Clone)]
pub struct PredictionBand {
    grid: Vec<f64>,
    alpha: f64,
    lower_lo: DMatrix<f64>,
    lower_hi: DMatrix<f64>,
    upper_lo: DMatrix<f64>,
    upper_hi: DMatrix<f64>,
}

impl PredictionBand {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Band for the lower limit function: (pointwise lo, pointwise hi).
    pub fn lower_band(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.lower_lo, &self.lower_hi)
    }

    /// Band for the upper limit function.
    pub fn upper_band(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.upper_lo, &self.upper_hi)
    }

    /// Fraction of (sample, grid point) pairs where the true limit lies
    /// inside its band; returned as (lower coverage, upper coverage).
    pub fn coverage(&self, truth_lower: &DMatrix<f64>, truth_upper: &DMatrix<f64>) -> Result<(f64, f64)> {
        if truth_lower.shape() != self.lower_lo.shape()
            || truth_upper.shape() != self.upper_lo.shape()
        {
            return Err(Error::DimensionMismatch(
                "truth matrices do not match the band shape".into(),
            ));
        }
        let count = |lo: &DMatrix<f64>, hi: &DMatrix<f64>, truth: &DMatrix<f64>| {
            let inside = truth
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .filter(|(t, (l, h))| *l <= *t && *t <= *h)
                .count();
            inside as f64 / truth.len() as f64
        };
        Ok((
            count(&self.lower_lo, &self.lower_hi, truth_lower),
            count(&self.upper_lo, &self.upper_hi, truth_upper),
        ))
    }
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn validate_inputs(
    y: &IntervalFunctionalDataset,
    xs: &[IntervalFunctionalDataset],
) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = y.n_samples();
    if xs.iter().any(|x| x.n_samples() != n) {
        return Err(Error::DimensionMismatch(format!(
            "response has {n} samples, predictors have {:?}",
            xs.iter().map(|x| x.n_samples()).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// Fits an interval model of the requested kind.
pub fn fit(
    kind: ModelKind,
    y: &IntervalFunctionalDataset,
    xs: &[IntervalFunctionalDataset],
    config: &ModelConfig,
) -> Result<IntervalFitResult> {
    validate_inputs(y, xs)?;

    let y_lower_mean = y.lower().mean_function();
    let y_upper_mean = y.upper().mean_function();
    let x_lower_means: Vec<_> = xs.iter().map(|x| x.lower().mean_function()).collect();
    let x_upper_means: Vec<_> = xs.iter().map(|x| x.upper().mean_function()).collect();
    let grams: Vec<_> = xs.iter().map(|x| x.basis().gram_matrix()).collect();
    let predictor_bases: Vec<_> = xs.iter().map(|x| x.basis().clone()).collect();
    let response_basis = y.basis().clone();

    let mut mcm = None;
    let fits = match kind {
        ModelKind::Cm => {
            let centers: Vec<_> = xs.iter().map(|x| x.center_dataset()).collect();
            vec![fit_on(&centers, &y.center_dataset())?]
        }
        ModelKind::Crm => {
            let centers: Vec<_> = xs.iter().map(|x| x.center_dataset()).collect();
            let ranges: Vec<_> = xs.iter().map(|x| x.range_dataset()).collect();
            vec![
                fit_on(&centers, &y.center_dataset())?,
                fit_on(&ranges, &y.range_dataset())?,
            ]
        }
        ModelKind::Bcrm => {
            let mut combined: Vec<_> = xs.iter().map(|x| x.center_dataset()).collect();
            combined.extend(xs.iter().map(|x| x.range_dataset()));
            vec![
                fit_on(&combined, &y.center_dataset())?,
                fit_on(&combined, &y.range_dataset())?,
            ]
        }
        ModelKind::Flm => {
            let lowers: Vec<_> = xs.iter().map(|x| x.lower().clone()).collect();
            let uppers: Vec<_> = xs.iter().map(|x| x.upper().clone()).collect();
            vec![
                fit_on(&lowers, y.lower())?,
                fit_on(&uppers, y.upper())?,
            ]
        }
        ModelKind::Mcm => {
            mcm = Some(fit_mcm(y, xs, config)?);
            Vec::new()
        }
    };

    Ok(IntervalFitResult {
        kind,
        fits,
        mcm,
        y_lower_mean,
        y_upper_mean,
        x_lower_means,
        x_upper_means,
        grams,
        predictor_bases,
        response_basis,
    })
}

fn fit_on(predictors: &[FunctionalDataset], response: &FunctionalDataset) -> Result<FofFit> {
    let design = build_design(predictors)?;
    fit_ml(&design, response)
}

/// Monte Carlo fit: draw single curves pointwise-uniformly between the limit
/// functions, smooth them back to the common basis, refit, and average the
/// coefficient matrices over replicates.
///
/// Replicate b uses an RNG stream derived from `(config.seed, b)`, so the
/// result does not depend on execution order.
fn fit_mcm(
    y: &IntervalFunctionalDataset,
    xs: &[IntervalFunctionalDataset],
    config: &ModelConfig,
) -> Result<McmFit> {
    if config.mcm_replicates < 2 {
        return Err(Error::TooFewReplicates(config.mcm_replicates));
    }

    let y_lower = y.lower().eval_on_grid(y.grid())?;
    let y_upper = y.upper().eval_on_grid(y.grid())?;
    let y_smoother = y.basis().smoother(y.grid())?;

    let mut x_bounds = Vec::with_capacity(xs.len());
    let mut x_smoothers = Vec::with_capacity(xs.len());
    for x in xs {
        x_bounds.push((
            x.lower().eval_on_grid(x.grid())?,
            x.upper().eval_on_grid(x.grid())?,
        ));
        x_smoothers.push(x.basis().smoother(x.grid())?);
    }

    let draw = |lo: &DMatrix<f64>, hi: &DMatrix<f64>, rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(lo.nrows(), lo.ncols(), |i, j| {
            let u: f64 = rng.random();
            lo[(i, j)] + u * (hi[(i, j)] - lo[(i, j)])
        })
    };

    let mut replicates = Vec::with_capacity(config.mcm_replicates);
    for b in 0..config.mcm_replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, b as u64));
        let y_draw = draw(&y_lower, &y_upper, &mut rng);
        let y_ds = FunctionalDataset::from_rows(y_smoother.apply_rows(&y_draw)?, y.basis().clone())?;
        let mut x_ds = Vec::with_capacity(xs.len());
        for (m, (lo, hi)) in x_bounds.iter().enumerate() {
            let x_draw = draw(lo, hi, &mut rng);
            x_ds.push(FunctionalDataset::from_rows(
                x_smoothers[m].apply_rows(&x_draw)?,
                xs[m].basis().clone(),
            )?);
        }
        let fit = fit_on(&x_ds, &y_ds)?;
        replicates.push(fit.b_hat().clone());
    }

    let mut mean = DMatrix::zeros(replicates[0].nrows(), replicates[0].ncols());
    for b in &replicates {
        mean += b;
    }
    mean /= replicates.len() as f64;

    Ok(McmFit { replicates, mean })
}

/// Design matrix for one limb (lower or upper) of new predictors, centered
/// with the stored training limb means.
fn limb_design(
    fit: &IntervalFitResult,
    xs_new: &[IntervalFunctionalDataset],
    upper_limb: bool,
) -> Result<DMatrix<f64>> {
    if xs_new.len() != fit.predictor_bases.len() {
        return Err(Error::DimensionMismatch(format!(
            "fit has {} predictors, got {}",
            fit.predictor_bases.len(),
            xs_new.len()
        )));
    }
    let n = xs_new[0].n_samples();
    let mut blocks = Vec::with_capacity(xs_new.len());
    for (m, x) in xs_new.iter().enumerate() {
        if x.basis().as_ref() != fit.predictor_bases[m].as_ref() {
            return Err(Error::BasisMismatch);
        }
        if x.n_samples() != n {
            return Err(Error::DimensionMismatch(
                "new predictor sample counts differ".into(),
            ));
        }
        let limb = if upper_limb { x.upper() } else { x.lower() };
        let mean = if upper_limb {
            &fit.x_upper_means[m]
        } else {
            &fit.x_lower_means[m]
        };
        let mut block = limb.coefficients().clone();
        for mut row in block.row_iter_mut() {
            row -= mean.coefficients().transpose();
        }
        blocks.push(block);
    }
    assemble_design(&blocks, &fit.grams)
}

/// Applies a coefficient matrix to one limb design and evaluates the
/// resulting curves (plus the stored limb mean) on `grid`.
fn limb_values(
    fit: &IntervalFitResult,
    b: &DMatrix<f64>,
    xs_new: &[IntervalFunctionalDataset],
    upper_limb: bool,
    grid: &[f64],
) -> Result<DMatrix<f64>> {
    let z = limb_design(fit, xs_new, upper_limb)?;
    let mut coefs = z * b;
    let mean = if upper_limb {
        &fit.y_upper_mean
    } else {
        &fit.y_lower_mean
    };
    for mut row in coefs.row_iter_mut() {
        row += mean.coefficients().transpose();
    }
    let phi = fit.response_basis.evaluate_matrix(grid)?;
    Ok(coefs * phi.transpose())
}

fn center_datasets(xs: &[IntervalFunctionalDataset]) -> Vec<FunctionalDataset> {
    xs.iter().map(|x| x.center_dataset()).collect()
}

fn range_datasets(xs: &[IntervalFunctionalDataset]) -> Vec<FunctionalDataset> {
    xs.iter().map(|x| x.range_dataset()).collect()
}

/// Predicted lower/upper limit curves for new predictors, evaluated on
/// `grid`. All kinds finish with the pointwise min/max correction so the
/// output always satisfies `lower <= upper`.
pub fn predict_limits(
    fit: &IntervalFitResult,
    xs_new: &[IntervalFunctionalDataset],
    grid: &[f64],
) -> Result<LimitPredictions> {
    let (raw_lower, raw_upper) = match fit.kind {
        ModelKind::Cm => {
            let b = fit.fits[0].b_hat();
            (
                limb_values(fit, b, xs_new, false, grid)?,
                limb_values(fit, b, xs_new, true, grid)?,
            )
        }
        ModelKind::Mcm => {
            let b = &fit.mcm.as_ref().expect("mcm fit carries replicates").mean;
            (
                limb_values(fit, b, xs_new, false, grid)?,
                limb_values(fit, b, xs_new, true, grid)?,
            )
        }
        ModelKind::Crm => {
            let center = fit.fits[0].predict(&center_datasets(xs_new))?.eval_on_grid(grid)?;
            let range = fit.fits[1].predict(&range_datasets(xs_new))?.eval_on_grid(grid)?;
            (&center - &range, &center + &range)
        }
        ModelKind::Bcrm => {
            let mut combined = center_datasets(xs_new);
            combined.extend(range_datasets(xs_new));
            let center = fit.fits[0].predict(&combined)?.eval_on_grid(grid)?;
            let range = fit.fits[1].predict(&combined)?.eval_on_grid(grid)?;
            (&center - &range, &center + &range)
        }
        ModelKind::Flm => {
            let lowers: Vec<_> = xs_new.iter().map(|x| x.lower().clone()).collect();
            let uppers: Vec<_> = xs_new.iter().map(|x| x.upper().clone()).collect();
            (
                fit.fits[0].predict(&lowers)?.eval_on_grid(grid)?,
                fit.fits[1].predict(&uppers)?.eval_on_grid(grid)?,
            )
        }
    };
    let corrected_points = ordering_violations(&raw_lower, &raw_upper);
    let (lower, upper) = enforce_ordering(&raw_lower, &raw_upper)?;
    Ok(LimitPredictions {
        lower,
        upper,
        corrected_points,
    })
}

/// Residual-bootstrap prediction bands from a Monte Carlo fit.
///
/// For each replicate coefficient matrix the limb predictions are recomputed
/// and a whole residual curve, drawn uniformly with replacement from the
/// training residual pool, is added. Bands are the pointwise `alpha/2` and
/// `1 - alpha/2` empirical quantiles across replicates.
pub fn mcm_prediction_band(
    fit: &IntervalFitResult,
    xs_new: &[IntervalFunctionalDataset],
    residual_lower: &DMatrix<f64>,
    residual_upper: &DMatrix<f64>,
    alpha: f64,
    grid: &[f64],
    seed: u64,
) -> Result<PredictionBand> {
    let mcm = fit.mcm.as_ref().ok_or(Error::WrongModelKind {
        expected: "mcm",
        found: fit.kind.name(),
    })?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if residual_lower.nrows() == 0 || residual_upper.nrows() == 0 {
        return Err(Error::EmptyResidualPool);
    }
    if residual_lower.ncols() != grid.len() || residual_upper.ncols() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "residual curves have {} points, grid has {}",
            residual_lower.ncols(),
            grid.len()
        )));
    }

    let n = xs_new[0].n_samples();
    let j = grid.len();
    let n_rep = mcm.replicates.len();
    let mut lower_draws = Vec::with_capacity(n_rep);
    let mut upper_draws = Vec::with_capacity(n_rep);
    for (b, b_hat) in mcm.replicates.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b as u64));
        let mut lower = limb_values(fit, b_hat, xs_new, false, grid)?;
        let mut upper = limb_values(fit, b_hat, xs_new, true, grid)?;
        for i in 0..n {
            let pick_l = rng.random_range(0..residual_lower.nrows());
            let pick_u = rng.random_range(0..residual_upper.nrows());
            for col in 0..j {
                lower[(i, col)] += residual_lower[(pick_l, col)];
                upper[(i, col)] += residual_upper[(pick_u, col)];
            }
        }
        lower_draws.push(lower);
        upper_draws.push(upper);
    }

    let quantiles = |draws: &[DMatrix<f64>]| {
        let mut lo = DMatrix::zeros(n, j);
        let mut hi = DMatrix::zeros(n, j);
        let mut buf = vec![0.0; n_rep];
        for i in 0..n {
            for col in 0..j {
                for (b, d) in draws.iter().enumerate() {
                    buf[b] = d[(i, col)];
                }
                buf.sort_by(f64::total_cmp);
                lo[(i, col)] = empirical_quantile(&buf, alpha / 2.0);
                hi[(i, col)] = empirical_quantile(&buf, 1.0 - alpha / 2.0);
            }
        }
        (lo, hi)
    };
    let (lower_lo, lower_hi) = quantiles(&lower_draws);
    let (upper_lo, upper_hi) = quantiles(&upper_draws);

    Ok(PredictionBand {
        grid: grid.to_vec(),
        alpha,
        lower_lo,
        lower_hi,
        upper_lo,
        upper_hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use rand::Rng;

    const GRID_LEN: usize = 40;

    /// Interval data with a known linear relation between centers.
    fn toy_data(
        n: usize,
        zero_width: bool,
        seed: u64,
    ) -> (IntervalFunctionalDataset, Vec<IntervalFunctionalDataset>) {
        let spec = BasisSpec::cubic(6, 0.0, 1.0).unwrap();
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x_center = DMatrix::zeros(n, GRID_LEN);
        let mut y_center = DMatrix::zeros(n, GRID_LEN);
        for i in 0..n {
            let a: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let b: f64 = rng.random::<f64>() * 2.0 - 1.0;
            for (j, t) in grid.iter().enumerate() {
                x_center[(i, j)] = a + b * t + (3.0 * t).sin();
                y_center[(i, j)] = 2.0 * a - b * (t - 0.5) + 0.2 * (2.0 * t).cos();
            }
        }
        let (x_w, y_w) = if zero_width { (0.0, 0.0) } else { (0.4, 0.3) };
        let x_lower = x_center.map(|v| v - x_w);
        let x_upper = x_center.map(|v| v + x_w);
        let y_lower = y_center.map(|v| v - y_w);
        let y_upper = y_center.map(|v| v + y_w);
        let y = IntervalFunctionalDataset::from_discrete(&y_lower, &y_upper, &grid, &spec).unwrap();
        let x = IntervalFunctionalDataset::from_discrete(&x_lower, &x_upper, &grid, &spec).unwrap();
        (y, vec![x])
    }

    #[test]
    fn model_kind_parsing_round_trips() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("carrot".parse::<ModelKind>().is_err());
    }

    #[test]
    fn zero_width_intervals_collapse_all_models() {
        let (y, xs) = toy_data(24, true, 1);
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let config = ModelConfig {
            mcm_replicates: 200,
            seed: 9,
        };
        let mut predictions = Vec::new();
        for kind in ModelKind::ALL {
            let fitted = fit(kind, &y, &xs, &config).unwrap();
            let pred = predict_limits(&fitted, &xs, &grid).unwrap();
            assert!((&pred.upper - &pred.lower).amax() < 1e-8, "{kind}");
            predictions.push((kind, pred.lower));
        }
        // deterministic models agree exactly
        let reference = &predictions[0].1;
        for (kind, p) in &predictions[..4] {
            assert!((p - reference).amax() < 1e-8, "{kind} differs");
        }
        // mcm draws are degenerate here, so it matches too
        assert!((&predictions[4].1 - reference).amax() < 1e-6);
    }

    #[test]
    fn crm_on_zero_ranges_has_zero_range_model() {
        let (y, xs) = toy_data(16, true, 2);
        let fitted = fit(ModelKind::Crm, &y, &xs, &ModelConfig::default()).unwrap();
        assert!(fitted.fits()[1].b_hat().amax() < 1e-10);
    }

    #[test]
    fn mcm_is_reproducible_bit_for_bit() {
        let (y, xs) = toy_data(12, false, 3);
        let config = ModelConfig {
            mcm_replicates: 2,
            seed: 42,
        };
        let a = fit(ModelKind::Mcm, &y, &xs, &config).unwrap();
        let b = fit(ModelKind::Mcm, &y, &xs, &config).unwrap();
        assert_eq!(a.mcm().unwrap().mean, b.mcm().unwrap().mean);
        for (ra, rb) in a
            .mcm()
            .unwrap()
            .replicates()
            .iter()
            .zip(b.mcm().unwrap().replicates())
        {
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn mcm_rejects_too_few_replicates() {
        let (y, xs) = toy_data(10, false, 4);
        let config = ModelConfig {
            mcm_replicates: 1,
            seed: 0,
        };
        assert!(matches!(
            fit(ModelKind::Mcm, &y, &xs, &config),
            Err(Error::TooFewReplicates(1))
        ));
    }

    #[test]
    fn sample_count_mismatch_is_rejected() {
        let (y, _) = toy_data(10, false, 5);
        let (_, xs) = toy_data(11, false, 6);
        assert!(fit(ModelKind::Cm, &y, &xs, &ModelConfig::default()).is_err());
    }

    #[test]
    fn constant_response_predicts_its_mean_everywhere() {
        // identical response curves center to zero, so every fitted B is zero
        // and predictions equal the stored training mean curves
        let (_, xs) = toy_data(14, false, 7);
        let spec = BasisSpec::cubic(6, 0.0, 1.0).unwrap();
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let y_lower = DMatrix::from_fn(14, GRID_LEN, |_, j| (grid[j] * 2.0).sin() - 0.5);
        let y_upper = y_lower.map(|v| v + 1.0);
        let y = IntervalFunctionalDataset::from_discrete(&y_lower, &y_upper, &grid, &spec).unwrap();

        for kind in [ModelKind::Flm, ModelKind::Cm, ModelKind::Crm, ModelKind::Bcrm] {
            let fitted = fit(kind, &y, &xs, &ModelConfig::default()).unwrap();
            let pred = predict_limits(&fitted, &xs, &grid).unwrap();
            let mean_lower = y.lower().mean_function().eval_on_grid(&grid).unwrap();
            let mean_upper = y.upper().mean_function().eval_on_grid(&grid).unwrap();
            for i in 0..pred.lower.nrows() {
                for j in 0..GRID_LEN {
                    assert!((pred.lower[(i, j)] - mean_lower[j]).abs() < 1e-8, "{kind}");
                    assert!((pred.upper[(i, j)] - mean_upper[j]).abs() < 1e-8, "{kind}");
                }
            }
        }
    }

    #[test]
    fn crm_recomposition_is_consistent_on_training_data() {
        let (y, xs) = toy_data(30, false, 8);
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let fitted = fit(ModelKind::Crm, &y, &xs, &ModelConfig::default()).unwrap();
        let pred = predict_limits(&fitted, &xs, &grid).unwrap();
        let center = fitted.fits()[0]
            .predict(&center_datasets(&xs))
            .unwrap()
            .eval_on_grid(&grid)
            .unwrap();
        let range = fitted.fits()[1]
            .predict(&range_datasets(&xs))
            .unwrap()
            .eval_on_grid(&grid)
            .unwrap();
        // no inversions occur for this data, so recomposition is exact
        assert_eq!(pred.corrected_points, 0);
        assert!((&pred.lower - (&center - &range)).amax() < 1e-6);
        assert!((&pred.upper - (&center + &range)).amax() < 1e-6);
    }

    #[test]
    fn predictions_always_ordered_even_for_random_fits() {
        let grid = linspace(0.0, 1.0, GRID_LEN);
        for seed in 0..20 {
            let (y, xs) = toy_data(10, false, 100 + seed);
            let fitted = fit(ModelKind::Cm, &y, &xs, &ModelConfig::default()).unwrap();
            let (y2, _) = toy_data(10, false, 200 + seed);
            let _ = y2;
            let pred = predict_limits(&fitted, &xs, &grid).unwrap();
            for i in 0..pred.lower.nrows() {
                for j in 0..GRID_LEN {
                    assert!(pred.lower[(i, j)] <= pred.upper[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn degenerate_alpha_collapses_band_to_median() {
        let (y, xs) = toy_data(10, false, 9);
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let config = ModelConfig {
            mcm_replicates: 11,
            seed: 5,
        };
        let fitted = fit(ModelKind::Mcm, &y, &xs, &config).unwrap();
        let pool = DMatrix::zeros(4, GRID_LEN);
        let band = mcm_prediction_band(&fitted, &xs, &pool, &pool, 1.0, &grid, 3).unwrap();
        let (lo, hi) = band.lower_band();
        assert!((hi - lo).amax() < 1e-12, "alpha = 1 band has width");
    }

    #[test]
    fn identical_replicates_and_zero_pool_give_point_band() {
        let (y, xs) = toy_data(10, true, 10);
        let grid = linspace(0.0, 1.0, GRID_LEN);
        // zero-width intervals make every replicate identical
        let config = ModelConfig {
            mcm_replicates: 5,
            seed: 6,
        };
        let fitted = fit(ModelKind::Mcm, &y, &xs, &config).unwrap();
        let pool = DMatrix::zeros(3, GRID_LEN);
        let band = mcm_prediction_band(&fitted, &xs, &pool, &pool, 0.1, &grid, 1).unwrap();
        let pred = predict_limits(&fitted, &xs, &grid).unwrap();
        let (lo, hi) = band.lower_band();
        assert!((lo - &pred.lower).amax() < 1e-9);
        assert!((hi - &pred.lower).amax() < 1e-9);
    }

    #[test]
    fn band_quantiles_widen_as_alpha_shrinks() {
        let (y, xs) = toy_data(12, false, 11);
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let config = ModelConfig {
            mcm_replicates: 40,
            seed: 7,
        };
        let fitted = fit(ModelKind::Mcm, &y, &xs, &config).unwrap();
        let pred = predict_limits(&fitted, &xs, &grid).unwrap();
        let resid_l = &y.lower().eval_on_grid(&grid).unwrap() - &pred.lower;
        let resid_u = &y.upper().eval_on_grid(&grid).unwrap() - &pred.upper;
        let wide = mcm_prediction_band(&fitted, &xs, &resid_l, &resid_u, 0.05, &grid, 2).unwrap();
        let narrow = mcm_prediction_band(&fitted, &xs, &resid_l, &resid_u, 0.5, &grid, 2).unwrap();
        let (wl, wh) = wide.lower_band();
        let (nl, nh) = narrow.lower_band();
        for i in 0..12 {
            for j in 0..GRID_LEN {
                assert!(wl[(i, j)] <= nl[(i, j)] + 1e-12);
                assert!(wh[(i, j)] >= nh[(i, j)] - 1e-12);
            }
        }
    }

    #[test]
    fn band_error_paths() {
        let (y, xs) = toy_data(8, false, 12);
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let config = ModelConfig {
            mcm_replicates: 3,
            seed: 0,
        };
        let fitted = fit(ModelKind::Mcm, &y, &xs, &config).unwrap();
        let pool = DMatrix::zeros(2, GRID_LEN);
        let empty = DMatrix::zeros(0, GRID_LEN);
        assert!(matches!(
            mcm_prediction_band(&fitted, &xs, &empty, &pool, 0.05, &grid, 0),
            Err(Error::EmptyResidualPool)
        ));
        assert!(matches!(
            mcm_prediction_band(&fitted, &xs, &pool, &pool, 0.0, &grid, 0),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            mcm_prediction_band(&fitted, &xs, &pool, &pool, 1.5, &grid, 0),
            Err(Error::InvalidAlpha(_))
        ));
        let cm = fit(ModelKind::Cm, &y, &xs, &config).unwrap();
        assert!(matches!(
            mcm_prediction_band(&cm, &xs, &pool, &pool, 0.05, &grid, 0),
            Err(Error::WrongModelKind { .. })
        ));
    }

    #[test]
    fn crm_and_bcrm_agree_when_ranges_are_independent_of_centers() {
        // ranges drawn independently of the centers leave the bcrm's extra
        // range predictors without signal, so its center model should track
        // the crm's closely
        let n = 100;
        let spec = BasisSpec::cubic(6, 0.0, 1.0).unwrap();
        let grid = linspace(0.0, 1.0, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut x_center = DMatrix::zeros(n, 50);
        let mut y_center = DMatrix::zeros(n, 50);
        for i in 0..n {
            let a: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let b: f64 = rng.random::<f64>() * 2.0 - 1.0;
            for (j, t) in grid.iter().enumerate() {
                x_center[(i, j)] = a * (2.0 * t).cos() + b * t;
                y_center[(i, j)] =
                    1.5 * a * (2.0 * t).cos() - 0.5 * b + 0.05 * rng.random::<f64>();
            }
        }
        let mk = |center: &DMatrix<f64>, rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
            let mut lower = center.clone();
            let mut upper = center.clone();
            for i in 0..n {
                let r = lo + (hi - lo) * rng.random::<f64>();
                for j in 0..50 {
                    lower[(i, j)] -= r;
                    upper[(i, j)] += r;
                }
            }
            IntervalFunctionalDataset::from_discrete(&lower, &upper, &grid, &spec).unwrap()
        };
        let y = mk(&y_center, &mut rng, 0.5, 1.0);
        let xs = vec![mk(&x_center, &mut rng, 1.0, 2.0)];

        let crm = fit(ModelKind::Crm, &y, &xs, &ModelConfig::default()).unwrap();
        let bcrm = fit(ModelKind::Bcrm, &y, &xs, &ModelConfig::default()).unwrap();
        let p_crm = predict_limits(&crm, &xs, &grid).unwrap();
        let p_bcrm = predict_limits(&bcrm, &xs, &grid).unwrap();

        let mut diffs: Vec<f64> = (&p_crm.lower - &p_bcrm.lower)
            .iter()
            .chain((&p_crm.upper - &p_bcrm.upper).iter())
            .map(|d| d.abs())
            .collect();
        diffs.sort_by(f64::total_cmp);
        let median_diff = diffs[diffs.len() / 2];

        let y_vals = y.lower().eval_on_grid(&grid).unwrap();
        let mean = y_vals.mean();
        let sd = (y_vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (y_vals.len() - 1) as f64)
            .sqrt();
        assert!(
            median_diff < 0.1 * sd,
            "median difference {median_diff} vs 10% of sd {sd}"
        );
    }

    #[test]
    fn flm_on_zero_width_intervals_has_equal_limb_errors() {
        let (y, xs) = toy_data(20, true, 31);
        let grid = linspace(0.0, 1.0, GRID_LEN);
        let dt = grid[1] - grid[0];
        let fitted = fit(ModelKind::Flm, &y, &xs, &ModelConfig::default()).unwrap();
        let pred = predict_limits(&fitted, &xs, &grid).unwrap();
        let truth_lower = y.lower().eval_on_grid(&grid).unwrap();
        let truth_upper = y.upper().eval_on_grid(&grid).unwrap();
        let amse_lower = crate::fda::mean_l2_distance(&truth_lower, &pred.lower, dt);
        let amse_upper = crate::fda::mean_l2_distance(&truth_upper, &pred.upper, dt);
        assert_eq!(amse_lower, amse_upper);
    }

    #[test]
    fn quantile_interpolates_between_order_statistics() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&sorted, 0.0), 1.0);
        assert_eq!(empirical_quantile(&sorted, 1.0), 4.0);
        assert!((empirical_quantile(&sorted, 0.5) - 2.5).abs() < 1e-15);
        assert!((empirical_quantile(&sorted, 1.0 / 3.0) - 2.0).abs() < 1e-12);
        assert_eq!(empirical_quantile(&[7.0], 0.3), 7.0);
    }
}
