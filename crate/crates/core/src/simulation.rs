//! Monte Carlo data generation and study harness for the interval models.
//!
//! Predictor centers are Gaussian-process draws around a level of 10 with a
//! squared-exponential covariance `exp(-100 (s - s')^2)`; response centers
//! follow a three-predictor function-on-function relation with known
//! coefficient surfaces plus N(0, 4) noise. Range curves add one uniform
//! offset per curve, limits are `center -+ range / 2`, and the predictor
//! limits are distorted with independent N(0, 4) measurement noise before
//! smoothing. Four offset cases control the interval widths.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::basis::BasisSpec;
use crate::derive_seed;
use crate::error::Error;
use crate::fda::mean_l2_distance;
use crate::grid::linspace;
use crate::interval::{enforce_ordering, ordering_violations, IntervalFunctionalDataset};
use crate::models::{
    empirical_quantile, fit, mcm_prediction_band, predict_limits, ModelConfig, ModelKind,
};
use crate::Result;

/// Number of functional predictors in the generated model.
pub const NUM_PREDICTORS: usize = 3;

/// Uniform offset bounds for the response ((a, b)) and predictor ((c, d))
/// range curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimCase {
    pub index: u8,
    pub response_offset: (f64, f64),
    pub predictor_offset: (f64, f64),
}

/// The four interval-width cases of the study design.
pub const CASES: [SimCase; 4] = [
    SimCase {
        index: 1,
        response_offset: (1.0, 1.5),
        predictor_offset: (1.0, 1.5),
    },
    SimCase {
        index: 2,
        response_offset: (1.0, 3.0),
        predictor_offset: (1.0, 3.0),
    },
    SimCase {
        index: 3,
        response_offset: (3.0, 5.0),
        predictor_offset: (5.0, 8.0),
    },
    SimCase {
        index: 4,
        response_offset: (8.0, 20.0),
        predictor_offset: (6.0, 15.0),
    },
];

impl SimCase {
    pub fn by_index(index: u8) -> Result<SimCase> {
        CASES
            .iter()
            .find(|c| c.index == index)
            .copied()
            .ok_or(Error::InvalidSimCase(index))
    }
}

/// Study configuration. Defaults mirror the full protocol: N = 200 curves on
/// 100 grid points, 8 basis functions, noise variance 4, 250 Monte Carlo
/// replicates, and B = 100 refits inside the Monte Carlo method.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub grid_len: usize,
    pub num_basis: usize,
    pub order: usize,
    pub noise_var: f64,
    pub mc: usize,
    pub mcm_replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 200,
            grid_len: 100,
            num_basis: 8,
            order: 4,
            noise_var: 4.0,
            mc: 250,
            mcm_replicates: 100,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.grid_len < 2 || self.mc == 0 {
            return Err(Error::InvalidConfig(
                "sample count, grid length, and replicate count must be positive".into(),
            ));
        }
        if self.grid_len < self.num_basis {
            return Err(Error::InvalidConfig(format!(
                "grid length {} is smaller than the basis count {}",
                self.grid_len, self.num_basis
            )));
        }
        if self.noise_var < 0.0 {
            return Err(Error::InvalidConfig("noise variance must be >= 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        Ok(())
    }
}

/// Zero-mean Gaussian process sampler with squared-exponential covariance
/// `exp(-100 (s - s')^2)` on a fixed grid.
pub struct GpSampler {
    factor: DMatrix<f64>,
}

impl GpSampler {
    /// Builds the grid covariance and factorizes it, escalating a diagonal
    /// jitter from 1e-10 to 1e-6 if the factorization fails.
    pub fn new(grid: &[f64]) -> Result<Self> {
        let cov = Self::covariance(grid);
        let mut jitter = 1e-10;
        loop {
            let mut jittered = cov.clone();
            for i in 0..jittered.nrows() {
                jittered[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(jittered) {
                return Ok(Self { factor: chol.l() });
            }
            jitter *= 10.0;
            if jitter > 1e-6 {
                return Err(Error::CovarianceFactorization { max_jitter: 1e-6 });
            }
        }
    }

    /// The grid covariance matrix (unit diagonal, symmetric).
    pub fn covariance(grid: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(grid.len(), grid.len(), |i, j| {
            let d = grid[i] - grid[j];
            (-100.0 * d * d).exp()
        })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let z = DVector::from_fn(self.factor.nrows(), |_, _| normal.sample(rng));
        &self.factor * z
    }
}

/// One Gaussian-process draw on `grid` from a fresh stream seeded by `seed`.
pub fn gp_sample(grid: &[f64], seed: u64) -> Result<DVector<f64>> {
    let sampler = GpSampler::new(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}

/// The known coefficient surfaces of the generated relation, `m` in 1..=3.
pub fn true_beta(m: usize, s: f64, t: f64) -> Result<f64> {
    let tc = t - 0.5;
    match m {
        1 => Ok((1.0 - s).powi(2) * tc * tc),
        2 => Ok((-3.0 * (s - 1.0).powi(2)).exp() * (-5.0 * tc * tc).exp()),
        3 => Ok((-5.0 * (s - 0.5).powi(2) - 5.0 * tc * tc).exp()
            + 8.0 * (-5.0 * (s - 1.5).powi(2) - 5.0 * tc * tc).exp()),
        _ => Err(Error::PredictorIndexOutOfRange {
            index: m,
            count: NUM_PREDICTORS,
        }),
    }
}

/// One generated dataset: the smoothed interval-valued curves the models see
/// plus the raw generated limit values before smoothing.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub y: IntervalFunctionalDataset,
    pub xs: Vec<IntervalFunctionalDataset>,
    pub y_lower_raw: DMatrix<f64>,
    pub y_upper_raw: DMatrix<f64>,
    pub x_lower_raw: Vec<DMatrix<f64>>,
    pub x_upper_raw: Vec<DMatrix<f64>>,
    /// Grid points where the generated response range came out negative.
    pub response_inversions: usize,
    /// Grid points where predictor measurement noise crossed the limits.
    pub predictor_inversions: usize,
}

/// Generates one dataset of `config.n` interval-valued curves for a case.
///
/// Inverted points (negative generated ranges, or noise pushing a lower
/// limit above its upper limit) are counted and then repaired with the
/// pointwise min/max step before smoothing.
pub fn generate(config: &SimConfig, case: &SimCase, seed: u64) -> Result<GeneratedData> {
    config.validate()?;
    let n = config.n;
    let j = config.grid_len;
    let grid = linspace(0.0, 1.0, j);
    let ds = grid[1] - grid[0];
    let sd = config.noise_var.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = GpSampler::new(&grid)?;

    // predictor centers: 10 + V_m(s)
    let mut x_centers = Vec::with_capacity(NUM_PREDICTORS);
    for _ in 0..NUM_PREDICTORS {
        let mut xc = DMatrix::zeros(n, j);
        for i in 0..n {
            let v = sampler.sample(&mut rng);
            for col in 0..j {
                xc[(i, col)] = 10.0 + v[col];
            }
        }
        x_centers.push(xc);
    }

    // response centers by left-endpoint Riemann integration of the known
    // surfaces, plus N(0, noise_var) error at every grid point
    let mut beta_tables = Vec::with_capacity(NUM_PREDICTORS);
    for m in 1..=NUM_PREDICTORS {
        beta_tables.push(DMatrix::from_fn(j - 1, j, |row, col| {
            true_beta(m, grid[row], grid[col]).expect("m in range")
        }));
    }
    let mut y_center = DMatrix::zeros(n, j);
    for (xc, table) in x_centers.iter().zip(&beta_tables) {
        y_center += xc.columns(0, j - 1) * table * ds;
    }
    let normal = Normal::new(0.0, sd.max(f64::MIN_POSITIVE)).expect("valid noise sd");
    if config.noise_var > 0.0 {
        for v in y_center.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    // range curves: the center plus one uniform offset drawn per curve
    let (a, b) = case.response_offset;
    let mut y_lower = DMatrix::zeros(n, j);
    let mut y_upper = DMatrix::zeros(n, j);
    for i in 0..n {
        let offset = a + (b - a) * rng.random::<f64>();
        for col in 0..j {
            let center = y_center[(i, col)];
            let range = center + offset;
            y_lower[(i, col)] = center - range / 2.0;
            y_upper[(i, col)] = center + range / 2.0;
        }
    }

    let (c, d) = case.predictor_offset;
    let mut x_lowers = Vec::with_capacity(NUM_PREDICTORS);
    let mut x_uppers = Vec::with_capacity(NUM_PREDICTORS);
    for xc in &x_centers {
        let mut lo = DMatrix::zeros(n, j);
        let mut hi = DMatrix::zeros(n, j);
        for i in 0..n {
            let offset = c + (d - c) * rng.random::<f64>();
            for col in 0..j {
                let center = xc[(i, col)];
                let range = center + offset;
                lo[(i, col)] = center - range / 2.0;
                hi[(i, col)] = center + range / 2.0;
            }
        }
        x_lowers.push(lo);
        x_uppers.push(hi);
    }

    // measurement noise on the predictor limits, then the ordering audit
    let mut predictor_inversions = 0;
    if config.noise_var > 0.0 {
        for (lo, hi) in x_lowers.iter_mut().zip(&mut x_uppers) {
            for v in lo.iter_mut() {
                *v += normal.sample(&mut rng);
            }
            for v in hi.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    for (lo, hi) in x_lowers.iter().zip(&x_uppers) {
        predictor_inversions += ordering_violations(lo, hi);
    }
    let response_inversions = ordering_violations(&y_lower, &y_upper);

    let (y_lower, y_upper) = enforce_ordering(&y_lower, &y_upper)?;
    let spec = BasisSpec::new(config.num_basis, config.order, 0.0, 1.0)?;
    let y = IntervalFunctionalDataset::from_discrete(&y_lower, &y_upper, &grid, &spec)?;
    let mut xs = Vec::with_capacity(NUM_PREDICTORS);
    let mut x_lower_raw = Vec::with_capacity(NUM_PREDICTORS);
    let mut x_upper_raw = Vec::with_capacity(NUM_PREDICTORS);
    for (lo, hi) in x_lowers.iter().zip(&x_uppers) {
        let (lo, hi) = enforce_ordering(lo, hi)?;
        xs.push(IntervalFunctionalDataset::from_discrete(
            &lo, &hi, &grid, &spec,
        )?);
        x_lower_raw.push(lo);
        x_upper_raw.push(hi);
    }

    Ok(GeneratedData {
        y,
        xs,
        y_lower_raw: y_lower,
        y_upper_raw: y_upper,
        x_lower_raw,
        x_upper_raw,
        response_inversions,
        predictor_inversions,
    })
}

/// One study result row.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub model: ModelKind,
    pub case: u8,
    pub replicate: usize,
    pub amse_lower: f64,
    pub amse_upper: f64,
    pub cp_lower: Option<f64>,
    pub cp_upper: Option<f64>,
}

/// Per-(model, case, metric) summary of the replicate distribution.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub case: u8,
    pub metric: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub n_replicates: usize,
}

/// All rows of a Monte Carlo study, ordered by (case, replicate, model).
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    /// Median and quartiles of every metric distribution.
    pub fn summarize(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(ModelKind, u8)> = self
            .rows
            .iter()
            .map(|r| (r.model, r.case))
            .collect();
        keys.sort();
        keys.dedup();
        let mut out = Vec::new();
        for (model, case) in keys {
            let rows: Vec<&MetricsRow> = self
                .rows
                .iter()
                .filter(|r| r.model == model && r.case == case)
                .collect();
            let metrics: [(&str, Vec<f64>); 4] = [
                ("amse_lower", rows.iter().map(|r| r.amse_lower).collect()),
                ("amse_upper", rows.iter().map(|r| r.amse_upper).collect()),
                (
                    "cp_lower",
                    rows.iter().filter_map(|r| r.cp_lower).collect(),
                ),
                (
                    "cp_upper",
                    rows.iter().filter_map(|r| r.cp_upper).collect(),
                ),
            ];
            for (name, mut values) in metrics {
                if values.is_empty() {
                    continue;
                }
                values.sort_by(f64::total_cmp);
                out.push(SummaryRow {
                    model,
                    case,
                    metric: name.to_string(),
                    median: empirical_quantile(&values, 0.5),
                    q1: empirical_quantile(&values, 0.25),
                    q3: empirical_quantile(&values, 0.75),
                    n_replicates: values.len(),
                });
            }
        }
        out
    }

    /// Median of one metric for a (model, case) pair, if present.
    pub fn median(&self, model: ModelKind, case: u8, metric: &str) -> Option<f64> {
        self.summarize()
            .into_iter()
            .find(|s| s.model == model && s.case == case && s.metric == metric)
            .map(|s| s.median)
    }
}

/// Runs one replicate: generate, split in half, fit every model on the first
/// half, and score predictions for the second half.
fn run_replicate(
    config: &SimConfig,
    case: &SimCase,
    models: &[ModelKind],
    replicate: usize,
) -> Result<Vec<MetricsRow>> {
    let seed = derive_seed(config.seed, ((case.index as u64) << 32) | replicate as u64);
    let data = generate(config, case, seed)?;
    let n = config.n;
    let n_train = n / 2;
    let train_idx: Vec<usize> = (0..n_train).collect();
    let test_idx: Vec<usize> = (n_train..n).collect();

    // predictions are scored against the test limit functions themselves,
    // i.e. the smoothed curves the generated data was converted into
    let grid = linspace(0.0, 1.0, config.grid_len);
    let y_train = data.y.subset(&train_idx)?;
    let y_lower_curves = data.y.lower().eval_on_grid(&grid)?;
    let y_upper_curves = data.y.upper().eval_on_grid(&grid)?;
    let y_test_lower = y_lower_curves.rows(n_train, n - n_train).into_owned();
    let y_test_upper = y_upper_curves.rows(n_train, n - n_train).into_owned();
    let xs_train: Vec<_> = data
        .xs
        .iter()
        .map(|x| x.subset(&train_idx))
        .collect::<Result<_>>()?;
    let xs_test: Vec<_> = data
        .xs
        .iter()
        .map(|x| x.subset(&test_idx))
        .collect::<Result<_>>()?;

    let dt = grid[1] - grid[0];
    let mut rows = Vec::with_capacity(models.len());
    for (ord, &model) in models.iter().enumerate() {
        let model_config = ModelConfig {
            mcm_replicates: config.mcm_replicates,
            seed: derive_seed(seed, ord as u64 + 1),
        };
        let fitted = fit(model, &y_train, &xs_train, &model_config)?;
        let pred = predict_limits(&fitted, &xs_test, &grid)?;
        let amse_lower = mean_l2_distance(&y_test_lower, &pred.lower, dt);
        let amse_upper = mean_l2_distance(&y_test_upper, &pred.upper, dt);

        let (cp_lower, cp_upper) = if model == ModelKind::Mcm {
            let train_pred = predict_limits(&fitted, &xs_train, &grid)?;
            let resid_lower = y_lower_curves.rows(0, n_train).into_owned() - &train_pred.lower;
            let resid_upper = y_upper_curves.rows(0, n_train).into_owned() - &train_pred.upper;
            let band = mcm_prediction_band(
                &fitted,
                &xs_test,
                &resid_lower,
                &resid_upper,
                config.alpha,
                &grid,
                derive_seed(seed, 0xBA4D),
            )?;
            let (cl, cu) = band.coverage(&y_test_lower, &y_test_upper)?;
            (Some(cl), Some(cu))
        } else {
            (None, None)
        };

        rows.push(MetricsRow {
            model,
            case: case.index,
            replicate,
            amse_lower,
            amse_upper,
            cp_lower,
            cp_upper,
        });
    }
    Ok(rows)
}

/// Runs the full Monte Carlo study over the given cases and models.
///
/// Replicates execute in parallel with seeds derived from
/// `(config.seed, case, replicate)`, and rows are sorted afterwards, so the
/// report is identical regardless of scheduling.
pub fn run_study(
    config: &SimConfig,
    cases: &[SimCase],
    models: &[ModelKind],
) -> Result<MetricsReport> {
    config.validate()?;
    if cases.is_empty() || models.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one case and one model".into(),
        ));
    }
    let jobs: Vec<(SimCase, usize)> = cases
        .iter()
        .flat_map(|case| (0..config.mc).map(move |r| (*case, r)))
        .collect();
    let mut rows: Vec<MetricsRow> = jobs
        .par_iter()
        .map(|(case, replicate)| {
            run_replicate(config, case, models, *replicate).map_err(|e| {
                Error::ReplicateFailed {
                    case: case.index,
                    replicate: *replicate,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<Vec<Vec<MetricsRow>>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.case, r.replicate, r.model));
    Ok(MetricsReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimConfig {
        SimConfig {
            n: 30,
            grid_len: 50,
            num_basis: 8,
            mc: 2,
            mcm_replicates: 4,
            seed: 123,
            ..SimConfig::default()
        }
    }

    #[test]
    fn case_table_matches_the_study_design() {
        assert_eq!(SimCase::by_index(3).unwrap().predictor_offset, (5.0, 8.0));
        assert_eq!(SimCase::by_index(4).unwrap().response_offset, (8.0, 20.0));
        assert!(matches!(
            SimCase::by_index(5),
            Err(Error::InvalidSimCase(5))
        ));
        for case in &CASES {
            assert!(case.response_offset.0 < case.response_offset.1);
            assert!(case.predictor_offset.0 < case.predictor_offset.1);
        }
    }

    #[test]
    fn covariance_has_unit_diagonal_and_symmetry() {
        let grid = linspace(0.0, 1.0, 40);
        let cov = GpSampler::covariance(&grid);
        for i in 0..40 {
            assert_eq!(cov[(i, i)], 1.0);
        }
        assert_eq!((&cov - cov.transpose()).amax(), 0.0);
    }

    #[test]
    fn gp_mean_is_near_zero() {
        let grid = linspace(0.0, 1.0, 30);
        let sampler = GpSampler::new(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut sum = 0.0;
        let draws = 2000;
        for _ in 0..draws {
            sum += sampler.sample(&mut rng)[10];
        }
        let mean = sum / draws as f64;
        assert!(mean.abs() < 0.1, "sample mean {mean}");
    }

    #[test]
    fn gp_empirical_covariance_matches_kernel() {
        // cov(V(0.1), V(0.15)) = exp(-100 * 0.05^2) = exp(-0.25)
        let grid = vec![0.1, 0.15];
        let sampler = GpSampler::new(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 5000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let v = sampler.sample(&mut rng);
            sum += v[0] * v[1];
        }
        let emp = sum / draws as f64;
        let expected = (-0.25f64).exp();
        assert!(
            (emp - expected).abs() < 0.05,
            "empirical {emp} vs kernel {expected}"
        );
    }

    #[test]
    fn beta_surfaces_match_their_formulas() {
        for t in [0.0, 0.3, 0.8] {
            assert_eq!(true_beta(1, 1.0, t).unwrap(), 0.0);
        }
        for s in [0.0, 0.4, 1.0] {
            assert_eq!(true_beta(1, s, 0.5).unwrap(), 0.0);
        }
        assert!((true_beta(2, 1.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let b3 = true_beta(3, 0.5, 0.5).unwrap();
        assert!((b3 - (1.0 + 8.0 * (-5.0f64).exp())).abs() < 1e-12);
        assert!((b3 - 1.0539).abs() < 1e-4);
        assert!(true_beta(4, 0.5, 0.5).is_err());
    }

    #[test]
    fn generated_limits_are_ordered_and_reported() {
        let config = small_config();
        for seed in 0..25 {
            let data = generate(&config, &CASES[seed as usize % 4], seed).unwrap();
            assert_eq!(
                ordering_violations(&data.y_lower_raw, &data.y_upper_raw),
                0
            );
            for (lo, hi) in data.x_lower_raw.iter().zip(&data.x_upper_raw) {
                assert_eq!(ordering_violations(lo, hi), 0);
            }
            assert_eq!(data.xs.len(), NUM_PREDICTORS);
        }
    }

    #[test]
    fn mean_response_center_matches_the_analytic_constant() {
        // with predictor centers 10 + V and E[V] = 0, the average generated
        // response center converges on 10 * sum_m Riemann(beta_m(., t))
        let config = SimConfig {
            n: 400,
            grid_len: 60,
            noise_var: 0.0,
            ..small_config()
        };
        let data = generate(&config, &CASES[0], 3).unwrap();
        let centers = (&data.y_lower_raw + &data.y_upper_raw) * 0.5;
        let grid = linspace(0.0, 1.0, config.grid_len);
        let ds = grid[1] - grid[0];
        for (col, &t) in grid.iter().enumerate() {
            let expected: f64 = (1..=NUM_PREDICTORS)
                .map(|m| {
                    (0..config.grid_len - 1)
                        .map(|j| 10.0 * true_beta(m, grid[j], t).unwrap() * ds)
                        .sum::<f64>()
                })
                .sum();
            let mean = centers.column(col).mean();
            assert!(
                (mean - expected).abs() < 0.3,
                "t = {t}: mean {mean} vs analytic {expected}"
            );
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let config = small_config();
        let a = generate(&config, &CASES[1], 7).unwrap();
        let b = generate(&config, &CASES[1], 7).unwrap();
        assert_eq!(a.y_lower_raw, b.y_lower_raw);
        assert_eq!(a.y_upper_raw, b.y_upper_raw);
        let c = generate(&config, &CASES[1], 8).unwrap();
        assert!((&a.y_lower_raw - &c.y_lower_raw).amax() > 1e-6);
    }

    #[test]
    fn noiseless_center_regression_recovers_the_surfaces() {
        // with zero noise the model fit on centers reproduces each beta
        // surface up to basis-truncation error
        let config = SimConfig {
            n: 200,
            grid_len: 60,
            noise_var: 0.0,
            ..small_config()
        };
        let data = generate(&config, &CASES[0], 11).unwrap();
        let centers: Vec<_> = data.xs.iter().map(|x| x.center_dataset()).collect();
        let fit = crate::regression::fit_fof(&centers, &data.y.center_dataset()).unwrap();
        let pts = linspace(0.0, 1.0, 20);
        for m in 0..NUM_PREDICTORS {
            let mut truth = Vec::new();
            let mut est = Vec::new();
            for &s in &pts {
                for &t in &pts {
                    truth.push(true_beta(m + 1, s, t).unwrap());
                    est.push(fit.coefficient_surface(m, s, t).unwrap());
                }
            }
            let corr = pearson(&truth, &est);
            assert!(corr > 0.9, "surface {m} correlation {corr}");
        }
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(b) {
            num += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        num / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn study_rows_are_deterministic_and_stable_under_more_replicates() {
        let config = small_config();
        let models = [ModelKind::Flm, ModelKind::Cm];
        let report = run_study(&config, &CASES[..1], &models).unwrap();
        assert_eq!(report.rows.len(), 2 * 2);
        let report2 = run_study(&config, &CASES[..1], &models).unwrap();
        for (a, b) in report.rows.iter().zip(&report2.rows) {
            assert_eq!(a.amse_lower, b.amse_lower);
            assert_eq!(a.amse_upper, b.amse_upper);
        }
        // doubling mc keeps the first replicates identical
        let config4 = SimConfig {
            mc: 4,
            ..small_config()
        };
        let report4 = run_study(&config4, &CASES[..1], &models).unwrap();
        for row in &report.rows {
            let twin = report4
                .rows
                .iter()
                .find(|r| {
                    r.model == row.model && r.case == row.case && r.replicate == row.replicate
                })
                .unwrap();
            assert_eq!(row.amse_lower, twin.amse_lower);
        }
    }

    #[test]
    fn mcm_rows_carry_coverage() {
        let config = SimConfig {
            n: 24,
            grid_len: 40,
            mc: 1,
            mcm_replicates: 8,
            seed: 5,
            ..SimConfig::default()
        };
        let report = run_study(&config, &CASES[..1], &[ModelKind::Mcm]).unwrap();
        let row = &report.rows[0];
        let cp = row.cp_lower.unwrap();
        assert!((0.0..=1.0).contains(&cp));
        assert!(row.cp_upper.is_some());
        assert!(row.amse_lower >= 0.0);
    }

    #[test]
    fn summaries_aggregate_per_model_case_metric() {
        let config = small_config();
        let report = run_study(&config, &CASES[..1], &[ModelKind::Cm]).unwrap();
        let summary = report.summarize();
        let amse = summary
            .iter()
            .find(|s| s.metric == "amse_lower")
            .expect("summary row");
        assert_eq!(amse.n_replicates, config.mc);
        assert!(amse.q1 <= amse.median && amse.median <= amse.q3);
        assert!(report.median(ModelKind::Cm, 1, "amse_lower").is_some());
        assert!(report.median(ModelKind::Cm, 1, "cp_lower").is_none());
    }
}
