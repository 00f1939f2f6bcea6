//! Python bindings exposing the main types and operations: basis
//! construction and smoothing, interval-valued datasets, the five interval
//! models, prediction bands, and the simulation harness.
//!
//! Curves cross the boundary as plain lists (`list[float]`, `list[list
//! [float]]`), keeping the module dependency-free on the Python side.

use std::sync::Arc;

use ifr_core::basis;
use ifr_core::fda;
use ifr_core::models;
use ifr_core::simulation;
use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py_err(e: ifr_core::Error) -> PyErr {
    PyValueError::new_err(format!("[{}] {e}", e.category()))
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("rows have unequal lengths"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

/// A clamped B-spline basis on a closed interval.
#[pyclass(module = "ifr")]
struct BasisSpec {
    inner: Arc<basis::BasisSpec>,
}

#[pymethods]
impl BasisSpec {
    #[new]
    #[pyo3(signature = (num_basis, order = 4, lower = 0.0, upper = 1.0))]
    fn new(num_basis: usize, order: usize, lower: f64, upper: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(
                basis::BasisSpec::new(num_basis, order, lower, upper).map_err(to_py_err)?,
            ),
        })
    }

    #[getter]
    fn num_basis(&self) -> usize {
        self.inner.num_basis()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    #[getter]
    fn knots(&self) -> Vec<f64> {
        self.inner.knots().to_vec()
    }

    /// Values of all basis functions at `t`.
    fn evaluate(&self, t: f64) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .evaluate(t)
            .map_err(to_py_err)?
            .iter()
            .cloned()
            .collect())
    }

    /// Gram matrix of pairwise basis inner products.
    fn gram_matrix(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.inner.gram_matrix())
    }

    /// Least-squares coefficients for one discretely observed curve.
    fn smooth(&self, grid: Vec<f64>, values: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .smooth(&grid, &values)
            .map_err(to_py_err)?
            .iter()
            .cloned()
            .collect())
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.domain();
        format!(
            "BasisSpec(num_basis={}, order={}, domain=({lo}, {hi}))",
            self.inner.num_basis(),
            self.inner.order()
        )
    }
}

/// Interval-valued functional data: lower/upper limit curves on one basis.
#[pyclass(module = "ifr", from_py_object)]
#[derive(Clone)]
struct IntervalDataset {
    inner: ifr_core::IntervalFunctionalDataset,
}

#[pymethods]
impl IntervalDataset {
    /// Smooths discretely observed lower/upper values (one row per sample)
    /// onto a shared basis.
    #[staticmethod]
    #[pyo3(signature = (lower, upper, grid, num_basis = 8, order = 4))]
    fn from_discrete(
        lower: Vec<Vec<f64>>,
        upper: Vec<Vec<f64>>,
        grid: Vec<f64>,
        num_basis: usize,
        order: usize,
    ) -> PyResult<Self> {
        let lo = matrix_from_rows(&lower)?;
        let hi = matrix_from_rows(&upper)?;
        let (a, b) = (
            *grid.first().ok_or_else(|| PyValueError::new_err("empty grid"))?,
            *grid.last().unwrap(),
        );
        let spec = basis::BasisSpec::new(num_basis, order, a, b).map_err(to_py_err)?;
        Ok(Self {
            inner: ifr_core::IntervalFunctionalDataset::from_discrete(&lo, &hi, &grid, &spec)
                .map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    /// Smoothed lower limit curves evaluated on a grid.
    #[pyo3(signature = (grid = None))]
    fn lower_values(&self, grid: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let grid = grid.unwrap_or_else(|| self.inner.grid().to_vec());
        Ok(matrix_to_rows(
            &self.inner.lower().eval_on_grid(&grid).map_err(to_py_err)?,
        ))
    }

    /// Smoothed upper limit curves evaluated on a grid.
    #[pyo3(signature = (grid = None))]
    fn upper_values(&self, grid: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let grid = grid.unwrap_or_else(|| self.inner.grid().to_vec());
        Ok(matrix_to_rows(
            &self.inner.upper().eval_on_grid(&grid).map_err(to_py_err)?,
        ))
    }

    /// Center curves `(upper + lower) / 2` evaluated on a grid.
    #[pyo3(signature = (grid = None))]
    fn center_values(&self, grid: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let grid = grid.unwrap_or_else(|| self.inner.grid().to_vec());
        Ok(matrix_to_rows(
            &self
                .inner
                .center_dataset()
                .eval_on_grid(&grid)
                .map_err(to_py_err)?,
        ))
    }

    /// Dataset restricted to the given sample indices.
    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.subset(&indices).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "IntervalDataset(n_samples={}, grid_len={}, num_basis={})",
            self.inner.n_samples(),
            self.inner.grid().len(),
            self.inner.basis().num_basis()
        )
    }
}

type CurveRows = Vec<Vec<f64>>;

/// A fitted interval regression model.
#[pyclass(module = "ifr")]
struct IntervalModel {
    inner: models::IntervalFitResult,
}

#[pymethods]
impl IntervalModel {
    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    /// Predicted (lower, upper) limit curves for new predictors, evaluated
    /// on `grid`. The output always satisfies lower <= upper pointwise.
    fn predict_limits(
        &self,
        xs: Vec<IntervalDataset>,
        grid: Vec<f64>,
    ) -> PyResult<(CurveRows, CurveRows)> {
        let xs: Vec<_> = xs.into_iter().map(|x| x.inner).collect();
        let pred = models::predict_limits(&self.inner, &xs, &grid).map_err(to_py_err)?;
        Ok((matrix_to_rows(&pred.lower), matrix_to_rows(&pred.upper)))
    }

    /// Residual-bootstrap prediction bands from a Monte Carlo fit; returns
    /// `((lower_lo, lower_hi), (upper_lo, upper_hi))` on `grid`.
    #[pyo3(signature = (xs, residual_lower, residual_upper, grid, alpha = 0.05, seed = 0))]
    fn prediction_band(
        &self,
        xs: Vec<IntervalDataset>,
        residual_lower: Vec<Vec<f64>>,
        residual_upper: Vec<Vec<f64>>,
        grid: Vec<f64>,
        alpha: f64,
        seed: u64,
    ) -> PyResult<((CurveRows, CurveRows), (CurveRows, CurveRows))> {
        let xs: Vec<_> = xs.into_iter().map(|x| x.inner).collect();
        let band = models::mcm_prediction_band(
            &self.inner,
            &xs,
            &matrix_from_rows(&residual_lower)?,
            &matrix_from_rows(&residual_upper)?,
            alpha,
            &grid,
            seed,
        )
        .map_err(to_py_err)?;
        let (ll, lh) = band.lower_band();
        let (ul, uh) = band.upper_band();
        Ok((
            (matrix_to_rows(ll), matrix_to_rows(lh)),
            (matrix_to_rows(ul), matrix_to_rows(uh)),
        ))
    }

    fn __repr__(&self) -> String {
        format!("IntervalModel(kind='{}')", self.inner.kind())
    }
}

/// Fits an interval model (`"flm"`, `"cm"`, `"crm"`, `"bcrm"`, or `"mcm"`)
/// of the response dataset on the predictor datasets.
#[pyfunction]
#[pyo3(signature = (model, y, xs, mcm_replicates = 100, seed = 0))]
fn fit(
    model: &str,
    y: &IntervalDataset,
    xs: Vec<IntervalDataset>,
    mcm_replicates: usize,
    seed: u64,
) -> PyResult<IntervalModel> {
    let kind: models::ModelKind = model.parse().map_err(to_py_err)?;
    let xs: Vec<_> = xs.into_iter().map(|x| x.inner).collect();
    let config = models::ModelConfig {
        mcm_replicates,
        seed,
    };
    Ok(IntervalModel {
        inner: models::fit(kind, &y.inner, &xs, &config).map_err(to_py_err)?,
    })
}

/// Generates one synthetic dataset for a simulation case (1-4); returns a
/// dict with the response, predictors, and the raw generated limits.
#[pyfunction]
#[pyo3(signature = (case, n = 50, grid_len = 100, num_basis = 8, noise_var = 4.0, seed = 0))]
fn simulate(
    py: Python<'_>,
    case: u8,
    n: usize,
    grid_len: usize,
    num_basis: usize,
    noise_var: f64,
    seed: u64,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let config = simulation::SimConfig {
        n,
        grid_len,
        num_basis,
        noise_var,
        seed,
        ..simulation::SimConfig::default()
    };
    let case = simulation::SimCase::by_index(case).map_err(to_py_err)?;
    let data = simulation::generate(&config, &case, seed).map_err(to_py_err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("y", IntervalDataset { inner: data.y })?;
    dict.set_item(
        "xs",
        data.xs
            .into_iter()
            .map(|inner| IntervalDataset { inner })
            .collect::<Vec<_>>(),
    )?;
    dict.set_item("y_lower_raw", matrix_to_rows(&data.y_lower_raw))?;
    dict.set_item("y_upper_raw", matrix_to_rows(&data.y_upper_raw))?;
    dict.set_item("response_inversions", data.response_inversions)?;
    dict.set_item("predictor_inversions", data.predictor_inversions)?;
    Ok(dict.unbind())
}

/// Runs a Monte Carlo study; returns one dict per (case, replicate, model)
/// with the AMSE metrics and, for `"mcm"`, band coverage.
#[pyfunction]
#[pyo3(signature = (cases, models, mc = 10, n = 100, grid_len = 100, num_basis = 8, mcm_replicates = 100, alpha = 0.05, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn run_study(
    py: Python<'_>,
    cases: Vec<u8>,
    models: Vec<String>,
    mc: usize,
    n: usize,
    grid_len: usize,
    num_basis: usize,
    mcm_replicates: usize,
    alpha: f64,
    seed: u64,
) -> PyResult<Vec<Py<pyo3::types::PyDict>>> {
    let cases: Vec<_> = cases
        .into_iter()
        .map(simulation::SimCase::by_index)
        .collect::<Result<_, _>>()
        .map_err(to_py_err)?;
    let models: Vec<models::ModelKind> = models
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_, _>>()
        .map_err(to_py_err)?;
    let config = simulation::SimConfig {
        n,
        grid_len,
        num_basis,
        mc,
        mcm_replicates,
        alpha,
        seed,
        ..simulation::SimConfig::default()
    };
    let report = py
        .detach(|| simulation::run_study(&config, &cases, &models))
        .map_err(to_py_err)?;
    report
        .rows
        .iter()
        .map(|row| {
            let dict = pyo3::types::PyDict::new(py);
            dict.set_item("model", row.model.to_string())?;
            dict.set_item("case", row.case)?;
            dict.set_item("replicate", row.replicate)?;
            dict.set_item("amse_lower", row.amse_lower)?;
            dict.set_item("amse_upper", row.amse_upper)?;
            dict.set_item("cp_lower", row.cp_lower)?;
            dict.set_item("cp_upper", row.cp_upper)?;
            Ok(dict.unbind())
        })
        .collect()
}

/// Riemann-sum L2 distance between two curves sampled on a uniform grid
/// with spacing `dt`.
#[pyfunction]
fn l2_distance(a: Vec<f64>, b: Vec<f64>, dt: f64) -> f64 {
    fda::l2_distance_values(&a, &b, dt)
}

#[pymodule]
fn ifr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<BasisSpec>()?;
    m.add_class::<IntervalDataset>()?;
    m.add_class::<IntervalModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(l2_distance, m)?)?;
    Ok(())
}
