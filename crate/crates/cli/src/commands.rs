//! Implementations of the five subcommands.

use std::path::{Path, PathBuf};

use ifr_core::basis::BasisSpec;
use ifr_core::fda::mean_l2_distance;
use ifr_core::grid::uniform_spacing;
use ifr_core::interval::IntervalFunctionalDataset;
use ifr_core::models::{
    fit, mcm_prediction_band, predict_limits, IntervalFitResult, ModelConfig, ModelKind,
};
use ifr_core::panel::{load_panel, write_atomic, PanelDataset};
use ifr_core::simulation::{generate, run_study, MetricsReport, MetricsRow, SimCase, SimConfig};
use ifr_core::{derive_seed, Error};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cli::{EvaluateArgs, FitArgs, McStudyArgs, PredictArgs, SimulateArgs};
use crate::config::{parse_cases, parse_id_list, parse_models, resolve_seed, FileConfig};
use crate::CliError;

fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn echo_seed(seed: u64) {
    println!("seed: {seed}");
}

/// `simulate`: generate one case's raw interval-valued panel and write it as
/// long-format CSV (entities sim0000.., variables y, x1, x2, x3).
pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, &file, 0)?;
    let case = SimCase::by_index(resolve(args.case, file.usize("case")?.map(|v| v as u8), 1))?;
    let config = SimConfig {
        n: resolve(args.n, file.usize("n")?, 50),
        grid_len: file.usize("grid-len")?.unwrap_or(100),
        num_basis: resolve(args.basis_k, file.usize("basis-k")?, 8),
        order: resolve(args.order, file.usize("order")?, 4),
        seed,
        ..SimConfig::default()
    };
    let data = generate(&config, &case, seed)?;

    let entities: Vec<String> = (0..config.n).map(|i| format!("sim{i:04}")).collect();
    let grid: Vec<f64> = data.y.grid().to_vec();
    let mut variables = vec!["y".to_string()];
    let mut lower = vec![data.y_lower_raw];
    let mut upper = vec![data.y_upper_raw];
    for m in 0..data.xs.len() {
        variables.push(format!("x{}", m + 1));
    }
    lower.extend(data.x_lower_raw);
    upper.extend(data.x_upper_raw);
    let panel = PanelDataset::from_parts(entities, grid, variables, lower, upper)?;
    panel.save(&args.out)?;
    echo_seed(seed);
    if data.response_inversions + data.predictor_inversions > 0 {
        println!(
            "repaired inversions: response={}, predictors={}",
            data.response_inversions, data.predictor_inversions
        );
    }
    Ok(())
}

/// On-disk form of a fitted model, with enough basis metadata to predict in
/// a separate process.
#[derive(Serialize, Deserialize)]
pub struct PersistedFit {
    pub format: String,
    pub kind: String,
    pub response: String,
    pub predictors: Vec<String>,
    pub basis_k: usize,
    pub order: usize,
    pub domain: (f64, f64),
    pub seed: u64,
    pub fit: IntervalFitResult,
}

struct SmoothedPanel {
    y: IntervalFunctionalDataset,
    xs: Vec<IntervalFunctionalDataset>,
    predictors: Vec<String>,
    response_index: usize,
}

/// Smooths a panel onto a common basis, taking every non-response variable
/// (sorted by name) as a predictor.
fn smooth_panel(
    panel: &PanelDataset,
    response: &str,
    basis_k: usize,
    order: usize,
) -> Result<SmoothedPanel, CliError> {
    let response_index = panel
        .variable_index(response)
        .ok_or_else(|| CliError::data(format!("response variable '{response}' not in panel")))?;
    let (lo, hi) = (panel.grid()[0], panel.grid()[panel.grid().len() - 1]);
    let spec = BasisSpec::new(basis_k, order, lo, hi)?;
    let y = panel.to_interval_dataset(response, &spec)?;
    let mut xs = Vec::new();
    let mut predictors = Vec::new();
    for v in panel.variables() {
        if v != response {
            xs.push(panel.to_interval_dataset(v, &spec)?);
            predictors.push(v.clone());
        }
    }
    if xs.is_empty() {
        return Err(CliError::data(format!(
            "panel has no predictor variables besides '{response}'"
        )));
    }
    Ok(SmoothedPanel {
        y,
        xs,
        predictors,
        response_index,
    })
}

/// `fit`: smooth a panel onto a common basis, fit one model, persist it.
pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, &file, 0)?;
    let model: ModelKind = resolve(args.model.clone(), file.string("model")?, "cm".into())
        .parse()
        .map_err(CliError::from)?;
    let response = resolve(args.response.clone(), file.string("response")?, "y".into());
    let basis_k = resolve(args.basis_k, file.usize("basis-k")?, 8);
    let order = resolve(args.order, file.usize("order")?, 4);
    let mcm_b = resolve(args.mcm_b, file.usize("mcm-b")?, 100);

    let panel = load_panel(&args.input)?;
    let smoothed = smooth_panel(&panel, &response, basis_k, order)?;
    let config = ModelConfig {
        mcm_replicates: mcm_b,
        seed,
    };
    let fitted = fit(model, &smoothed.y, &smoothed.xs, &config)?;
    let (lo, hi) = (panel.grid()[0], panel.grid()[panel.grid().len() - 1]);
    let persisted = PersistedFit {
        format: "ifr-fit/1".into(),
        kind: model.to_string(),
        response,
        predictors: smoothed.predictors,
        basis_k,
        order,
        domain: (lo, hi),
        seed,
        fit: fitted,
    };
    let json = serde_json::to_string(&persisted)
        .map_err(|e| CliError::internal(format!("cannot serialize fit: {e}")))?;
    write_atomic(&args.out, json.as_bytes()).map_err(Error::from)?;
    echo_seed(seed);
    Ok(())
}

pub fn load_fit(path: &Path) -> Result<PersistedFit, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read fit file {path:?}: {e}")))?;
    let persisted: PersistedFit = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("fit file {path:?} is not valid: {e}")))?;
    if persisted.format != "ifr-fit/1" {
        return Err(CliError::data(format!(
            "unsupported fit format '{}'",
            persisted.format
        )));
    }
    Ok(persisted)
}

/// `predict`: apply a persisted fit to a new panel; writes
/// `entity,time,lower,upper` rows.
pub fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let persisted = load_fit(&args.fit)?;
    let panel = load_panel(&args.input)?;
    let spec = BasisSpec::new(persisted.basis_k, persisted.order, persisted.domain.0, persisted.domain.1)?;
    let mut xs = Vec::new();
    for name in &persisted.predictors {
        xs.push(panel.to_interval_dataset(name, &spec).map_err(|e| match e {
            Error::Panel(_) => {
                CliError::data(format!("panel is missing predictor variable '{name}'"))
            }
            other => CliError::from(other),
        })?);
    }
    let grid = panel.grid().to_vec();
    let pred = predict_limits(&persisted.fit, &xs, &grid)?;
    let mut out = String::from("entity,time,lower,upper\n");
    for (i, entity) in panel.entities().iter().enumerate() {
        for (j, t) in grid.iter().enumerate() {
            out.push_str(&format!(
                "{entity},{t},{},{}\n",
                pred.lower[(i, j)],
                pred.upper[(i, j)]
            ));
        }
    }
    write_atomic(&args.out, out.as_bytes()).map_err(Error::from)?;
    echo_seed(persisted.seed);
    if pred.corrected_points > 0 {
        println!("reordered points: {}", pred.corrected_points);
    }
    Ok(())
}

/// Writes the report CSV plus a JSON summary next to it.
pub fn write_report(report: &MetricsReport, csv_path: &Path) -> Result<PathBuf, CliError> {
    let mut out = String::from("model,case,replicate,amse_lower,amse_upper,cp_lower,cp_upper\n");
    for row in &report.rows {
        let cp_l = row.cp_lower.map(|v| v.to_string()).unwrap_or_default();
        let cp_u = row.cp_upper.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{cp_l},{cp_u}\n",
            row.model, row.case, row.replicate, row.amse_lower, row.amse_upper
        ));
    }
    write_atomic(csv_path, out.as_bytes()).map_err(Error::from)?;

    let summary: Vec<serde_json::Value> = report
        .summarize()
        .into_iter()
        .map(|s| {
            serde_json::json!({
                "model": s.model.to_string(),
                "case": s.case,
                "metric": s.metric,
                "median": s.median,
                "q1": s.q1,
                "q3": s.q3,
                "n_replicates": s.n_replicates,
            })
        })
        .collect();
    let json_path = csv_path.with_extension("json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::internal(format!("cannot serialize summary: {e}")))?;
    write_atomic(&json_path, json.as_bytes()).map_err(Error::from)?;
    Ok(json_path)
}

/// `evaluate`: repeated random-split protocol on an observed panel.
///
/// Each repeat shuffles the entities with a stream derived from the master
/// seed, fits every model on the training share, and scores test predictions
/// against the raw panel values. Coverage columns are filled for `mcm`.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, &file, 0)?;
    let models = parse_models(&resolve(
        args.models.clone(),
        file.string("models")?,
        "flm,cm,crm,bcrm,mcm".into(),
    ))?;
    let response = resolve(args.response.clone(), file.string("response")?, "y".into());
    let basis_k = resolve(args.basis_k, file.usize("basis-k")?, 8);
    let order = resolve(args.order, file.usize("order")?, 4);
    let mcm_b = resolve(args.mcm_b, file.usize("mcm-b")?, 100);
    let alpha = resolve(args.alpha, file.f64("alpha")?, 0.05);
    let train_frac = resolve(args.train_frac, file.f64("train-frac")?, 0.8);
    let mut repeats = resolve(args.repeats, file.usize("repeats")?, 100);
    let train_ids = file.string("train-ids")?.map(|s| parse_id_list(&s));
    let test_ids = file.string("test-ids")?.map(|s| parse_id_list(&s));

    let panel = load_panel(&args.input)?;
    let smoothed = smooth_panel(&panel, &response, basis_k, order)?;
    let dt = uniform_spacing(panel.grid())?;
    let grid = panel.grid().to_vec();
    let n = panel.entities().len();

    let explicit_split = match (&train_ids, &test_ids) {
        (Some(train), Some(test)) => {
            let lookup = |ids: &[String]| -> Result<Vec<usize>, CliError> {
                ids.iter()
                    .map(|id| {
                        panel
                            .entities()
                            .iter()
                            .position(|e| e == id)
                            .ok_or_else(|| CliError::data(format!("unknown entity id '{id}'")))
                    })
                    .collect()
            };
            Some((lookup(train)?, lookup(test)?))
        }
        (None, None) => None,
        _ => {
            return Err(CliError::config(
                "train-ids and test-ids must be given together".into(),
            ))
        }
    };
    if explicit_split.is_some() {
        repeats = 1;
    }
    let n_train = ((train_frac * n as f64).round() as usize).clamp(1, n.saturating_sub(1));
    if explicit_split.is_none() && (n_train == 0 || n_train >= n) {
        return Err(CliError::config(format!(
            "train fraction {train_frac} leaves an empty split for {n} entities"
        )));
    }

    let truth_lower = panel.lower_values(smoothed.response_index);
    let truth_upper = panel.upper_values(smoothed.response_index);
    let take_rows = |m: &DMatrix<f64>, idx: &[usize]| {
        let mut out = DMatrix::zeros(idx.len(), m.ncols());
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from(&m.row(i));
        }
        out
    };

    let mut rows = Vec::new();
    for repeat in 0..repeats {
        let (train_idx, test_idx) = match &explicit_split {
            Some((train, test)) => (train.clone(), test.clone()),
            None => {
                let mut order: Vec<usize> = (0..n).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, repeat as u64));
                order.shuffle(&mut rng);
                let mut train = order[..n_train].to_vec();
                let mut test = order[n_train..].to_vec();
                train.sort_unstable();
                test.sort_unstable();
                (train, test)
            }
        };
        if train_idx.is_empty() || test_idx.is_empty() {
            return Err(CliError::config("split is empty on one side".into()));
        }
        let y_train = smoothed.y.subset(&train_idx)?;
        let xs_train: Vec<_> = smoothed
            .xs
            .iter()
            .map(|x| x.subset(&train_idx))
            .collect::<Result<_, _>>()?;
        let xs_test: Vec<_> = smoothed
            .xs
            .iter()
            .map(|x| x.subset(&test_idx))
            .collect::<Result<_, _>>()?;
        let test_lower = take_rows(truth_lower, &test_idx);
        let test_upper = take_rows(truth_upper, &test_idx);

        for (ord, &model) in models.iter().enumerate() {
            let config = ModelConfig {
                mcm_replicates: mcm_b,
                seed: derive_seed(derive_seed(seed, repeat as u64), ord as u64 + 1),
            };
            let fitted = fit(model, &y_train, &xs_train, &config)?;
            let pred = predict_limits(&fitted, &xs_test, &grid)?;
            let amse_lower = mean_l2_distance(&test_lower, &pred.lower, dt);
            let amse_upper = mean_l2_distance(&test_upper, &pred.upper, dt);
            let (cp_lower, cp_upper) = if model == ModelKind::Mcm {
                let train_pred = predict_limits(&fitted, &xs_train, &grid)?;
                let resid_l = take_rows(truth_lower, &train_idx) - &train_pred.lower;
                let resid_u = take_rows(truth_upper, &train_idx) - &train_pred.upper;
                let band = mcm_prediction_band(
                    &fitted,
                    &xs_test,
                    &resid_l,
                    &resid_u,
                    alpha,
                    &grid,
                    derive_seed(derive_seed(seed, repeat as u64), 0xBA4D),
                )?;
                let (cl, cu) = band.coverage(&test_lower, &test_upper)?;
                (Some(cl), Some(cu))
            } else {
                (None, None)
            };
            rows.push(MetricsRow {
                model,
                case: 0,
                replicate: repeat,
                amse_lower,
                amse_upper,
                cp_lower,
                cp_upper,
            });
        }
    }
    rows.sort_by_key(|r| (r.replicate, r.model));
    write_report(&MetricsReport { rows }, &args.out)?;
    echo_seed(seed);
    Ok(())
}

/// `mc-study`: the full simulation protocol over cases and models.
pub fn cmd_mc_study(args: &McStudyArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, &file, 0)?;
    let models = parse_models(&resolve(
        args.models.clone(),
        file.string("models")?,
        "flm,cm,crm,bcrm,mcm".into(),
    ))?;
    let cases = parse_cases(&resolve(
        args.cases.clone(),
        file.string("cases")?,
        "1,2,3,4".into(),
    ))?
    .into_iter()
    .map(SimCase::by_index)
    .collect::<Result<Vec<_>, _>>()?;
    let config = SimConfig {
        n: resolve(args.n, file.usize("n")?, 200),
        grid_len: file.usize("grid-len")?.unwrap_or(100),
        num_basis: resolve(args.basis_k, file.usize("basis-k")?, 8),
        order: resolve(args.order, file.usize("order")?, 4),
        mc: resolve(args.mc, file.usize("mc")?, 250),
        mcm_replicates: resolve(args.mcm_b, file.usize("mcm-b")?, 100),
        alpha: resolve(args.alpha, file.f64("alpha")?, 0.05),
        seed,
        ..SimConfig::default()
    };
    let report = run_study(&config, &cases, &models)?;
    write_report(&report, &args.out)?;
    echo_seed(seed);
    Ok(())
}
