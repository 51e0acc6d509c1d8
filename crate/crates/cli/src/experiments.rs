//! Batch and online experiment runners and their CSV outputs.
//!
//! `results.csv` columns, in order: dataset, model, nmse_db,
//! validation_nmse_db, width, mu, taps, reg, embed_len, lambda, eta, nu,
//! seconds. Fields that do not apply to a model are left empty.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rmk_core::batch::{evaluate_on_test, grid_search, BatchMethod, StackingConfig};
use rmk_core::datasets::SeriesDataset;
use rmk_core::online::{klms_baseline, run_online, OnlineReport};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const RESULT_HEADER: [&str; 13] = [
    "dataset",
    "model",
    "nmse_db",
    "validation_nmse_db",
    "width",
    "mu",
    "taps",
    "reg",
    "embed_len",
    "lambda",
    "eta",
    "nu",
    "seconds",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub model: String,
    pub nmse_db: f64,
    pub validation_nmse_db: Option<f64>,
    pub width: Option<f64>,
    pub mu: Option<f64>,
    pub taps: Option<usize>,
    pub reg: Option<f64>,
    pub embed_len: Option<usize>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub nu: Option<f64>,
    pub seconds: f64,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultRow {
    fn record(&self) -> [String; 13] {
        [
            self.dataset.clone(),
            self.model.clone(),
            self.nmse_db.to_string(),
            opt(self.validation_nmse_db),
            opt(self.width),
            opt(self.mu),
            opt(self.taps),
            opt(self.reg),
            opt(self.embed_len),
            opt(self.lambda),
            opt(self.eta),
            opt(self.nu),
            self.seconds.to_string(),
        ]
    }
}

/// One row per (dataset, model) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
        let mut write = || -> csv::Result<()> {
            w.write_record(RESULT_HEADER)?;
            for row in &self.rows {
                w.write_record(row.record())?;
            }
            w.flush()?;
            Ok(())
        };
        write().map_err(|e| CliError::io(path, e.into()))
    }
}

/// Per-sample predictions of several models on the same targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions {
    pub index: Vec<usize>,
    pub target: Vec<f64>,
    pub models: Vec<(String, Vec<f64>)>,
}

impl Predictions {
    pub fn write_csv(&self, path: &Path, index_name: &str) -> Result<(), CliError> {
        let err = |e: csv::Error| CliError::io(path, e.into());
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        let mut header = vec![index_name.to_owned(), "target".to_owned()];
        header.extend(self.models.iter().map(|(m, _)| m.clone()));
        w.write_record(&header).map_err(err)?;
        for (row, (&i, &t)) in self.index.iter().zip(&self.target).enumerate() {
            let mut rec = vec![i.to_string(), t.to_string()];
            rec.extend(self.models.iter().map(|(_, p)| p[row].to_string()));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }
}

pub struct BatchRun {
    pub table: ResultTable,
    pub predictions: Predictions,
}

/// Grid-searches every configured batch model on the validation split and
/// scores the selected configuration on the test split.
pub fn run_batch(cfg: &ExperimentConfig, ds: &SeriesDataset) -> Result<BatchRun, CliError> {
    let methods = cfg.batch.methods()?;
    let grid = cfg.batch.grid.to_grid()?;
    let features = cfg.batch.stacking_features()?;
    let range = ds.test_range();
    let mut predictions =
        Predictions { index: range.clone().collect(), target: ds.eval_targets()[range].to_vec(), models: Vec::new() };
    let mut table = ResultTable::default();
    for (name, method) in methods {
        let context = |stage: &str| format!("{} / {name}: {stage}", ds.name);
        let start = Instant::now();
        let search = grid_search(ds, method, &grid, features).map_err(|e| CliError::core(context("grid search"), e))?;
        let p = search.best;
        let test = evaluate_on_test(ds, method, &p, features).map_err(|e| CliError::core(context("test"), e))?;
        let seconds = start.elapsed().as_secs_f64();
        let recursive = !matches!(method, BatchMethod::Kernel);
        let lambda = matches!(method, BatchMethod::Stacking(s) if s != StackingConfig::Plain);
        table.rows.push(ResultRow {
            dataset: ds.name.clone(),
            model: name.clone(),
            nmse_db: test.nmse,
            validation_nmse_db: Some(search.validation_nmse),
            width: Some(p.width),
            mu: recursive.then_some(p.mu),
            taps: Some(if recursive { p.taps } else { 1 }),
            reg: Some(p.reg),
            embed_len: Some(p.embed_len),
            lambda: lambda.then_some(p.lambda),
            seconds,
            ..ResultRow::default()
        });
        predictions.models.push((name, test.predictions));
    }
    Ok(BatchRun { table, predictions })
}

pub struct OnlineRun {
    pub table: ResultTable,
    pub predictions: Predictions,
    pub reports: Vec<(String, OnlineReport)>,
}

/// Runs the configured online filters over the whole dataset as one stream.
pub fn run_online_models(cfg: &ExperimentConfig, ds: &SeriesDataset) -> Result<OnlineRun, CliError> {
    let o = &cfg.online;
    o.validate_models()?;
    let opts = o.options()?;
    let mut table = ResultTable::default();
    let mut predictions =
        Predictions { index: (0..ds.len()).collect(), target: ds.eval_targets().to_vec(), models: Vec::new() };
    let mut reports = Vec::new();
    for model in &o.models {
        let start = Instant::now();
        let context = format!("{} / {model}", ds.name);
        let (report, row) = if model == "klms" {
            let report = klms_baseline(ds, o.base()?, o.embed_len, o.eta, &opts);
            (report, ResultRow { taps: Some(1), ..ResultRow::default() })
        } else {
            let report = run_online(&o.kernel()?, ds, o.eta, o.nu, &opts);
            (report, ResultRow { taps: Some(o.taps), mu: Some(o.mu), nu: Some(o.nu), ..ResultRow::default() })
        };
        let report = report.map_err(|e| CliError::core(context, e))?;
        table.rows.push(ResultRow {
            dataset: ds.name.clone(),
            model: model.clone(),
            nmse_db: report.nmse,
            width: Some(o.width),
            embed_len: Some(o.embed_len),
            eta: Some(o.eta),
            seconds: start.elapsed().as_secs_f64(),
            ..row
        });
        predictions.models.push((model.clone(), report.predictions.clone()));
        reports.push((model.clone(), report));
    }
    Ok(OnlineRun { table, predictions, reports })
}

/// Writes `step,running_mse` for one model.
pub fn write_learning_curve(path: &Path, report: &OnlineReport) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["step", "running_mse"]).map_err(err)?;
    for (step, v) in report.learning_curve.iter().enumerate() {
        w.write_record([(step + 1).to_string(), v.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_config_echo(dir: &Path, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let path = dir.join("config_echo.toml");
    fs::write(&path, cfg.to_toml()).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
