use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::krr::{krr_fit, krr_fit_with_loo};
use super::model::{train_batch_with, train_composite, StackingFeatures};
use super::stacking::{fit_stacking, StackingConfig};
use crate::datasets::{nmse, SeriesDataset};
use crate::kernel::{composite_of, kernel_block, BaseKernel, RecursiveKernelConfig};
use crate::{Error, Result};

/// Model family evaluated by the grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchMethod {
    /// Kernel ridge regression with the base RBF kernel on embedded inputs.
    Kernel,
    /// Kernel ridge regression on the average of the tap kernels.
    CompositeAverage,
    /// Per-tap regressors combined by stacking; the penalty strength comes from the grid.
    Stacking(StackingConfig),
}

impl BatchMethod {
    fn uses_taps(&self) -> bool {
        !matches!(self, BatchMethod::Kernel)
    }

    fn uses_lambda(&self) -> bool {
        matches!(self, BatchMethod::Stacking(StackingConfig::Ridge { .. } | StackingConfig::Sparse { .. }))
    }
}

/// Axes of the exhaustive search. All kernels are RBF; `widths` are its widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub widths: Vec<f64>,
    pub mus: Vec<f64>,
    pub taps: Vec<usize>,
    pub regs: Vec<f64>,
    pub embed_lens: Vec<usize>,
    pub lambdas: Vec<f64>,
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (libm::log10(lo), libm::log10(hi));
    (0..n).map(|i| libm::pow(10.0, a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            widths: log_space(0.1, 10.0, 7),
            mus: vec![0.3, 0.5, 0.7, 0.9, 1.0],
            taps: (2..=8).collect(),
            regs: log_space(1e-6, 1e-1, 6),
            embed_lens: vec![1, 4, 8],
            lambdas: vec![1e-2, 1e-1, 1.0, 10.0],
        }
    }
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub width: f64,
    pub mu: f64,
    pub taps: usize,
    pub reg: f64,
    pub embed_len: usize,
    pub lambda: f64,
}

impl GridPoint {
    pub fn kernel_config(&self) -> Result<RecursiveKernelConfig> {
        RecursiveKernelConfig::new(BaseKernel::rbf(self.width)?, self.taps, self.mu, self.embed_len)
    }

    /// Deterministic preference among equally scored points.
    fn tie_order(&self, other: &GridPoint) -> Ordering {
        self.taps
            .cmp(&other.taps)
            .then(self.embed_len.cmp(&other.embed_len))
            .then(self.reg.total_cmp(&other.reg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridResult {
    pub best: GridPoint,
    pub validation_nmse: f64,
    pub evaluated: usize,
    /// Points skipped because a solver rejected them.
    pub failed: usize,
}

struct Search {
    best: Option<(GridPoint, f64)>,
    evaluated: usize,
    failed: usize,
}

impl Search {
    fn offer(&mut self, point: GridPoint, score: Result<f64>) {
        self.evaluated += 1;
        let score = match score {
            Ok(s) if s.is_finite() => s,
            _ => {
                self.failed += 1;
                return;
            }
        };
        let better = match &self.best {
            None => true,
            Some((b, s)) => score < *s || (score == *s && point.tie_order(b) == Ordering::Less),
        };
        if better {
            self.best = Some((point, score));
        }
    }
}

/// Exhaustive search over `grid`, fitting on the training split and scoring
/// the validation split by normalized MSE. Ties go to fewer taps, then
/// shorter embeddings, then smaller regularization.
pub fn grid_search(
    ds: &SeriesDataset,
    method: BatchMethod,
    grid: &Grid,
    features: StackingFeatures,
) -> Result<GridResult> {
    ds.validate()?;
    let val = ds.val_range();
    if val.is_empty() {
        return Err(Error::InvalidRange { start: val.start, end: val.end, reason: "no validation split" });
    }
    let mus: &[f64] = if method.uses_taps() { &grid.mus } else { &[1.0] };
    let taps: &[usize] = if method.uses_taps() { &grid.taps } else { &[1] };
    let lambdas: &[f64] = if method.uses_lambda() { &grid.lambdas } else { &[0.0] };
    if [grid.widths.len(), mus.len(), taps.len(), grid.regs.len(), grid.embed_lens.len(), lambdas.len()].contains(&0) {
        return Err(Error::EmptyGrid);
    }
    let max_taps = *taps.iter().max().unwrap();
    let n = ds.train_end;
    let inputs = &ds.inputs[..ds.val_end];
    let y_train = &ds.targets[..n];
    let y_val = &ds.eval_targets()[val.clone()];
    let mut search = Search { best: None, evaluated: 0, failed: 0 };

    for &embed_len in &grid.embed_lens {
        for &width in &grid.widths {
            for &mu in mus {
                let point = GridPoint { width, mu, taps: 0, reg: 0.0, embed_len, lambda: 0.0 };
                let cfg = match point.with_taps(max_taps).kernel_config() {
                    Ok(c) => c,
                    Err(e) => {
                        for _ in 0..taps.len() * grid.regs.len() * lambdas.len() {
                            search.offer(point, Err(e.clone()));
                        }
                        continue;
                    }
                };
                let block = kernel_block(&cfg, inputs, n)?;
                let split = |k: &DMatrix<f64>| (k.columns(0, n).into_owned(), k.columns(n, val.len()).into_owned());
                match method {
                    BatchMethod::Kernel | BatchMethod::CompositeAverage => {
                        for &p in taps {
                            let (k_train, k_val) = split(&composite_of(&block.taps()[..p]));
                            for &reg in &grid.regs {
                                let score = krr_fit(&k_train, y_train, reg)
                                    .and_then(|beta| nmse((k_val.tr_mul(&beta)).as_slice(), y_val));
                                search.offer(GridPoint { taps: p, reg, ..point }, score);
                            }
                        }
                    }
                    BatchMethod::Stacking(stacking) => {
                        for &reg in &grid.regs {
                            let fitted = tap_predictions(&block.taps()[..max_taps], n, val.len(), y_train, reg, features);
                            for &p in taps {
                                for &lambda in lambdas {
                                    let gp = GridPoint { taps: p, reg, lambda, ..point };
                                    let score = match &fitted {
                                        Ok((f_train, f_val)) => {
                                            let cfg = stacking.with_lambda(lambda);
                                            fit_stacking(&f_train.columns(0, p).into_owned(), y_train, cfg).and_then(
                                                |alpha| nmse((f_val.columns(0, p) * alpha).as_slice(), y_val),
                                            )
                                        }
                                        Err(e) => Err(e.clone()),
                                    };
                                    search.offer(gp, score);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let evaluated = search.evaluated;
    let failed = search.failed;
    let (best, validation_nmse) = search.best.ok_or(Error::NoFeasibleConfiguration)?;
    Ok(GridResult { best, validation_nmse, evaluated, failed })
}

/// Per-tap training-set features and validation predictions for one regularizer.
fn tap_predictions(
    taps: &[DMatrix<f64>],
    n: usize,
    n_val: usize,
    y: &[f64],
    reg: f64,
    features: StackingFeatures,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut f_train = DMatrix::zeros(n, taps.len());
    let mut f_val = DMatrix::zeros(n_val, taps.len());
    for (i, k) in taps.iter().enumerate() {
        let k_train = k.columns(0, n).into_owned();
        let beta = match features {
            StackingFeatures::InSample => {
                let beta = krr_fit(&k_train, y, reg)?;
                f_train.set_column(i, &(&k_train * &beta));
                beta
            }
            StackingFeatures::LeaveOneOut => {
                let fit = krr_fit_with_loo(&k_train, y, reg)?;
                f_train.set_column(i, &DVector::from_vec(fit.loo));
                fit.beta
            }
        };
        f_val.set_column(i, &k.columns(n, n_val).tr_mul(&beta));
    }
    Ok((f_train, f_val))
}

impl GridPoint {
    fn with_taps(self, taps: usize) -> Self {
        GridPoint { taps, ..self }
    }
}

/// Test-split result of a model refitted at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub nmse: f64,
    pub range: Range<usize>,
    pub predictions: Vec<f64>,
}

/// Fits `method` at `point` on the training split and scores the test split.
pub fn evaluate_on_test(
    ds: &SeriesDataset,
    method: BatchMethod,
    point: &GridPoint,
    features: StackingFeatures,
) -> Result<TestOutcome> {
    ds.validate()?;
    let range = ds.test_range();
    if range.len() < 2 {
        return Err(Error::InvalidRange { start: range.start, end: range.end, reason: "test split too short" });
    }
    let train = ds.train_range();
    let x = &ds.inputs[train.clone()];
    let y = &ds.targets[train];
    let predictions = match method {
        BatchMethod::Kernel => {
            let cfg = point.with_taps(1).kernel_config()?;
            train_composite(x, y, &cfg, point.reg)?.predict_series(&ds.inputs, range.clone())?
        }
        BatchMethod::CompositeAverage => {
            let cfg = point.kernel_config()?;
            train_composite(x, y, &cfg, point.reg)?.predict_series(&ds.inputs, range.clone())?
        }
        BatchMethod::Stacking(stacking) => {
            let cfg = point.kernel_config()?;
            train_batch_with(x, y, &cfg, point.reg, stacking.with_lambda(point.lambda), features)?
                .predict_series(&ds.inputs, range.clone())?
        }
    };
    let nmse = nmse(&predictions, &ds.eval_targets()[range.clone()])?;
    Ok(TestOutcome { nmse, range, predictions })
}
