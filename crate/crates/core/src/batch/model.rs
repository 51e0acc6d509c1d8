use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::krr::{krr_fit, krr_fit_with_loo};
use super::stacking::{fit_stacking, StackingConfig};
use crate::kernel::{composite_average, composite_of, kernel_block, kernel_stack_fast, KernelStack, RecursiveKernelConfig};
use crate::{Error, Result};

/// Which per-tap predictions the combiner weights are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StackingFeatures {
    /// In-sample predictions of the fitted tap regressors.
    #[default]
    InSample,
    /// Closed-form leave-one-out predictions of each tap regressor.
    LeaveOneOut,
}

/// One kernel ridge regressor per tap, linearly combined by stacking.
#[derive(Debug, Clone)]
pub struct StackedBatchModel {
    cfg: RecursiveKernelConfig,
    reg: f64,
    stacking: StackingConfig,
    betas: Vec<DVector<f64>>,
    alpha: DVector<f64>,
    features: DMatrix<f64>,
    train_outputs: DMatrix<f64>,
    train_inputs: Vec<f64>,
}

fn check_training(cfg: &RecursiveKernelConfig, inputs: &[f64], targets: &[f64]) -> Result<()> {
    cfg.validate()?;
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: inputs.len(), got: targets.len() });
    }
    if inputs.len() < cfg.taps + 1 {
        return Err(Error::TooShort { needed: cfg.taps + 1, got: inputs.len() });
    }
    Ok(())
}

pub fn train_batch(
    inputs: &[f64],
    targets: &[f64],
    cfg: &RecursiveKernelConfig,
    reg: f64,
    stacking: StackingConfig,
) -> Result<StackedBatchModel> {
    train_batch_with(inputs, targets, cfg, reg, stacking, StackingFeatures::InSample)
}

/// Builds the kernel stack of the training sequence, fits one regressor per
/// tap and learns the combiner weights on their predictions.
pub fn train_batch_with(
    inputs: &[f64],
    targets: &[f64],
    cfg: &RecursiveKernelConfig,
    reg: f64,
    stacking: StackingConfig,
    features: StackingFeatures,
) -> Result<StackedBatchModel> {
    check_training(cfg, inputs, targets)?;
    let stack = kernel_stack_fast(cfg, inputs)?;
    let n = inputs.len();
    let p = cfg.taps;
    let mut betas = Vec::with_capacity(p);
    let mut train_outputs = DMatrix::zeros(n, p);
    let mut design = DMatrix::zeros(n, p);
    for (i, k) in stack.taps().iter().enumerate() {
        let beta = match features {
            StackingFeatures::InSample => krr_fit(k, targets, reg)?,
            StackingFeatures::LeaveOneOut => {
                let fit = krr_fit_with_loo(k, targets, reg)?;
                design.set_column(i, &DVector::from_vec(fit.loo));
                fit.beta
            }
        };
        let out = k * &beta;
        if features == StackingFeatures::InSample {
            design.set_column(i, &out);
        }
        train_outputs.set_column(i, &out);
        betas.push(beta);
    }
    let alpha = fit_stacking(&design, targets, stacking)?;
    Ok(StackedBatchModel {
        cfg: *cfg,
        reg,
        stacking,
        betas,
        alpha,
        features: design,
        train_outputs,
        train_inputs: inputs.to_vec(),
    })
}

impl StackedBatchModel {
    pub fn config(&self) -> &RecursiveKernelConfig {
        &self.cfg
    }

    pub fn regularization(&self) -> f64 {
        self.reg
    }

    pub fn stacking(&self) -> StackingConfig {
        self.stacking
    }

    pub fn betas(&self) -> &[DVector<f64>] {
        &self.betas
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// The design matrix the combiner was fitted on (`N x P`).
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Combined in-sample outputs of the fitted model.
    pub fn in_sample_predictions(&self) -> Vec<f64> {
        (&self.train_outputs * &self.alpha).iter().copied().collect()
    }

    pub fn train_len(&self) -> usize {
        self.train_inputs.len()
    }

    /// Predictions at the times in `range` of a series whose first samples are
    /// the training inputs. Kernels at later times depend on every sample in
    /// between, so the recursion runs over the whole prefix `..range.end`.
    /// `range` equal to the training range returns the in-sample outputs.
    pub fn predict_series(&self, series: &[f64], range: Range<usize>) -> Result<Vec<f64>> {
        match classify_range(&self.train_inputs, series, &range)? {
            RangeKind::InSample => Ok(self.in_sample_predictions()),
            RangeKind::Ahead => {
                let block = kernel_block(&self.cfg, &series[..range.end], self.train_len())?;
                Ok(range
                    .map(|t| {
                        (0..self.cfg.taps)
                            .map(|i| self.alpha[i] * dot(block.column(i, t), self.betas[i].as_slice()))
                            .sum()
                    })
                    .collect())
            }
        }
    }
}

/// `sum_i alpha_i sum_m beta^i_m k^i(m, n)` from the per-tap kernel columns
/// between the training samples and the query time.
pub fn stacked_predict(model: &StackedBatchModel, columns: &[&[f64]]) -> Result<f64> {
    if columns.len() != model.betas.len() {
        return Err(Error::DimensionMismatch { expected: model.betas.len(), got: columns.len() });
    }
    let mut out = 0.0;
    for ((col, beta), a) in columns.iter().zip(&model.betas).zip(model.alpha.iter()) {
        if col.len() != beta.len() {
            return Err(Error::DimensionMismatch { expected: beta.len(), got: col.len() });
        }
        out += a * dot(col, beta.as_slice());
    }
    Ok(out)
}

/// Kernel ridge regression on the entrywise average of the first `taps`
/// kernels. With one tap this is plain kernel ridge regression with the base
/// kernel on embedded inputs.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    cfg: RecursiveKernelConfig,
    reg: f64,
    beta: DVector<f64>,
    train_outputs: Vec<f64>,
    train_inputs: Vec<f64>,
}

pub fn train_composite(
    inputs: &[f64],
    targets: &[f64],
    cfg: &RecursiveKernelConfig,
    reg: f64,
) -> Result<CompositeModel> {
    check_training(cfg, inputs, targets)?;
    let stack = kernel_stack_fast(cfg, inputs)?;
    let k = composite_average(&stack);
    let beta = krr_fit(&k, targets, reg)?;
    let train_outputs = (&k * &beta).iter().copied().collect();
    Ok(CompositeModel { cfg: *cfg, reg, beta, train_outputs, train_inputs: inputs.to_vec() })
}

impl CompositeModel {
    pub fn config(&self) -> &RecursiveKernelConfig {
        &self.cfg
    }

    pub fn regularization(&self) -> f64 {
        self.reg
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn in_sample_predictions(&self) -> Vec<f64> {
        self.train_outputs.clone()
    }

    pub fn predict_series(&self, series: &[f64], range: Range<usize>) -> Result<Vec<f64>> {
        match classify_range(&self.train_inputs, series, &range)? {
            RangeKind::InSample => Ok(self.in_sample_predictions()),
            RangeKind::Ahead => {
                let block = kernel_block(&self.cfg, &series[..range.end], self.train_inputs.len())?;
                let k = composite_block(&block);
                Ok(range.map(|t| k.column(t).dot(&self.beta)).collect())
            }
        }
    }
}

fn composite_block(block: &KernelStack) -> DMatrix<f64> {
    composite_of(block.taps())
}

enum RangeKind {
    InSample,
    Ahead,
}

fn classify_range(train: &[f64], series: &[f64], range: &Range<usize>) -> Result<RangeKind> {
    let n = train.len();
    let invalid = |reason| Error::InvalidRange { start: range.start, end: range.end, reason };
    if series.len() < n || series[..n] != *train {
        return Err(invalid("series does not start with the training inputs"));
    }
    if *range == (0..n) {
        return Ok(RangeKind::InSample);
    }
    if range.start < n {
        return Err(invalid("overlaps the training range"));
    }
    if range.start >= range.end || range.end > series.len() {
        return Err(invalid("empty or beyond the end of the series"));
    }
    Ok(RangeKind::Ahead)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BaseKernel;
    use alloc::vec;

    fn series(n: usize) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..n).map(|t| libm::sin(0.3 * t as f64) + 0.2 * libm::cos(1.7 * t as f64)).collect();
        let y: Vec<f64> = (0..n).map(|t| x[t] * x[t] - if t > 0 { 0.5 * x[t - 1] } else { 0.0 }).collect();
        (x, y)
    }

    fn cfg(taps: usize) -> RecursiveKernelConfig {
        RecursiveKernelConfig::new(BaseKernel::rbf(0.8).unwrap(), taps, 0.6, 1).unwrap()
    }

    #[test]
    fn residual_certificates_hold() {
        let (x, y) = series(60);
        let model = train_batch(&x, &y, &cfg(3), 1e-2, StackingConfig::Plain).unwrap();
        let stack = kernel_stack_fast(&cfg(3), &x).unwrap();
        let yv = DVector::from_vec(y.clone());
        for (k, beta) in stack.taps().iter().zip(model.betas()) {
            let mut a = k.clone();
            for i in 0..60 {
                a[(i, i)] += 1e-2;
            }
            assert!((a * beta - &yv).norm() / yv.norm() < 1e-8);
        }
        let f = model.features();
        let grad = f.tr_mul(&(&yv - f * model.alpha()));
        assert!(grad.norm() < 1e-8 * f.tr_mul(&yv).norm());
    }

    #[test]
    fn in_sample_range_matches_features_times_alpha() {
        let (x, y) = series(40);
        let model = train_batch(&x, &y, &cfg(3), 1e-2, StackingConfig::Plain).unwrap();
        let fa = model.features() * model.alpha();
        let pred = model.predict_series(&x, 0..40).unwrap();
        assert_eq!(pred, fa.as_slice());
    }

    #[test]
    fn future_predictions_use_stacked_columns() {
        let (x, y) = series(50);
        let model = train_batch(&x[..30], &y[..30], &cfg(2), 1e-2, StackingConfig::Ridge { lambda: 0.1 }).unwrap();
        let pred = model.predict_series(&x, 30..50).unwrap();
        let full = kernel_stack_fast(&cfg(2), &x).unwrap();
        for (j, t) in (30..50).enumerate() {
            let cols: Vec<Vec<f64>> = (0..2).map(|i| full.column(i, t)[..30].to_vec()).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            assert!((stacked_predict(&model, &refs).unwrap() - pred[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn stacked_predict_degenerate_cases() {
        let (x, y) = series(20);
        let model = train_batch(&x, &y, &cfg(1), 1e-3, StackingConfig::Plain).unwrap();
        let col = vec![0.0; 20];
        assert_eq!(stacked_predict(&model, &[&col]).unwrap(), 0.0);
        assert!(stacked_predict(&model, &[&col, &col]).is_err());
        assert!(stacked_predict(&model, &[&col[..5]]).is_err());
    }

    #[test]
    fn range_errors() {
        let (x, y) = series(40);
        let model = train_composite(&x[..20], &y[..20], &cfg(2), 1e-2).unwrap();
        assert!(model.predict_series(&x, 10..30).is_err());
        assert!(model.predict_series(&x, 30..50).is_err());
        let mut other = x.clone();
        other[3] += 1.0;
        assert!(model.predict_series(&other, 20..30).is_err());
        assert_eq!(model.predict_series(&x, 20..30).unwrap().len(), 10);
    }

    #[test]
    fn too_short_training_sequence() {
        let (x, y) = series(3);
        assert!(matches!(
            train_batch(&x, &y, &cfg(3), 1e-2, StackingConfig::Plain),
            Err(Error::TooShort { needed: 4, got: 3 })
        ));
    }
}
