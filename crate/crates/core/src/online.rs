//! Online multikernel filtering: one kernel LMS filter per recursive-kernel
//! tap, combined by weights that follow an instantaneous gradient descent on
//! the squared combination error.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::datasets::{nmse, SeriesDataset};
use crate::kernel::{BaseKernel, DelayLine, RecursiveKernelConfig, StreamKernelState};
use crate::{Error, Result};

const MAX_SQUARED_ERROR: f64 = 1e12;
const MAX_ALPHA_NORM: f64 = 1e6;

/// Which tap outputs drive the combiner update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CombinerInput {
    /// Tap outputs after this step's filter update, `f^i_n(x_n)`.
    #[default]
    PostUpdate,
    /// Tap outputs before the update, `f^i_{n-1}(x_n)`.
    PreUpdate,
}

/// A bank of KLMS filters over the recursive kernel taps plus a linear combiner.
#[derive(Debug, Clone)]
pub struct OnlineFilter {
    stream: StreamKernelState,
    delay: DelayLine,
    coeffs: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    eta: f64,
    nu: f64,
    combiner_input: CombinerInput,
    steps: usize,
}

/// Outputs of one [`OnlineFilter::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// `sum_i alpha^i_{n-1} f^i_{n-1}(x_n)`: the forecast made before `y_n` is seen.
    pub prediction: f64,
    /// `sum_i alpha^i_{n-1} f^i(x_n)` with the tap outputs selected by
    /// [`CombinerInput`]; the quantity whose error drives the combiner update.
    pub combiner_output: f64,
    pub tap_prior: Vec<f64>,
    pub tap_posterior: Vec<f64>,
}

impl OnlineFilter {
    /// Empty filters with uniform combiner weights `1/P`.
    pub fn new(cfg: RecursiveKernelConfig, eta: f64, nu: f64) -> Result<Self> {
        cfg.validate()?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter { name: "eta", reason: "must be positive" });
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter { name: "nu", reason: "must be nonnegative" });
        }
        Ok(OnlineFilter {
            stream: StreamKernelState::new(cfg)?,
            delay: DelayLine::new(cfg.embed_len),
            coeffs: vec![Vec::new(); cfg.taps],
            alpha: vec![1.0 / cfg.taps as f64; cfg.taps],
            eta,
            nu,
            combiner_input: CombinerInput::PostUpdate,
            steps: 0,
        })
    }

    pub fn with_alpha(mut self, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch { expected: self.alpha.len(), got: alpha.len() });
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_combiner_input(mut self, input: CombinerInput) -> Self {
        self.combiner_input = input;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.stream = self.stream.with_budget(budget);
        self
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn coefficients(&self, tap: usize) -> &[f64] {
        &self.coeffs[tap]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Processes one input/target pair.
    pub fn step(&mut self, x: f64, y: f64) -> Result<StepOutput> {
        let point = self.delay.push(x).to_vec();
        let cols = self.stream.push(&point)?;
        let taps = self.alpha.len();
        let mut prior = vec![0.0; taps];
        let mut posterior = vec![0.0; taps];
        for i in 0..taps {
            let col = cols.tap(i);
            let a = &mut self.coeffs[i];
            let f_prev: f64 = a.iter().zip(col).map(|(c, k)| c * k).sum();
            let coeff = self.eta * (y - f_prev);
            a.push(coeff);
            prior[i] = f_prev;
            posterior[i] = f_prev + coeff * col[col.len() - 1];
        }
        let prediction: f64 = self.alpha.iter().zip(&prior).map(|(a, f)| a * f).sum();
        let drive = match self.combiner_input {
            CombinerInput::PostUpdate => &posterior,
            CombinerInput::PreUpdate => &prior,
        };
        let combiner_output: f64 = self.alpha.iter().zip(drive).map(|(a, f)| a * f).sum();
        let err = y - combiner_output;
        for (a, f) in self.alpha.iter_mut().zip(drive) {
            *a += self.nu * err * f;
        }
        self.steps += 1;
        let step = self.steps;
        let sq = (y - prediction) * (y - prediction);
        if !(sq <= MAX_SQUARED_ERROR) || !(err * err <= MAX_SQUARED_ERROR) {
            return Err(Error::Diverged { step, reason: "squared error exceeded 1e12" });
        }
        let norm = libm::sqrt(self.alpha.iter().map(|a| a * a).sum());
        if !(norm <= MAX_ALPHA_NORM) {
            return Err(Error::Diverged { step, reason: "combiner weights exceeded norm 1e6" });
        }
        Ok(StepOutput { prediction, combiner_output, tap_prior: prior, tap_posterior: posterior })
    }
}

/// Evaluation settings for [`run_online`] and [`klms_baseline`].
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineOptions {
    /// Trailing fraction of the stream scored as the converged regime.
    pub eval_fraction: f64,
    /// Window of the running MSE learning curve.
    pub smoothing: usize,
    pub alpha_init: Option<Vec<f64>>,
    pub combiner_input: CombinerInput,
    pub budget: Option<usize>,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        OnlineOptions {
            eval_fraction: 0.2,
            smoothing: 50,
            alpha_init: None,
            combiner_input: CombinerInput::PostUpdate,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineReport {
    pub predictions: Vec<f64>,
    pub squared_errors: Vec<f64>,
    /// Normalized MSE over `eval_range`, in dB.
    pub nmse: f64,
    pub eval_range: Range<usize>,
    /// Running MSE over the trailing `smoothing` samples at every step.
    pub learning_curve: Vec<f64>,
}

impl OnlineReport {
    /// Scores a prequential prediction sequence against `targets`.
    pub fn from_predictions(predictions: Vec<f64>, targets: &[f64], opts: &OnlineOptions) -> Result<Self> {
        if predictions.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: targets.len(), got: predictions.len() });
        }
        let n = targets.len();
        if !(opts.eval_fraction > 0.0 && opts.eval_fraction <= 1.0) {
            return Err(Error::InvalidParameter { name: "eval_fraction", reason: "must lie in (0, 1]" });
        }
        let eval_len = (libm::round(n as f64 * opts.eval_fraction) as usize).clamp(2.min(n), n);
        let eval_range = n - eval_len..n;
        let squared_errors: Vec<f64> = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).collect();
        let nmse = nmse(&predictions[eval_range.clone()], &targets[eval_range.clone()])?;
        let learning_curve = running_mean(&squared_errors, opts.smoothing.max(1));
        Ok(OnlineReport { predictions, squared_errors, nmse, eval_range, learning_curve })
    }

    /// Mean squared error over the evaluation window.
    pub fn final_mse(&self) -> f64 {
        let w = &self.squared_errors[self.eval_range.clone()];
        w.iter().sum::<f64>() / w.len() as f64
    }

    /// First step whose smoothed error falls below `factor` times the final MSE.
    pub fn steps_to_reach(&self, factor: f64) -> Option<usize> {
        let level = factor * self.final_mse();
        self.learning_curve.iter().position(|&v| v < level)
    }
}

fn running_mean(values: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (n, v) in values.iter().enumerate() {
        sum += v;
        if n >= window {
            sum -= values[n - window];
        }
        out.push(sum / (n + 1).min(window) as f64);
    }
    out
}

/// Runs the multikernel filter over the whole dataset, training on
/// `ds.targets` and scoring a-priori predictions against `ds.eval_targets()`.
pub fn run_online(
    cfg: &RecursiveKernelConfig,
    ds: &SeriesDataset,
    eta: f64,
    nu: f64,
    opts: &OnlineOptions,
) -> Result<OnlineReport> {
    ds.validate()?;
    let mut filter = OnlineFilter::new(*cfg, eta, nu)?.with_combiner_input(opts.combiner_input);
    if let Some(alpha) = &opts.alpha_init {
        filter = filter.with_alpha(alpha.clone())?;
    }
    if let Some(b) = opts.budget {
        filter = filter.with_budget(b);
    }
    let mut predictions = Vec::with_capacity(ds.len());
    for (&x, &y) in ds.inputs.iter().zip(&ds.targets) {
        predictions.push(filter.step(x, y)?.prediction);
    }
    OnlineReport::from_predictions(predictions, ds.eval_targets(), opts)
}

/// Classical KLMS with one kernel on time-delay embedded inputs.
pub fn klms_baseline(
    ds: &SeriesDataset,
    base: BaseKernel,
    embed_len: usize,
    eta: f64,
    opts: &OnlineOptions,
) -> Result<OnlineReport> {
    ds.validate()?;
    base.validate()?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter { name: "eta", reason: "must be positive" });
    }
    let mut delay = DelayLine::new(embed_len);
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();
    let mut predictions = Vec::with_capacity(ds.len());
    for (n, (&x, &y)) in ds.inputs.iter().zip(&ds.targets).enumerate() {
        if opts.budget.is_some_and(|b| centers.len() >= b) {
            return Err(Error::Capacity(centers.len()));
        }
        let u = delay.push(x).to_vec();
        let f: f64 = centers.iter().zip(&coeffs).map(|(c, a)| a * base.eval_unchecked(c, &u)).sum();
        let e = y - f;
        if !(e * e <= MAX_SQUARED_ERROR) {
            return Err(Error::Diverged { step: n + 1, reason: "squared error exceeded 1e12" });
        }
        predictions.push(f);
        centers.push(u);
        coeffs.push(eta * e);
    }
    OnlineReport::from_predictions(predictions, ds.eval_targets(), opts)
}
