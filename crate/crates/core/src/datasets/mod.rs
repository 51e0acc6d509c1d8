//! Benchmark series, train/validation/test splits and the normalized MSE.

mod generators;
mod metrics;

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

pub use generators::{
    channel_output, generate, mackey_glass_series, narendra_nonlinearity, wiener_input, wiener_output,
    ChannelParams, GeneratorSpec, MackeyGlassParams, NarendraParams, Task, WienerParams, WIENER_FILTER,
};
pub use metrics::{mse, nmse, NMSE_FLOOR_DB};

/// Number of samples in each consecutive split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const fn new(train: usize, validation: usize, test: usize) -> Self {
        SplitSizes { train, validation, test }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

impl Default for SplitSizes {
    /// 200 training samples, then equally sized validation and test segments of 1000.
    fn default() -> Self {
        SplitSizes::new(200, 1000, 1000)
    }
}

/// An input series with aligned targets and consecutive split boundaries.
///
/// `targets` are what learners train on. When training targets carry
/// synthetic noise, `clean_targets` holds the noiseless values that every
/// evaluation is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDataset {
    pub name: String,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub clean_targets: Option<Vec<f64>>,
    pub train_end: usize,
    pub val_end: usize,
    /// Prediction horizon `h` for `y_n = x_{n+h}` tasks; 0 for input/output tasks.
    pub horizon: usize,
}

impl SeriesDataset {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        split: SplitSizes,
        horizon: usize,
    ) -> Result<Self> {
        let ds = SeriesDataset {
            name: name.into(),
            inputs,
            targets,
            clean_targets: None,
            train_end: split.train,
            val_end: split.train + split.validation,
            horizon,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// `h`-step-ahead prediction of a single series: inputs are `x_n`, targets `x_{n+h}`.
    pub fn ahead(name: impl Into<String>, series: &[f64], horizon: usize, split: SplitSizes) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter { name: "horizon", reason: "must be at least 1" });
        }
        if series.len() < horizon + 2 {
            return Err(Error::Empty("series shorter than horizon + 2"));
        }
        let n = series.len() - horizon;
        SeriesDataset::new(name, series[..n].to_vec(), series[horizon..].to_vec(), split, horizon)
    }

    pub fn with_clean_targets(mut self, clean: Vec<f64>) -> Result<Self> {
        self.clean_targets = Some(clean);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.inputs.len();
        if n == 0 {
            return Err(Error::Empty("dataset"));
        }
        if self.targets.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.targets.len() });
        }
        if let Some(clean) = &self.clean_targets {
            if clean.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: clean.len() });
            }
        }
        if self.train_end == 0 || self.train_end > self.val_end || self.val_end > n {
            return Err(Error::InvalidRange {
                start: self.train_end,
                end: self.val_end,
                reason: "split boundaries must satisfy 0 < train <= validation <= length",
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Targets used for scoring.
    pub fn eval_targets(&self) -> &[f64] {
        self.clean_targets.as_deref().unwrap_or(&self.targets)
    }

    pub fn train_range(&self) -> Range<usize> {
        0..self.train_end
    }

    pub fn val_range(&self) -> Range<usize> {
        self.train_end..self.val_end
    }

    pub fn test_range(&self) -> Range<usize> {
        self.val_end..self.len()
    }

    pub fn splits(&self) -> SplitSizes {
        SplitSizes::new(self.train_end, self.val_end - self.train_end, self.len() - self.val_end)
    }
}
