use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Scalar kernel applied to (embedded) input points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseKernel {
    /// `exp(-|x - y|^2 / (2 width^2))`.
    Rbf { width: f64 },
    /// `<x, y>`.
    Linear,
    /// `(<x, y> + offset)^degree`.
    Polynomial { degree: u32, offset: f64 },
}

impl BaseKernel {
    pub fn rbf(width: f64) -> Result<Self> {
        let k = BaseKernel::Rbf { width };
        k.validate()?;
        Ok(k)
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        let k = BaseKernel::Polynomial { degree, offset };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BaseKernel::Rbf { width } if !(width > 0.0 && width.is_finite()) => {
                Err(Error::InvalidParameter { name: "width", reason: "must be positive and finite" })
            }
            BaseKernel::Polynomial { degree: 0, .. } => {
                Err(Error::InvalidParameter { name: "degree", reason: "must be at least 1" })
            }
            BaseKernel::Polynomial { offset, .. } if !offset.is_finite() => {
                Err(Error::InvalidParameter { name: "offset", reason: "must be finite" })
            }
            _ => Ok(()),
        }
    }

    /// Evaluates the kernel, checking that both points have the same dimension.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            BaseKernel::Rbf { width } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                libm::exp(-d2 / (2.0 * width * width))
            }
            BaseKernel::Linear => dot(x, y),
            BaseKernel::Polynomial { degree, offset } => {
                let base = dot(x, y) + offset;
                libm::pow(base, degree as f64)
            }
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Time-delay embedding `[x_n, x_{n-1}, ..., x_{n-len+1}]` of the sample at
/// zero-based position `index`. Positions before the start of the series are
/// zero. A length of 0 means the raw scalar sample.
pub fn embed(series: &[f64], len: usize, index: usize) -> Vec<f64> {
    let len = len.max(1);
    (0..len)
        .map(|lag| index.checked_sub(lag).and_then(|t| series.get(t)).copied().unwrap_or(0.0))
        .collect()
}

/// A time-ordered sequence of equally sized input points, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    /// Embeds every sample of `series`.
    pub fn embedded(series: &[f64], len: usize) -> Self {
        let dim = len.max(1);
        let mut data = Vec::with_capacity(series.len() * dim);
        for n in 0..series.len() {
            data.extend(embed(series, dim, n));
        }
        Points { dim, data }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: data.len() });
        }
        Ok(Points { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }
}

/// Sliding window that produces time-delay embeddings one sample at a time,
/// matching [`embed`] on the full series.
#[derive(Debug, Clone)]
pub struct DelayLine {
    window: Vec<f64>,
}

impl DelayLine {
    pub fn new(len: usize) -> Self {
        DelayLine { window: vec![0.0; len.max(1)] }
    }

    /// Shifts in a new sample and returns the current embedding, newest first.
    pub fn push(&mut self, sample: f64) -> &[f64] {
        self.window.rotate_right(1);
        self.window[0] = sample;
        &self.window
    }
}
