use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::base::{BaseKernel, Points};
use crate::{Error, Result};

/// Hyperparameters of the recursive gamma-kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursiveKernelConfig {
    pub base: BaseKernel,
    /// Number of filter taps (memory depth), at least 1.
    pub taps: usize,
    /// Leak parameter in `(0, 1]`; `mu = 1` turns the taps into a pure delay line.
    pub mu: f64,
    /// Time-delay embedding length fed to the base kernel; 0 means the raw sample.
    pub embed_len: usize,
}

impl RecursiveKernelConfig {
    pub fn new(base: BaseKernel, taps: usize, mu: f64, embed_len: usize) -> Result<Self> {
        let cfg = RecursiveKernelConfig { base, taps, mu, embed_len };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.taps == 0 {
            return Err(Error::InvalidParameter { name: "taps", reason: "must be at least 1" });
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidParameter { name: "mu", reason: "must lie in (0, 1]" });
        }
        Ok(())
    }

    pub fn with_taps(self, taps: usize) -> Self {
        RecursiveKernelConfig { taps, ..self }
    }
}

/// How the within-column memory sum of the recursion is evaluated.
///
/// Both modes compute the convolution of the previous tap's column with the
/// geometric weights `mu^2 (1-mu)^(j-1)`, `j >= 2`. `Recursive` exploits the
/// geometric weights to evaluate it as a first-order recursion in O(N) per
/// column; `Direct` sums the convolution explicitly in O(N^2) per column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMode {
    #[default]
    Recursive,
    Direct,
}

/// Kernel values `k^i(m, n)` of every tap over one time-ordered sequence.
///
/// Taps are indexed from 0 (tap 0 is the base kernel). Each tap is stored as a
/// `rows x cols` matrix holding rows `0..rows` of the full `cols x cols` kernel
/// matrix; a square stack holds the complete matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelStack {
    taps: Vec<DMatrix<f64>>,
}

impl KernelStack {
    pub fn from_taps(taps: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = taps.first().ok_or(Error::Empty("kernel stack has no taps"))?;
        let shape = first.shape();
        if let Some(bad) = taps.iter().find(|t| t.shape() != shape) {
            return Err(Error::DimensionMismatch { expected: shape.0 * shape.1, got: bad.len() });
        }
        Ok(KernelStack { taps })
    }

    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn rows(&self) -> usize {
        self.taps[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.taps[0].ncols()
    }

    pub fn taps(&self) -> &[DMatrix<f64>] {
        &self.taps
    }

    pub fn tap(&self, i: usize) -> &DMatrix<f64> {
        &self.taps[i]
    }

    pub fn get(&self, tap: usize, m: usize, n: usize) -> f64 {
        self.taps[tap][(m, n)]
    }

    /// Column `n` of tap `i`: the values `k^i(m, n)` for all stored rows `m`.
    pub fn column(&self, tap: usize, n: usize) -> &[f64] {
        let rows = self.rows();
        &self.taps[tap].as_slice()[n * rows..(n + 1) * rows]
    }

    /// Keeps only the first `taps` taps.
    pub fn truncated(mut self, taps: usize) -> Self {
        self.taps.truncate(taps.max(1));
        self
    }
}

/// Base-kernel Gram matrix of the embedded series.
pub fn base_gram(base: &BaseKernel, points: &Points) -> DMatrix<f64> {
    let n = points.len();
    let mut data = vec![0.0; n * n];
    fill_base_block(base, points, n, &mut data);
    DMatrix::from_vec(n, n, data)
}

fn fill_base_block(base: &BaseKernel, points: &Points, rows: usize, data: &mut [f64]) {
    let cols = points.len();
    for b in 0..cols {
        for a in 0..rows {
            data[b * rows + a] = base.eval_unchecked(points.point(a), points.point(b));
        }
    }
}

fn check_series(cfg: &RecursiveKernelConfig, series: &[f64]) -> Result<Points> {
    cfg.validate()?;
    if series.is_empty() {
        return Err(Error::Empty("series"));
    }
    Ok(Points::embedded(series, cfg.embed_len))
}

/// Reference evaluator: applies the four-term recursion entry by entry, with
/// both memory sums written out explicitly. O(P N^3).
///
/// States before the first sample are zero, so `k^i(0, n) = k^i(m, 0) = 0`
/// for every tap `i >= 1`.
pub fn kernel_stack_naive(cfg: &RecursiveKernelConfig, series: &[f64]) -> Result<KernelStack> {
    let points = check_series(cfg, series)?;
    let n = points.len();
    let mu = cfg.mu;
    let leak = 1.0 - mu;
    let mu2 = mu * mu;
    // rev_pow[n - j] = (1 - mu)^(j - 1) for j >= 1, so the weights of a memory
    // sum over lags 2..=len line up with a contiguous slice of values.
    let mut rev_pow = vec![0.0; n + 1];
    let mut w = 1.0;
    for j in 1..=n {
        rev_pow[n - j] = w;
        w *= leak;
    }

    let mut taps: Vec<Vec<f64>> = Vec::with_capacity(cfg.taps);
    let mut base = vec![0.0; n * n];
    fill_base_block(&cfg.base, &points, n, &mut base);
    taps.push(base);

    for _ in 1..cfg.taps {
        let prev = taps.last().unwrap();
        let mut cur = vec![0.0; n * n];
        for b in 1..n {
            for a in b..n {
                let mut v = leak * leak * cur[(b - 1) * n + a - 1] + mu2 * prev[(b - 1) * n + a - 1];
                // sum_{j=2..=a} (1-mu)^(j-1) k(a-j, b-1)
                let third = dot(&prev[(b - 1) * n..(b - 1) * n + a - 1], &rev_pow[n - a..n - 1]);
                // sum_{j=2..=b} (1-mu)^(j-1) k(a-1, b-j), read through symmetry
                // as k(b-j, a-1) so the values are contiguous.
                let fourth = dot(&prev[(a - 1) * n..(a - 1) * n + b - 1], &rev_pow[n - b..n - 1]);
                v += mu2 * third + mu2 * fourth;
                cur[b * n + a] = v;
                cur[a * n + b] = v;
            }
        }
        taps.push(cur);
    }

    Ok(KernelStack {
        taps: taps.into_iter().map(|t| DMatrix::from_vec(n, n, t)).collect(),
    })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        for k in 0..4 {
            acc[k] += a[k] * b[k];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Incremental evaluator producing the same matrices as
/// [`kernel_stack_naive`] column by column in O(P N^2).
pub fn kernel_stack_fast(cfg: &RecursiveKernelConfig, series: &[f64]) -> Result<KernelStack> {
    kernel_stack_fast_with(cfg, series, ConvolutionMode::Recursive)
}

pub fn kernel_stack_fast_with(
    cfg: &RecursiveKernelConfig,
    series: &[f64],
    mode: ConvolutionMode,
) -> Result<KernelStack> {
    let mut stack = kernel_block_with(cfg, series, series.len(), mode)?;
    for t in stack.taps.iter_mut().skip(1) {
        mirror_lower(t);
    }
    Ok(stack)
}

fn mirror_lower(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for b in 0..n {
        for a in b + 1..n {
            m[(b, a)] = m[(a, b)];
        }
    }
}

/// Rows `0..rows` of every tap's kernel matrix over the whole series.
///
/// The recursion for row `m` only reads rows below `m`, so restricting the
/// rows to a training prefix gives exact kernel values between the training
/// samples and every later time at O(P rows N) cost.
pub fn kernel_block(cfg: &RecursiveKernelConfig, series: &[f64], rows: usize) -> Result<KernelStack> {
    kernel_block_with(cfg, series, rows, ConvolutionMode::Recursive)
}

pub fn kernel_block_with(
    cfg: &RecursiveKernelConfig,
    series: &[f64],
    rows: usize,
    mode: ConvolutionMode,
) -> Result<KernelStack> {
    let points = check_series(cfg, series)?;
    let cols = points.len();
    if rows == 0 || rows > cols {
        return Err(Error::InvalidParameter { name: "rows", reason: "must lie in 1..=series length" });
    }
    let mu = cfg.mu;
    let leak = 1.0 - mu;
    let mu2 = mu * mu;
    let weights: Vec<f64> = match mode {
        ConvolutionMode::Recursive => Vec::new(),
        ConvolutionMode::Direct => {
            let mut w = vec![0.0; rows + 1];
            for j in 2..=rows {
                w[j] = if j == 2 { mu2 * leak } else { w[j - 1] * leak };
            }
            w
        }
    };

    let mut taps: Vec<Vec<f64>> = vec![vec![0.0; rows * cols]; cfg.taps];
    fill_base_block(&cfg.base, &points, rows, &mut taps[0]);
    // tail[i][a]: the cross-column memory sum feeding tap i + 1 at row a.
    let mut tail = vec![vec![0.0; rows]; cfg.taps.saturating_sub(1)];

    for b in 1..cols {
        for i in 1..cfg.taps {
            let (lower, upper) = taps.split_at_mut(i);
            let prev = &lower[i - 1];
            let cur = &mut upper[0];
            let tail = &mut tail[i - 1];
            let prev_b1 = &prev[(b - 1) * rows..b * rows];
            if b >= 2 {
                let prev_b2 = &prev[(b - 2) * rows..(b - 1) * rows];
                for a in (1..rows).rev() {
                    tail[a] = leak * (tail[a] + mu2 * prev_b2[a - 1]);
                }
            }
            let (done, rest) = cur.split_at_mut(b * rows);
            let own_b1 = &done[(b - 1) * rows..];
            let col = &mut rest[..rows];
            let mut conv = 0.0;
            for a in 1..rows {
                let within = match mode {
                    ConvolutionMode::Recursive => {
                        if a >= 2 {
                            conv = leak * (conv + mu2 * prev_b1[a - 2]);
                        }
                        conv
                    }
                    ConvolutionMode::Direct => {
                        (2..=a).map(|j| weights[j] * prev_b1[a - j]).sum()
                    }
                };
                col[a] = leak * leak * own_b1[a - 1] + mu2 * prev_b1[a - 1] + within + tail[a];
            }
        }
    }

    Ok(KernelStack {
        taps: taps.into_iter().map(|t| DMatrix::from_vec(rows, cols, t)).collect(),
    })
}

/// Entrywise mean of the tap matrices.
pub fn composite_average(stack: &KernelStack) -> DMatrix<f64> {
    composite_of(&stack.taps)
}

pub(crate) fn composite_of(taps: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut sum = taps[0].clone();
    for t in &taps[1..] {
        sum += t;
    }
    if taps.len() > 1 {
        sum /= taps.len() as f64;
    }
    sum
}
