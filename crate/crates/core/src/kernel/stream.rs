use alloc::vec;
use alloc::vec::Vec;

use super::recursive::RecursiveKernelConfig;
use crate::{Error, Result};

/// Streaming evaluator of the recursive kernel stack.
///
/// Every pushed sample appends one column per tap holding `k^i(m, n)` for all
/// stored samples `m <= n`. Columns are kept for the lifetime of the state,
/// so memory grows as `P n^2 / 2`; an optional budget caps the number of
/// samples and further pushes are rejected rather than evicting anything.
#[derive(Debug, Clone)]
pub struct StreamKernelState {
    cfg: RecursiveKernelConfig,
    budget: Option<usize>,
    points: Vec<Vec<f64>>,
    // columns[i][n][m] = k^i(m, n) for m <= n.
    columns: Vec<Vec<Vec<f64>>>,
    // tails[i][m]: cross-column memory sum of tap i, consumed by tap i + 1.
    tails: Vec<Vec<f64>>,
}

/// Columns produced by one [`StreamKernelState::push`].
#[derive(Debug, Clone, Copy)]
pub struct StreamColumns<'a> {
    state: &'a StreamKernelState,
    n: usize,
}

impl<'a> StreamColumns<'a> {
    /// Zero-based time index of the sample that was pushed.
    pub fn index(&self) -> usize {
        self.n
    }

    /// `k^i(m, n)` for `m = 0..=n`.
    pub fn tap(&self, i: usize) -> &'a [f64] {
        &self.state.columns[i][self.n]
    }
}

impl StreamKernelState {
    pub fn new(cfg: RecursiveKernelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(StreamKernelState {
            cfg,
            budget: None,
            points: Vec::new(),
            columns: vec![Vec::new(); cfg.taps],
            tails: vec![Vec::new(); cfg.taps.saturating_sub(1)],
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn config(&self) -> &RecursiveKernelConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `k^i(m, n)` for any two stored samples.
    pub fn get(&self, tap: usize, m: usize, n: usize) -> f64 {
        if m <= n {
            self.columns[tap][n][m]
        } else {
            self.columns[tap][m][n]
        }
    }

    pub fn column(&self, tap: usize, n: usize) -> &[f64] {
        &self.columns[tap][n]
    }

    /// Current memory sum `mu^2 sum_{j>=2} (1-mu)^(j-1) k^i(m-1, n-j)` of tap `i`
    /// for every stored `m`, where `n` is the latest sample. Only defined for
    /// taps that feed a later tap.
    pub fn tail(&self, tap: usize) -> &[f64] {
        &self.tails[tap]
    }

    /// Appends an (already embedded) input point and computes its columns.
    pub fn push(&mut self, point: &[f64]) -> Result<StreamColumns<'_>> {
        if let Some(dim) = self.points.first().map(Vec::len) {
            if dim != point.len() {
                return Err(Error::DimensionMismatch { expected: dim, got: point.len() });
            }
        }
        if let Some(budget) = self.budget {
            if self.points.len() >= budget {
                return Err(Error::Capacity(budget));
            }
        }
        self.points.push(point.to_vec());
        let n = self.points.len() - 1;

        let base = self.cfg.base;
        let col0: Vec<f64> = self.points.iter().map(|p| base.eval_unchecked(p, point)).collect();
        self.columns[0].push(col0);

        let mu = self.cfg.mu;
        let leak = 1.0 - mu;
        let mu2 = mu * mu;
        for i in 1..self.cfg.taps {
            let mut col = vec![0.0; n + 1];
            if n >= 1 {
                let prev = &self.columns[i - 1];
                let own_b1 = &self.columns[i][n - 1];
                let prev_b1 = &prev[n - 1];
                let tail = &mut self.tails[i - 1];
                // Advance the tail from time n - 1 to n for the rows it covers.
                if n >= 2 {
                    let prev_b2 = &prev[n - 2];
                    for (a, t) in tail.iter_mut().enumerate().skip(1) {
                        *t = leak * (*t + mu2 * prev_b2[a - 1]);
                    }
                }
                let mut conv = 0.0;
                for a in 1..=n {
                    if a >= 2 {
                        conv = leak * (conv + mu2 * prev_b1[a - 2]);
                    }
                    // The new row's tail equals the within-column sum by symmetry.
                    let t = if a < n { tail[a] } else { conv };
                    col[a] = leak * leak * own_b1[a - 1] + mu2 * prev_b1[a - 1] + conv + t;
                }
                tail.push(conv);
            } else {
                self.tails[i - 1].push(0.0);
            }
            self.columns[i].push(col);
        }
        Ok(StreamColumns { state: self, n })
    }
}
