//! Wall-clock comparison of the reference and incremental kernel evaluators.

use std::time::Instant;

use rmk_core::datasets::{mackey_glass_series, MackeyGlassParams};
use rmk_core::kernel::{kernel_stack_fast, kernel_stack_naive, BaseKernel, KernelStack, RecursiveKernelConfig};

use crate::config::BenchConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    pub taps: usize,
    pub repetitions: usize,
    pub naive_seconds: f64,
    pub fast_seconds: f64,
    pub max_abs_diff: f64,
}

impl TimingRow {
    /// Fast time as a fraction of naive time.
    pub fn ratio(&self) -> f64 {
        self.fast_seconds / self.naive_seconds
    }
}

pub const TIMING_HEADER: [&str; 7] =
    ["n", "taps", "repetitions", "naive_seconds", "fast_seconds", "ratio", "max_abs_diff"];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn time<T>(f: impl Fn() -> T, repetitions: usize, warmup: bool) -> (f64, T) {
    if warmup {
        std::hint::black_box(f());
    }
    let mut times = Vec::with_capacity(repetitions);
    let mut last = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let out = std::hint::black_box(f());
        times.push(start.elapsed().as_secs_f64());
        last = Some(out);
    }
    (median(times), last.expect("at least one repetition"))
}

fn max_diff(a: &KernelStack, b: &KernelStack) -> f64 {
    a.taps().iter().zip(b.taps()).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

/// Times both evaluators on a Mackey-Glass series at every size, serially,
/// and fails if their outputs differ by more than the tolerance.
pub fn run_bench(cfg: &BenchConfig, mut progress: impl FnMut(&TimingRow)) -> Result<Vec<TimingRow>, CliError> {
    if cfg.sizes.is_empty() || cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("bench.sizes must be nonempty and strictly ascending".into()));
    }
    if cfg.repetitions == 0 {
        return Err(CliError::Usage("bench.repetitions must be at least 1".into()));
    }
    let base = BaseKernel::rbf(cfg.width).map_err(|e| CliError::core("bench.width", e))?;
    let kernel = RecursiveKernelConfig::new(base, cfg.taps, cfg.mu, 1).map_err(|e| CliError::core("bench", e))?;
    let series = mackey_glass_series(&MackeyGlassParams::default(), *cfg.sizes.last().unwrap());
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let s = &series[..n];
        let run = |f: fn(&RecursiveKernelConfig, &[f64]) -> rmk_core::Result<KernelStack>| {
            time(|| f(&kernel, s), cfg.repetitions, cfg.warmup)
        };
        let (naive_seconds, naive) = run(kernel_stack_naive);
        let (fast_seconds, fast) = run(kernel_stack_fast);
        let naive = naive.map_err(|e| CliError::core("naive kernel", e))?;
        let fast = fast.map_err(|e| CliError::core("fast kernel", e))?;
        let diff = max_diff(&naive, &fast);
        if diff.is_nan() || diff > cfg.tolerance {
            return Err(CliError::Mismatch { n, diff });
        }
        let row = TimingRow { n, taps: cfg.taps, repetitions: cfg.repetitions, naive_seconds, fast_seconds, max_abs_diff: diff };
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}
