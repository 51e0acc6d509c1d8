use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{SeriesDataset, SplitSizes};
use crate::{Error, Result};

/// Mackey-Glass delay differential equation
/// `dx/dt = a x(t - delay) / (1 + x(t - delay)^exponent) - b x(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MackeyGlassParams {
    pub delay: f64,
    pub a: f64,
    pub b: f64,
    pub exponent: f64,
    /// Constant value of the pre-history `x(t), t <= 0`.
    pub history: f64,
    /// Runge-Kutta step.
    pub step: f64,
    /// Time between consecutive samples.
    pub stride: f64,
    /// Samples discarded before the series starts.
    pub transient: usize,
    /// Each seed discards a further number of samples drawn uniformly from
    /// `0..start_jitter`, so different seeds see different stretches of the attractor.
    pub start_jitter: usize,
    pub horizon: usize,
    /// Variance of optional Gaussian noise added to the sampled series.
    pub noise_variance: f64,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        MackeyGlassParams {
            delay: 30.0,
            a: 0.2,
            b: 0.1,
            exponent: 10.0,
            history: 1.2,
            step: 0.1,
            stride: 1.0,
            transient: 1000,
            start_jitter: 1000,
            horizon: 1,
            noise_variance: 0.0,
        }
    }
}

/// Noisy nonlinear identification task `y_n = 0.3 y_{n-1} + 0.6 y_{n-2} + f(e_n)`
/// driven by `e_n = sin((1 + a) omega0 n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NarendraParams {
    pub omega0: f64,
    /// `a` is drawn uniformly from this interval once per realization.
    pub a_range: (f64, f64),
    /// Variance of the Gaussian noise added to training targets.
    pub noise_variance: f64,
}

impl Default for NarendraParams {
    fn default() -> Self {
        NarendraParams { omega0: 2.0 * PI / 250.0, a_range: (0.1, 2.9), noise_variance: 0.1 }
    }
}

/// Normalized length-8 FIR filter of the Wiener system.
pub const WIENER_FILTER: [f64; 8] = [0.20, 0.17, 0.14, 0.12, 0.10, 0.09, 0.09, 0.09];

/// Wiener system: AR(1) input `x_n = b x_{n-1} + sqrt(1 - b^2) e_n` through a
/// FIR filter followed by `tanh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerParams {
    pub b: f64,
    /// Variance of the input innovations `e_n`.
    pub noise_variance: f64,
    pub filter: [f64; 8],
}

impl Default for WienerParams {
    fn default() -> Self {
        WienerParams { b: 0.8, noise_variance: 0.1, filter: WIENER_FILTER }
    }
}

/// Binary symbols through `z_n = s_n + tap s_{n-1}`,
/// `r_n = z_n - nonlinearity z_n^2 + noise`; the target is `s_{n - delay}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub tap: f64,
    pub nonlinearity: f64,
    pub noise_variance: f64,
    pub delay: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams { tap: 0.5, nonlinearity: 0.9, noise_variance: 0.01, delay: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    MackeyGlass(MackeyGlassParams),
    Narendra(NarendraParams),
    Wiener(WienerParams),
    ChannelEqualization(ChannelParams),
}

impl Task {
    pub const NAMES: [&'static str; 4] = ["mackey-glass", "narendra", "wiener", "channel-equalization"];

    /// Default parameters for a task name from [`Task::NAMES`].
    pub fn from_name(name: &str) -> Option<Task> {
        Some(match name {
            "mackey-glass" | "mg30" => Task::MackeyGlass(MackeyGlassParams::default()),
            "narendra" => Task::Narendra(NarendraParams::default()),
            "wiener" => Task::Wiener(WienerParams::default()),
            "channel-equalization" | "equalization" => Task::ChannelEqualization(ChannelParams::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::MackeyGlass(_) => Task::NAMES[0],
            Task::Narendra(_) => Task::NAMES[1],
            Task::Wiener(_) => Task::NAMES[2],
            Task::ChannelEqualization(_) => Task::NAMES[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub task: Task,
    pub seed: u64,
    pub split: SplitSizes,
}

impl GeneratorSpec {
    pub fn new(task: Task, seed: u64, split: SplitSizes) -> Self {
        GeneratorSpec { task, seed, split }
    }

    pub fn validate(&self) -> Result<()> {
        if self.split.train == 0 {
            return Err(Error::InvalidParameter { name: "train", reason: "must be at least 1" });
        }
        let variance = match self.task {
            Task::MackeyGlass(p) => {
                if !(p.step > 0.0 && p.stride >= p.step && p.delay >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "step",
                        reason: "need step > 0, stride >= step, delay >= 0",
                    });
                }
                if p.horizon == 0 {
                    return Err(Error::InvalidParameter { name: "horizon", reason: "must be at least 1" });
                }
                p.noise_variance
            }
            Task::Narendra(p) => {
                if !(p.a_range.0 <= p.a_range.1) {
                    return Err(Error::InvalidParameter { name: "a_range", reason: "lower bound exceeds upper" });
                }
                p.noise_variance
            }
            Task::Wiener(p) => {
                if !(p.b.abs() <= 1.0) {
                    return Err(Error::InvalidParameter { name: "b", reason: "must lie in [-1, 1]" });
                }
                p.noise_variance
            }
            Task::ChannelEqualization(p) => p.noise_variance,
        };
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter { name: "noise_variance", reason: "must be finite and >= 0" });
        }
        Ok(())
    }
}

/// Builds the dataset described by `spec`; identical specs give identical data.
pub fn generate(spec: &GeneratorSpec) -> Result<SeriesDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.split.total();
    let name = format!("{}-seed{}", spec.task.name(), spec.seed);
    match spec.task {
        Task::MackeyGlass(p) => {
            let skip = if p.start_jitter > 0 { rng.random_range(0..p.start_jitter) } else { 0 };
            let mut series = mackey_glass_series(&p, skip + total + p.horizon).split_off(skip);
            add_noise(&mut series, p.noise_variance, &mut rng);
            SeriesDataset::ahead(name, &series, p.horizon, spec.split)
        }
        Task::Narendra(p) => {
            let a = if p.a_range.0 == p.a_range.1 { p.a_range.0 } else { rng.random_range(p.a_range.0..p.a_range.1) };
            let w = (1.0 + a) * p.omega0;
            let inputs: Vec<f64> = (1..=total).map(|n| libm::sin(w * n as f64)).collect();
            let clean = narendra_response(&inputs);
            let mut noisy = clean.clone();
            add_noise(&mut noisy[..spec.split.train], p.noise_variance, &mut rng);
            SeriesDataset::new(name, inputs, noisy, spec.split, 0)?.with_clean_targets(clean)
        }
        Task::Wiener(p) => {
            let x0: f64 = rng.random_range(0.0..1.0);
            let innovations = gaussian(total, p.noise_variance, &mut rng);
            let x = wiener_input(x0, p.b, &innovations);
            let y = wiener_output(&x, &p.filter);
            SeriesDataset::new(name, x[1..].to_vec(), y[1..].to_vec(), spec.split, 0)
        }
        Task::ChannelEqualization(p) => {
            let symbols: Vec<f64> =
                (0..total + p.delay).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let mut received = channel_output(&symbols, p.tap, p.nonlinearity);
            add_noise(&mut received, p.noise_variance, &mut rng);
            SeriesDataset::new(name, received[p.delay..].to_vec(), symbols[..total].to_vec(), spec.split, 0)
        }
    }
}

fn gaussian(n: usize, variance: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if variance == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, libm::sqrt(variance)).expect("validated variance");
    (0..n).map(|_| normal.sample(rng)).collect()
}

fn add_noise(values: &mut [f64], variance: f64, rng: &mut ChaCha8Rng) {
    let noise = gaussian(values.len(), variance, rng);
    for (v, e) in values.iter_mut().zip(noise) {
        *v += e;
    }
}

/// Samples the Mackey-Glass equation with fourth-order Runge-Kutta, linear
/// interpolation of the delayed state and a constant pre-history.
pub fn mackey_glass_series(p: &MackeyGlassParams, samples: usize) -> Vec<f64> {
    let h = p.step;
    let per_sample = libm::round(p.stride / h).max(1.0) as usize;
    let steps = (p.transient + samples).saturating_sub(1) * per_sample;
    let mut x = Vec::with_capacity(steps + 1);
    x.push(p.history);
    // State at time t (multiple of h allowed to be fractional), using the
    // pre-history for t <= 0 and linear interpolation between grid points.
    let at = |x: &[f64], t: f64| -> f64 {
        if t <= 0.0 {
            return p.history;
        }
        let pos = t / h;
        let k = libm::floor(pos) as usize;
        let frac = pos - k as f64;
        if k + 1 >= x.len() {
            return x[x.len() - 1];
        }
        x[k] + frac * (x[k + 1] - x[k])
    };
    let rhs = |state: f64, delayed: f64| p.a * delayed / (1.0 + libm::pow(delayed, p.exponent)) - p.b * state;
    for k in 0..steps {
        let t = k as f64 * h;
        let xk = x[k];
        let d0 = at(&x, t - p.delay);
        let dh = at(&x, t + 0.5 * h - p.delay);
        let d1 = at(&x, t + h - p.delay);
        let k1 = rhs(xk, d0);
        let k2 = rhs(xk + 0.5 * h * k1, dh);
        let k3 = rhs(xk + 0.5 * h * k2, dh);
        let k4 = rhs(xk + h * k3, d1);
        x.push(xk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    x.iter().step_by(per_sample).skip(p.transient).take(samples).copied().collect()
}

/// `f(e) = 0.6 sin(pi e) + 0.3 sin(3 pi e) + 0.1 sin(5 pi e)`.
pub fn narendra_nonlinearity(e: f64) -> f64 {
    0.6 * libm::sin(PI * e) + 0.3 * libm::sin(3.0 * PI * e) + 0.1 * libm::sin(5.0 * PI * e)
}

fn narendra_response(excitation: &[f64]) -> Vec<f64> {
    let (mut y1, mut y2) = (1.0, 1.0);
    excitation
        .iter()
        .map(|&e| {
            let y = 0.3 * y1 + 0.6 * y2 + narendra_nonlinearity(e);
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

/// AR(1) input `[x_0, x_1, ...]` with `x_n = b x_{n-1} + sqrt(1 - b^2) e_n`.
pub fn wiener_input(x0: f64, b: f64, innovations: &[f64]) -> Vec<f64> {
    let gain = libm::sqrt(1.0 - b * b);
    let mut x = Vec::with_capacity(innovations.len() + 1);
    x.push(x0);
    for e in innovations {
        let prev = x[x.len() - 1];
        x.push(b * prev + gain * e);
    }
    x
}

/// `tanh` of the FIR filter over the current and previous inputs (zero before the start).
pub fn wiener_output(x: &[f64], filter: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            let lin: f64 = filter.iter().enumerate().filter(|(k, _)| *k <= n).map(|(k, h)| h * x[n - k]).sum();
            libm::tanh(lin)
        })
        .collect()
}

/// Noiseless received signal `z - nonlinearity z^2`, `z_n = s_n + tap s_{n-1}`, `s_{-1} = 0`.
pub fn channel_output(symbols: &[f64], tap: f64, nonlinearity: f64) -> Vec<f64> {
    (0..symbols.len())
        .map(|n| {
            let z = symbols[n] + if n > 0 { tap * symbols[n - 1] } else { 0.0 };
            z - nonlinearity * z * z
        })
        .collect()
}
