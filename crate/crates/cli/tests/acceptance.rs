//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Everything runs inside a single test so the timing criterion is not
//! disturbed by concurrently running tests.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmk_cli::bench::run_bench;
use rmk_cli::config::{BenchConfig, ExperimentConfig};
use rmk_cli::experiments::{run_batch, run_online_models, OnlineRun};
use rmk_core::batch::{fit_stacking, krr_fit, train_batch, train_composite, StackingConfig};
use rmk_core::datasets::{generate, nmse, GeneratorSpec, SplitSizes, Task};
use rmk_core::kernel::{
    embed, kernel_stack_fast, kernel_stack_fast_with, kernel_stack_naive, BaseKernel, ConvolutionMode, KernelStack,
    RecursiveKernelConfig, StreamKernelState,
};
use rmk_core::online::{klms_baseline, run_online, OnlineFilter, OnlineOptions};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn dataset(task: &str, seed: u64, split: SplitSizes) -> rmk_core::datasets::SeriesDataset {
    generate(&GeneratorSpec::new(Task::from_name(task).unwrap(), seed, split)).unwrap()
}

/// Gram matrices of explicitly propagated gamma states, zero initial state.
fn explicit_stack(features: &[Vec<f64>], taps: usize, mu: f64) -> Vec<DMatrix<f64>> {
    let n = features.len();
    let d = features[0].len();
    let mut states = vec![vec![vec![0.0; d]; n]; taps];
    for t in 0..n {
        states[0][t] = features[t].clone();
        if t == 0 {
            continue;
        }
        for i in 1..taps {
            states[i][t] = (0..d).map(|k| (1.0 - mu) * states[i][t - 1][k] + mu * states[i - 1][t - 1][k]).collect();
        }
    }
    states
        .iter()
        .map(|s| DMatrix::from_fn(n, n, |a, b| s[a].iter().zip(&s[b]).map(|(x, y)| x * y).sum()))
        .collect()
}

fn quadratic_map(x: &[f64], c: f64) -> Vec<f64> {
    let mut f: Vec<f64> = x.iter().flat_map(|a| x.iter().map(move |b| a * b)).collect();
    f.extend(x.iter().map(|v| (2.0 * c).sqrt() * v));
    f.push(c);
    f
}

fn stack_vs(a: &KernelStack, b: &[DMatrix<f64>]) -> f64 {
    a.taps().iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [10, 50, 200] {
        for taps in [1, 3, 5] {
            for mu in [0.3, 0.5, 0.9, 1.0] {
                for seed in 0..20u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let series: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
                    let c: f64 = rng.random_range(0.0..2.0);
                    let len = 2;
                    let linear: Vec<Vec<f64>> = (0..n).map(|t| embed(&series, len, t)).collect();
                    let quad: Vec<Vec<f64>> = linear.iter().map(|x| quadratic_map(x, c)).collect();
                    for (base, feats) in [(BaseKernel::Linear, &linear), (BaseKernel::polynomial(2, c).unwrap(), &quad)] {
                        let cfg = RecursiveKernelConfig::new(base, taps, mu, len).unwrap();
                        let naive = kernel_stack_naive(&cfg, &series).unwrap();
                        worst = worst.max(stack_vs(&naive, &explicit_stack(feats, taps, mu)));
                        cases += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-10 && secs < 60.0, format!("{cases} cases, max abs error {worst:.2e} (< 1e-10), {secs:.1}s (< 60s)"))
}

fn fast_path_equivalence() -> Verdict {
    let start = Instant::now();
    let mg = dataset("mackey-glass", 1, SplitSizes::new(512, 0, 0)).inputs;
    let bases = [
        BaseKernel::rbf(0.5).unwrap(),
        BaseKernel::rbf(2.0).unwrap(),
        BaseKernel::Linear,
        BaseKernel::polynomial(2, 1.0).unwrap(),
        BaseKernel::polynomial(3, 0.5).unwrap(),
    ];
    let (mut batch_worst, mut stream_worst): (f64, f64) = (0.0, 0.0);
    for n in [16, 128, 512] {
        let series = &mg[..n];
        for base in bases {
            for (taps, mu, len) in [(5, 0.3, 1), (5, 0.9, 3), (3, 1.0, 2)] {
                let cfg = RecursiveKernelConfig::new(base, taps, mu, len).unwrap();
                let naive = kernel_stack_naive(&cfg, series).unwrap();
                for mode in [ConvolutionMode::Recursive, ConvolutionMode::Direct] {
                    let fast = kernel_stack_fast_with(&cfg, series, mode).unwrap();
                    batch_worst = batch_worst.max(stack_vs(&fast, naive.taps()));
                }
                let mut stream = StreamKernelState::new(cfg).unwrap();
                for t in 0..n {
                    let cols = stream.push(&embed(series, len, t)).unwrap();
                    for i in 0..taps {
                        let col = cols.tap(i);
                        for (m, v) in col.iter().enumerate().take(t + 1) {
                            stream_worst = stream_worst.max((v - naive.get(i, m, t)).abs());
                        }
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        batch_worst < 1e-9 && stream_worst < 1e-9 && secs < 120.0,
        format!("fast vs naive {batch_worst:.2e}, stream vs naive {stream_worst:.2e} (< 1e-9), {secs:.1}s (< 120s)"),
    )
}

fn timing() -> Verdict {
    let cfg = BenchConfig {
        sizes: vec![256, 512, 1024, 2048],
        taps: 5,
        repetitions: 3,
        warmup: true,
        ..BenchConfig::default()
    };
    let rows = match run_bench(&cfg, |_| {}) {
        Ok(rows) => rows,
        Err(e) => return verdict(false, format!("benchmark failed: {e}")),
    };
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio()).collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let last = rows.last().unwrap().fast_seconds;
    let listed: Vec<String> = rows.iter().map(|r| format!("N={} {:.4}", r.n, r.ratio())).collect();
    verdict(
        decreasing && last < 60.0,
        format!("fast/naive ratios [{}], strictly decreasing: {decreasing}; fast at N=2048 {last:.3}s (< 60s)", listed.join(", ")),
    )
}

fn degeneration() -> Verdict {
    // Unit leak: tap i is tap 0 delayed by i samples, exactly.
    let mg = dataset("mackey-glass", 2, SplitSizes::new(300, 0, 0));
    let s = &mg.inputs[..120];
    let cfg = RecursiveKernelConfig::new(BaseKernel::rbf(0.8).unwrap(), 6, 1.0, 2).unwrap();
    let stack = kernel_stack_fast(&cfg, s).unwrap();
    let mut delay_exact = true;
    for i in 0..6 {
        for m in 0..s.len() {
            for n in 0..s.len() {
                let expected = if m >= i && n >= i { stack.get(0, m - i, n - i) } else { 0.0 };
                delay_exact &= stack.get(i, m, n) == expected;
            }
        }
    }

    // One tap: the batch pipeline is kernel ridge regression.
    let (x, y) = (&mg.inputs[..200], &mg.targets[..200]);
    let base = BaseKernel::rbf(0.7).unwrap();
    let len = 3;
    let reg = 1e-3;
    let pts: Vec<Vec<f64>> = (0..200).map(|t| embed(x, len, t)).collect();
    let k = DMatrix::from_fn(200, 200, |a, b| base.eval(&pts[a], &pts[b]).unwrap()) + DMatrix::identity(200, 200) * reg;
    let beta = k.lu().solve(&DVector::from_column_slice(y)).unwrap();
    let reference: Vec<f64> = (200..300)
        .map(|t| {
            let q = embed(&mg.inputs, len, t);
            pts.iter().zip(beta.iter()).map(|(p, b)| b * base.eval(p, &q).unwrap()).sum()
        })
        .collect();
    let model = train_composite(x, y, &RecursiveKernelConfig::new(base, 1, 0.5, len).unwrap(), reg).unwrap();
    let got = model.predict_series(&mg.inputs, 200..300).unwrap();
    let krr_diff = got.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // One tap, frozen combiner: the online pipeline is KLMS.
    let nar = dataset("narendra", 2, SplitSizes::new(1000, 0, 0));
    let opts = OnlineOptions::default();
    let mut klms_diff: f64 = 0.0;
    for (len, mu, width, eta) in [(1, 0.3, 0.5, 0.4), (3, 0.9, 1.0, 0.1)] {
        let base = BaseKernel::rbf(width).unwrap();
        let ours = run_online(&RecursiveKernelConfig::new(base, 1, mu, len).unwrap(), &nar, eta, 0.0, &opts).unwrap();
        let klms = klms_baseline(&nar, base, len, eta, &opts).unwrap();
        for (a, b) in ours.predictions.iter().zip(&klms.predictions) {
            klms_diff = klms_diff.max((a - b).abs());
        }
    }
    verdict(
        delay_exact && krr_diff < 1e-9 && klms_diff < 1e-9,
        format!(
            "unit-leak delay line exact: {delay_exact}; one-tap batch vs KRR {krr_diff:.2e}; one-tap online vs KLMS {klms_diff:.2e} (< 1e-9)"
        ),
    )
}

fn certificates() -> Verdict {
    let ds = dataset("mackey-glass", 3, SplitSizes::new(200, 0, 0));
    let (x, y) = (&ds.inputs[..], &ds.targets[..]);
    let yv = DVector::from_column_slice(y);
    let cfg = RecursiveKernelConfig::new(BaseKernel::rbf(0.5).unwrap(), 5, 0.5, 2).unwrap();
    let stack = kernel_stack_fast(&cfg, x).unwrap();

    let mut krr_res: f64 = 0.0;
    for reg in [1e-6, 1e-3, 1.0] {
        for k in stack.taps() {
            let beta = krr_fit(k, y, reg).unwrap();
            let a = k + DMatrix::identity(y.len(), y.len()) * reg;
            krr_res = krr_res.max((&a * &beta - &yv).norm() / yv.norm());
        }
    }

    let f = train_batch(x, y, &cfg, 1e-4, StackingConfig::Plain).unwrap().features().clone();
    let alpha = fit_stacking(&f, y, StackingConfig::Plain).unwrap();
    let fty = f.tr_mul(&yv);
    let normal_res = f.tr_mul(&(&yv - &f * &alpha)).norm() / fty.norm();

    let mut subgrad: f64 = 0.0;
    for lambda in [1e-3, 1e-1, 1.0, 10.0] {
        let a = fit_stacking(&f, y, StackingConfig::Sparse { lambda }).unwrap();
        let g = f.tr_mul(&(&yv - &f * &a));
        for i in 0..a.len() {
            let v = if a[i] == 0.0 { (g[i].abs() - lambda).max(0.0) } else { (g[i] - lambda * a[i].signum()).abs() };
            subgrad = subgrad.max(v / lambda.max(1.0));
        }
    }

    let nu = 0.05;
    let mut filter = OnlineFilter::new(cfg, 0.5, nu).unwrap();
    for t in 0..60 {
        filter.step(x[t], y[t]).unwrap();
    }
    let before = filter.alpha().to_vec();
    let out = filter.step(x[60], y[60]).unwrap();
    let loss = |a: &[f64]| {
        let e = y[60] - a.iter().zip(&out.tap_posterior).map(|(w, v)| w * v).sum::<f64>();
        0.5 * e * e
    };
    let h = 1e-6;
    let mut fd_rel: f64 = 0.0;
    for i in 0..before.len() {
        let (mut up, mut down) = (before.clone(), before.clone());
        up[i] += h;
        down[i] -= h;
        let expected = -nu * (loss(&up) - loss(&down)) / (2.0 * h);
        let step = filter.alpha()[i] - before[i];
        fd_rel = fd_rel.max((step - expected).abs() / expected.abs().max(1e-12));
    }
    verdict(
        krr_res < 1e-8 && normal_res < 1e-8 && subgrad <= 1e-6 && fd_rel <= 1e-6,
        format!(
            "KRR residual {krr_res:.2e}, normal equations {normal_res:.2e} (< 1e-8); subgradient {subgrad:.2e}, combiner vs finite difference {fd_rel:.2e} (<= 1e-6)"
        ),
    )
}

/// Per-model medians of the test nMSE over seeds 1..=5.
fn batch_medians(task: &str, models: &[&str]) -> Vec<f64> {
    let per_seed: Vec<Vec<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (1..=5u64)
            .map(|seed| {
                scope.spawn(move || {
                    let mut cfg = ExperimentConfig { seed, ..ExperimentConfig::default() };
                    cfg.dataset.task = Some(task.to_owned());
                    cfg.batch.models = models.iter().map(|m| m.to_string()).collect();
                    let ds = cfg.dataset.load(seed, cfg.dataset.split()).unwrap();
                    run_batch(&cfg, &ds).unwrap().table.rows.iter().map(|r| r.nmse_db).collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    (0..models.len()).map(|m| median(per_seed.iter().map(|s| s[m]).collect())).collect()
}

fn batch_tables() -> Verdict {
    let nar = batch_medians("narendra", &["rbf-embedding", "stacking"]);
    let mg = batch_medians("mackey-glass", &["composite-average", "stacking"]);
    let margin = nar[0] - nar[1];
    verdict(
        margin >= 1.0 && mg[0] <= -19.0 && mg[1] <= -19.0,
        format!(
            "narendra: stacking {:.2} dB vs rbf-embedding {:.2} dB, margin {margin:.2} dB (>= 1); mackey-glass: composite-average {:.2} dB, stacking {:.2} dB (<= -19)",
            nar[1], nar[0], mg[0], mg[1]
        ),
    )
}

fn online_runs(task: &str, width: f64, eta: f64, taps: usize, mu: f64, nu: f64, embed_len: usize) -> Vec<OnlineRun> {
    (1..=5u64)
        .map(|seed| {
            let mut cfg = ExperimentConfig { seed, ..ExperimentConfig::default() };
            cfg.dataset.task = Some(task.to_owned());
            let o = &mut cfg.online;
            (o.width, o.eta, o.taps, o.mu, o.nu, o.embed_len) = (width, eta, taps, mu, nu, embed_len);
            let ds = cfg.dataset.load_stream(seed, o.stream).unwrap();
            run_online_models(&cfg, &ds).unwrap()
        })
        .collect()
}

/// Median final nMSE of (klms, rmk-klms).
fn online_medians(runs: &[OnlineRun]) -> (f64, f64) {
    let m = |i: usize| median(runs.iter().map(|r| r.table.rows[i].nmse_db).collect());
    (m(0), m(1))
}

fn online_tables() -> Verdict {
    let (mg_k, mg_r) = online_medians(&online_runs("mackey-glass", 0.2, 0.2, 3, 0.9, 0.5, 1));
    let (nar_k, nar_r) = online_medians(&online_runs("narendra", 0.1, 0.1, 2, 0.1, 0.05, 1));
    let (wie_k, wie_r) = online_medians(&online_runs("wiener", 1.0, 0.9, 3, 0.5, 0.05, 1));
    let (mg_m, nar_m) = (mg_k - mg_r, nar_k - nar_r);
    verdict(
        mg_m >= 3.0 && nar_m >= 3.0,
        format!(
            "mackey-glass: rmk-klms {mg_r:.2} vs klms {mg_k:.2} dB, margin {mg_m:.2}; narendra: {nar_r:.2} vs {nar_k:.2} dB, margin {nar_m:.2} (>= 3); wiener (reported only): {wie_r:.2} vs {wie_k:.2} dB"
        ),
    )
}

fn convergence() -> Verdict {
    let runs = online_runs("channel-equalization", 0.5, 0.1, 5, 0.9, 0.05, 3);
    let steps = |i: usize| {
        median(runs.iter().map(|r| r.reports[i].1.steps_to_reach(1.5).map_or(f64::INFINITY, |s| s as f64)).collect())
    };
    let (klms, rmk) = (steps(0), steps(1));
    let (klms_db, rmk_db) = online_medians(&runs);
    verdict(
        rmk <= 0.5 * klms,
        format!(
            "steps to 1.5x final MSE: rmk-klms {rmk} vs klms {klms} (needs <= {}); final nMSE {rmk_db:.2} vs {klms_db:.2} dB",
            0.5 * klms
        ),
    )
}

fn nmse_contract() -> Verdict {
    let t = [1.0, 2.0, 4.0, -3.0];
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let zero = nmse(&[mean; 4], &t).unwrap();
    let twenty = nmse(&[11.0, -9.0], &[10.0, -10.0]).unwrap();
    let floor = nmse(&t, &t).unwrap();
    verdict(
        zero == 0.0 && twenty == -20.0 && floor == -300.0,
        format!("mean predictor {zero} dB, hundredth of variance {twenty} dB, exact predictions {floor} dB"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(u32, fn() -> Verdict); 9] = [
        (1, oracle_equivalence),
        (2, fast_path_equivalence),
        (3, timing),
        (4, degeneration),
        (5, certificates),
        (6, batch_tables),
        (7, online_tables),
        (8, convergence),
        (9, nmse_contract),
    ];
    let mut failed = Vec::new();
    println!();
    for (id, run) in criteria {
        let v = run();
        println!("criterion {id}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
