use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rmk_cli::csv_io::load_dataset;
use rmk_core::datasets::{generate, GeneratorSpec, SplitSizes, Task};

fn rmk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmk")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

const SMALL_SPLIT: &str = "[dataset]\ntrain = 60\nvalidation = 40\ntest = 40\n";

#[test]
fn generate_round_trips_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SPLIT);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = rmk(&["generate", "--config", &cfg, "--task", "narendra", "--seed", "3", "--out", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(a.with_extension("meta.toml")).unwrap(), fs::read(b.with_extension("meta.toml")).unwrap());
    let (loaded, meta) = load_dataset(&a).unwrap();
    let expected =
        generate(&GeneratorSpec::new(Task::from_name("narendra").unwrap(), 3, SplitSizes::new(60, 40, 40))).unwrap();
    assert_eq!(loaded, expected);
    assert_eq!(meta.seed, Some(3));
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = rmk(&["generate", "--task", "lorenz", "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&rmk(&["frobnicate"])), 2);
    let cfg = write_config(dir.path(), "[batch]\nmodels = [\"svm\"]\n");
    assert_eq!(code(&rmk(&["batch", "--config", &cfg])), 2);
    let cfg = write_config(dir.path(), "unknown_key = 1\n");
    assert_eq!(code(&rmk(&["batch", "--config", &cfg])), 2);
}

#[test]
fn data_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let cfg = write_config(dir.path(), &format!("[dataset]\ncsv = {:?}\n", missing.to_str().unwrap()));
    assert_eq!(code(&rmk(&["online", "--config", &cfg])), 3);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x\n1\n2\nnot-a-number\n").unwrap();
    let cfg = write_config(dir.path(), &format!("[dataset]\ncsv = {:?}\n", bad.to_str().unwrap()));
    let out = rmk(&["online", "--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn numerical_failures_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "out = {:?}\n{SMALL_SPLIT}[batch]\nmodels = [\"rbf-embedding\"]\n[batch.grid]\nwidths = [1e6]\nregs = [0.0]\nembed_lens = [1]\n",
            dir.path().join("o").to_str().unwrap()
        ),
    );
    let out = rmk(&["batch", "--config", &cfg]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn batch_writes_results_and_a_reproducing_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1");
    let cfg = write_config(
        dir.path(),
        &format!(
            "{SMALL_SPLIT}[batch]\nmodels = [\"rbf-embedding\", \"composite-average\", \"stacking\", \"sparse-stacking\"]\n\
             [batch.grid]\nwidths = [0.5, 1.0]\nmus = [0.5]\ntaps = [2, 3]\nregs = [1e-3]\nembed_lens = [2]\nlambdas = [0.1]\n"
        ),
    );
    let out = rmk(&["batch", "--config", &cfg, "--seed", "2", "--out", out1.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        header(&out1.join("results.csv")),
        "dataset,model,nmse_db,validation_nmse_db,width,mu,taps,reg,embed_len,lambda,eta,nu,seconds"
    );
    let results = fs::read_to_string(out1.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 5);
    assert_eq!(
        header(&out1.join("predictions.csv")),
        "index,target,rbf-embedding,composite-average,stacking,sparse-stacking"
    );
    assert_eq!(fs::read_to_string(out1.join("predictions.csv")).unwrap().lines().count(), 41);

    let echo = out1.join("config_echo.toml");
    assert!(fs::read_to_string(&echo).unwrap().contains("seed = 2"));
    let out2 = dir.path().join("run2");
    let out = rmk(&["batch", "--config", echo.to_str().unwrap(), "--out", out2.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(out1.join("predictions.csv")).unwrap(), fs::read(out2.join("predictions.csv")).unwrap());
}

#[test]
fn online_writes_learning_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let cfg = write_config(
        dir.path(),
        "[dataset]\ntask = \"wiener\"\n[online]\nstream = 300\ntaps = 1\nnu = 0.0\nalpha_init = [1.0]\nsmoothing = 20\n",
    );
    let out = rmk(&["online", "--config", &cfg, "--out", o.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let klms = fs::read_to_string(o.join("learning_curve_klms.csv")).unwrap();
    let rmk_curve = fs::read_to_string(o.join("learning_curve_rmk-klms.csv")).unwrap();
    assert!(klms.starts_with("step,running_mse\n"));
    assert_eq!(klms.lines().count(), 301);
    // One tap with a frozen unit combiner is plain KLMS.
    for (a, b) in klms.lines().skip(1).zip(rmk_curve.lines().skip(1)) {
        let va: f64 = a.split(',').nth(1).unwrap().parse().unwrap();
        let vb: f64 = b.split(',').nth(1).unwrap().parse().unwrap();
        assert!((va - vb).abs() < 1e-9);
    }
    assert_eq!(header(&o.join("predictions.csv")), "step,target,klms,rmk-klms");
    assert_eq!(fs::read_to_string(o.join("results.csv")).unwrap().lines().count(), 3);
}

#[test]
fn bench_writes_timing() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let out = rmk(&["bench-kernel", "--sizes", "16,32", "--repetitions", "1", "--out", o.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let timing = fs::read_to_string(o.join("timing.csv")).unwrap();
    let mut lines = timing.lines();
    assert_eq!(lines.next().unwrap(), "n,taps,repetitions,naive_seconds,fast_seconds,ratio,max_abs_diff");
    assert!(lines.next().unwrap().starts_with("16,5,1,"));
    assert!(lines.next().unwrap().starts_with("32,5,1,"));
    assert_eq!(code(&rmk(&["bench-kernel", "--sizes", "32,16", "--out", o.to_str().unwrap()])), 2);
}
