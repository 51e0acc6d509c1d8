use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmk_cli::bench::{run_bench, TIMING_HEADER};
use rmk_cli::config::{parse_task, ExperimentConfig};
use rmk_cli::csv_io::{write_dataset, DatasetMeta};
use rmk_cli::experiments::{
    ensure_dir, run_batch, run_online_models, write_config_echo, write_learning_curve,
};
use rmk_cli::CliError;
use rmk_core::datasets::{generate, GeneratorSpec};

#[derive(Parser)]
#[command(name = "rmk", version, about = "Recursive multikernel filters: experiments and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset as CSV with a metadata sidecar.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Overrides the configured task.
        #[arg(long)]
        task: Option<String>,
        /// Output CSV file; the sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-search and evaluate batch models.
    Batch {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run online filters and write learning curves.
    Online {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the reference and incremental kernel evaluators.
    BenchKernel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated series lengths.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        taps: Option<usize>,
        #[arg(long)]
        repetitions: Option<usize>,
    },
}

fn load_config(common: &Common, out: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { common, task, out } => {
            let mut cfg = load_config(&common, None)?;
            if let Some(task) = task {
                cfg.dataset.task = Some(task);
                cfg.dataset.csv = None;
                cfg.dataset.file = None;
            }
            let Some(name) = cfg.dataset.task_name().map(str::to_owned) else {
                return Err(CliError::Usage("generate needs a task".into()));
            };
            let split = cfg.dataset.split();
            let ds = generate(&GeneratorSpec::new(parse_task(&name)?, cfg.seed, split))
                .map_err(|e| CliError::core(format!("generating {name}"), e))?;
            let meta = DatasetMeta {
                name: ds.name.clone(),
                task: Some(name),
                seed: Some(cfg.seed),
                horizon: ds.horizon,
                train: split.train,
                validation: split.validation,
                test: split.test,
            };
            write_dataset(&out, &ds, &meta).map_err(|e| CliError::io(&out, e))?;
            println!("wrote {} ({} samples)", out.display(), ds.len());
        }
        Command::Batch { common, out } => {
            let cfg = load_config(&common, out.as_ref())?;
            let ds = cfg.dataset.load(cfg.seed, cfg.dataset.split())?;
            let result = run_batch(&cfg, &ds)?;
            ensure_dir(&cfg.out)?;
            result.table.write_csv(&cfg.out.join("results.csv"))?;
            result.predictions.write_csv(&cfg.out.join("predictions.csv"), "index")?;
            write_config_echo(&cfg.out, &cfg)?;
            print_table(&result.table);
        }
        Command::Online { common, out } => {
            let cfg = load_config(&common, out.as_ref())?;
            let ds = cfg.dataset.load_stream(cfg.seed, cfg.online.stream)?;
            let result = run_online_models(&cfg, &ds)?;
            ensure_dir(&cfg.out)?;
            result.table.write_csv(&cfg.out.join("results.csv"))?;
            result.predictions.write_csv(&cfg.out.join("predictions.csv"), "step")?;
            for (model, report) in &result.reports {
                write_learning_curve(&cfg.out.join(format!("learning_curve_{model}.csv")), report)?;
            }
            write_config_echo(&cfg.out, &cfg)?;
            print_table(&result.table);
        }
        Command::BenchKernel { common, out, sizes, taps, repetitions } => {
            let mut cfg = load_config(&common, out.as_ref())?;
            if let Some(sizes) = sizes {
                cfg.bench.sizes = sizes;
            }
            if let Some(taps) = taps {
                cfg.bench.taps = taps;
            }
            if let Some(r) = repetitions {
                cfg.bench.repetitions = r;
            }
            let rows = run_bench(&cfg.bench, |r| {
                println!(
                    "N={:>5}  naive {:>10.4}s  fast {:>8.4}s  ratio {:.4}  max diff {:.1e}",
                    r.n,
                    r.naive_seconds,
                    r.fast_seconds,
                    r.ratio(),
                    r.max_abs_diff
                );
            })?;
            ensure_dir(&cfg.out)?;
            write_timing(&cfg.out.join("timing.csv"), &rows)?;
            write_config_echo(&cfg.out, &cfg)?;
        }
    }
    Ok(())
}

fn write_timing(path: &Path, rows: &[rmk_cli::bench::TimingRow]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(TIMING_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.taps.to_string(),
            r.repetitions.to_string(),
            r.naive_seconds.to_string(),
            r.fast_seconds.to_string(),
            r.ratio().to_string(),
            r.max_abs_diff.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn print_table(table: &rmk_cli::experiments::ResultTable) {
    for r in &table.rows {
        println!("{:<28} {:<20} {:>9.3} dB  ({:.1}s)", r.dataset, r.model, r.nmse_db, r.seconds);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
