//! Experiment configuration file (TOML). Every field is optional; see the
//! README for the full schema and defaults.

use std::fs;
use std::path::{Path, PathBuf};

use rmk_core::batch::{BatchMethod, Grid, StackingConfig, StackingFeatures};
use rmk_core::datasets::{generate, GeneratorSpec, SeriesDataset, SplitSizes, Task};
use rmk_core::kernel::{BaseKernel, RecursiveKernelConfig};
use rmk_core::online::{CombinerInput, OnlineOptions};
use serde::{Deserialize, Serialize};

use crate::csv_io::{load_csv_series, load_dataset};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory.
    pub out: PathBuf,
    pub dataset: DatasetConfig,
    pub batch: BatchConfig,
    pub online: OnlineConfig,
    pub bench: BenchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            out: PathBuf::from("results"),
            dataset: DatasetConfig::default(),
            batch: BatchConfig::default(),
            online: OnlineConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

/// At most one of `task`, `csv` and `file` selects the data; with none set
/// the Mackey-Glass generator is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Built-in generator: mackey-glass, narendra, wiener or channel-equalization.
    pub task: Option<String>,
    /// Single series predicted `horizon` steps ahead.
    pub csv: Option<PathBuf>,
    /// Column of `csv` to read; may be omitted for single-column files.
    pub column: Option<String>,
    pub horizon: usize,
    /// Dataset file written by `rmk generate`.
    pub file: Option<PathBuf>,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let split = SplitSizes::default();
        DatasetConfig {
            task: None,
            csv: None,
            column: None,
            horizon: 1,
            file: None,
            train: split.train,
            validation: split.validation,
            test: split.test,
        }
    }
}

impl DatasetConfig {
    pub fn split(&self) -> SplitSizes {
        SplitSizes::new(self.train, self.validation, self.test)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let sources = [self.task.is_some(), self.csv.is_some(), self.file.is_some()];
        if sources.iter().filter(|s| **s).count() > 1 {
            return Err(CliError::Usage("dataset: set at most one of `task`, `csv`, `file`".into()));
        }
        if let Some(task) = self.task_name() {
            parse_task(task)?;
        }
        Ok(())
    }

    /// Generator to use, if the data is generated.
    pub fn task_name(&self) -> Option<&str> {
        match (&self.task, &self.csv, &self.file) {
            (Some(t), _, _) => Some(t),
            (None, None, None) => Some(Task::NAMES[0]),
            _ => None,
        }
    }

    /// Builds the dataset; generated tasks use `split`, files carry their own.
    pub fn load(&self, seed: u64, split: SplitSizes) -> Result<SeriesDataset, CliError> {
        self.validate()?;
        if let Some(task) = self.task_name() {
            let spec = GeneratorSpec::new(parse_task(task)?, seed, split);
            return generate(&spec).map_err(|e| CliError::core(format!("generating {task}"), e));
        }
        if let Some(path) = &self.csv {
            let series = load_csv_series(path, self.column.as_deref())?;
            let name = path.file_stem().map_or_else(|| "series".into(), |s| s.to_string_lossy().into_owned());
            let needed = split.total() + self.horizon;
            if series.len() < needed {
                return Err(CliError::core(
                    format!("{}", path.display()),
                    rmk_core::Error::TooShort { needed, got: series.len() },
                ));
            }
            return SeriesDataset::ahead(name, &series[..needed], self.horizon, split)
                .map_err(|e| CliError::core(format!("{}", path.display()), e));
        }
        let path = self.file.as_ref().expect("validated source");
        Ok(load_dataset(path)?.0)
    }

    /// Data for an online run: generated tasks produce `stream` samples, series
    /// files are used in full.
    pub fn load_stream(&self, seed: u64, stream: usize) -> Result<SeriesDataset, CliError> {
        self.validate()?;
        if let Some(path) = &self.csv {
            let series = load_csv_series(path, self.column.as_deref())?;
            let n = series.len().saturating_sub(self.horizon);
            return self.load(seed, SplitSizes::new(n, 0, 0));
        }
        self.load(seed, SplitSizes::new(stream, 0, 0))
    }
}

pub fn parse_task(name: &str) -> Result<Task, CliError> {
    Task::from_name(name)
        .ok_or_else(|| CliError::Usage(format!("unknown task `{name}` (expected one of {})", Task::NAMES.join(", "))))
}

/// Hyperparameter grid; unset axes take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub widths: Option<Vec<f64>>,
    pub mus: Option<Vec<f64>>,
    pub taps: Option<Vec<usize>>,
    pub regs: Option<Vec<f64>>,
    pub embed_lens: Option<Vec<usize>>,
    pub lambdas: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<Grid, CliError> {
        let d = Grid::default();
        let grid = Grid {
            widths: self.widths.clone().unwrap_or(d.widths),
            mus: self.mus.clone().unwrap_or(d.mus),
            taps: self.taps.clone().unwrap_or(d.taps),
            regs: self.regs.clone().unwrap_or(d.regs),
            embed_lens: self.embed_lens.clone().unwrap_or(d.embed_lens),
            lambdas: self.lambdas.clone().unwrap_or(d.lambdas),
        };
        let empty = [
            ("widths", grid.widths.is_empty()),
            ("mus", grid.mus.is_empty()),
            ("taps", grid.taps.is_empty()),
            ("regs", grid.regs.is_empty()),
            ("embed_lens", grid.embed_lens.is_empty()),
            ("lambdas", grid.lambdas.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(CliError::Usage(format!("batch.grid.{name} is empty")));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    /// Any of rbf-embedding, composite-average, stacking, ridge-stacking, sparse-stacking.
    pub models: Vec<String>,
    /// in-sample or leave-one-out tap outputs for fitting the combiner.
    pub features: String,
    pub grid: GridConfig,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            models: ["rbf-embedding", "composite-average", "stacking", "sparse-stacking"].map(String::from).to_vec(),
            features: "in-sample".into(),
            grid: GridConfig::default(),
        }
    }
}

impl BatchConfig {
    pub fn methods(&self) -> Result<Vec<(String, BatchMethod)>, CliError> {
        if self.models.is_empty() {
            return Err(CliError::Usage("batch.models is empty".into()));
        }
        self.models
            .iter()
            .map(|m| {
                let method = match m.as_str() {
                    "rbf-embedding" => BatchMethod::Kernel,
                    "composite-average" => BatchMethod::CompositeAverage,
                    "stacking" => BatchMethod::Stacking(StackingConfig::Plain),
                    "ridge-stacking" => BatchMethod::Stacking(StackingConfig::Ridge { lambda: 0.0 }),
                    "sparse-stacking" => BatchMethod::Stacking(StackingConfig::Sparse { lambda: 0.0 }),
                    other => return Err(CliError::Usage(format!("unknown batch model `{other}`"))),
                };
                Ok((m.clone(), method))
            })
            .collect()
    }

    pub fn stacking_features(&self) -> Result<StackingFeatures, CliError> {
        match self.features.as_str() {
            "in-sample" => Ok(StackingFeatures::InSample),
            "leave-one-out" => Ok(StackingFeatures::LeaveOneOut),
            other => Err(CliError::Usage(format!("unknown batch.features `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    /// Any of klms, rmk-klms.
    pub models: Vec<String>,
    /// Samples in the stream when the dataset comes from a generator.
    pub stream: usize,
    pub width: f64,
    pub eta: f64,
    pub nu: f64,
    pub taps: usize,
    pub mu: f64,
    pub embed_len: usize,
    pub eval_fraction: f64,
    pub smoothing: usize,
    /// post-update or pre-update tap outputs in the combiner update.
    pub combiner_input: String,
    /// Initial combiner weights; uniform when unset.
    pub alpha_init: Option<Vec<f64>>,
    pub budget: Option<usize>,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        let o = OnlineOptions::default();
        OnlineConfig {
            models: vec!["klms".into(), "rmk-klms".into()],
            stream: 2000,
            width: 0.2,
            eta: 0.2,
            nu: 0.5,
            taps: 3,
            mu: 0.9,
            embed_len: 1,
            eval_fraction: o.eval_fraction,
            smoothing: o.smoothing,
            combiner_input: "post-update".into(),
            alpha_init: None,
            budget: None,
        }
    }
}

impl OnlineConfig {
    pub fn base(&self) -> Result<BaseKernel, CliError> {
        BaseKernel::rbf(self.width).map_err(|e| CliError::core("online.width", e))
    }

    pub fn kernel(&self) -> Result<RecursiveKernelConfig, CliError> {
        RecursiveKernelConfig::new(self.base()?, self.taps, self.mu, self.embed_len)
            .map_err(|e| CliError::core("online kernel", e))
    }

    pub fn options(&self) -> Result<OnlineOptions, CliError> {
        let combiner_input = match self.combiner_input.as_str() {
            "post-update" => CombinerInput::PostUpdate,
            "pre-update" => CombinerInput::PreUpdate,
            other => return Err(CliError::Usage(format!("unknown online.combiner_input `{other}`"))),
        };
        Ok(OnlineOptions {
            eval_fraction: self.eval_fraction,
            smoothing: self.smoothing,
            alpha_init: self.alpha_init.clone(),
            combiner_input,
            budget: self.budget,
        })
    }

    pub fn validate_models(&self) -> Result<(), CliError> {
        if self.models.is_empty() {
            return Err(CliError::Usage("online.models is empty".into()));
        }
        match self.models.iter().find(|m| !matches!(m.as_str(), "klms" | "rmk-klms")) {
            Some(m) => Err(CliError::Usage(format!("unknown online model `{m}`"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Series lengths, ascending.
    pub sizes: Vec<usize>,
    pub taps: usize,
    pub mu: f64,
    pub width: f64,
    pub repetitions: usize,
    pub warmup: bool,
    /// Largest tolerated entrywise difference between the two evaluators.
    pub tolerance: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![256, 512, 1024, 2048],
            taps: 5,
            mu: 0.5,
            width: 1.0,
            repetitions: 5,
            warmup: true,
            tolerance: 1e-9,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config { path: path.to_owned(), reason: e.to_string() })?;
        Self::from_toml(&text).map_err(|reason| CliError::Config { path: path.to_owned(), reason })
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
