//! Series and dataset files.
//!
//! A dataset file is a CSV with columns `input,target` and, for tasks whose
//! training targets are noisy, a third column `clean_target`. Its split
//! boundaries live in a sidecar `<stem>.meta.toml` next to it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rmk_core::datasets::{SeriesDataset, SplitSizes};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("{path}: malformed CSV: {source}")]
    Malformed { path: PathBuf, source: csv::Error },
    #[error("{path}: no column named `{column}` (found: {found})")]
    MissingColumn { path: PathBuf, column: String, found: String },
    #[error("{path}: {count} columns and none selected; set `column`")]
    AmbiguousColumn { path: PathBuf, count: usize },
    #[error("{path}, line {line}: `{value}` is not a number")]
    Parse { path: PathBuf, line: u64, value: String },
    #[error("{path}, line {line}: value is not finite")]
    NonFinite { path: PathBuf, line: u64 },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("{path}: metadata sidecar {reason}")]
    Meta { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Inconsistent { path: PathBuf, reason: String },
}

/// Reads one numeric column of a CSV file with a header row. With `column`
/// unset the file must have exactly one column.
pub fn load_csv_series(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CsvError> {
    let columns = load_columns(path)?;
    let index = match column {
        Some(name) => columns.names.iter().position(|c| c == name).ok_or_else(|| CsvError::MissingColumn {
            path: path.to_owned(),
            column: name.to_owned(),
            found: columns.names.join(", "),
        })?,
        None if columns.names.len() == 1 => 0,
        None => return Err(CsvError::AmbiguousColumn { path: path.to_owned(), count: columns.names.len() }),
    };
    Ok(columns.values.into_iter().nth(index).unwrap_or_default())
}

struct Columns {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

fn load_columns(path: &Path) -> Result<Columns, CsvError> {
    let file = fs::File::open(path).map_err(|source| CsvError::Open { path: path.to_owned(), source })?;
    let malformed = |source| CsvError::Malformed { path: path.to_owned(), source };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let names: Vec<String> = reader.headers().map_err(malformed)?.iter().map(str::to_owned).collect();
    let mut values = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(malformed)?;
        let line = record.position().map_or(0, |p| p.line());
        for (field, out) in record.iter().zip(values.iter_mut()) {
            let v: f64 = field.parse().map_err(|_| CsvError::Parse {
                path: path.to_owned(),
                line,
                value: field.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(CsvError::NonFinite { path: path.to_owned(), line });
            }
            out.push(v);
        }
    }
    if values.first().is_none_or(Vec::is_empty) {
        return Err(CsvError::Empty { path: path.to_owned() });
    }
    Ok(Columns { names, values })
}

/// Contents of the sidecar written next to every dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub name: String,
    pub task: Option<String>,
    pub seed: Option<u64>,
    pub horizon: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.toml")
}

fn fmt(v: f64) -> String {
    // `Display` for f64 prints the shortest string that parses back exactly.
    format!("{v}")
}

pub fn write_dataset(path: &Path, ds: &SeriesDataset, meta: &DatasetMeta) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    match &ds.clean_targets {
        Some(clean) => {
            w.write_record(["input", "target", "clean_target"])?;
            for ((x, y), c) in ds.inputs.iter().zip(&ds.targets).zip(clean) {
                w.write_record([fmt(*x), fmt(*y), fmt(*c)])?;
            }
        }
        None => {
            w.write_record(["input", "target"])?;
            for (x, y) in ds.inputs.iter().zip(&ds.targets) {
                w.write_record([fmt(*x), fmt(*y)])?;
            }
        }
    }
    w.flush()?;
    let text = toml::to_string(meta).map_err(io::Error::other)?;
    fs::write(sidecar_path(path), text)
}

/// Loads a dataset file and its sidecar.
pub fn load_dataset(path: &Path) -> Result<(SeriesDataset, DatasetMeta), CsvError> {
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path)
        .map_err(|e| CsvError::Meta { path: meta_path.clone(), reason: format!("unreadable: {e}") })?;
    let meta: DatasetMeta =
        toml::from_str(&text).map_err(|e| CsvError::Meta { path: meta_path.clone(), reason: e.to_string() })?;
    let mut columns = load_columns(path)?;
    let take = |columns: &mut Columns, name: &str| -> Result<Option<Vec<f64>>, CsvError> {
        Ok(columns.names.iter().position(|c| c == name).map(|i| std::mem::take(&mut columns.values[i])))
    };
    let missing = |column: &str| CsvError::MissingColumn {
        path: path.to_owned(),
        column: column.to_owned(),
        found: String::new(),
    };
    let inputs = take(&mut columns, "input")?.ok_or_else(|| missing("input"))?;
    let targets = take(&mut columns, "target")?.ok_or_else(|| missing("target"))?;
    let clean = take(&mut columns, "clean_target")?;
    let split = SplitSizes::new(meta.train, meta.validation, meta.test);
    if split.total() != inputs.len() {
        return Err(CsvError::Inconsistent {
            path: path.to_owned(),
            reason: format!("sidecar splits sum to {} but the file has {} rows", split.total(), inputs.len()),
        });
    }
    let inconsistent = |e: rmk_core::Error| CsvError::Inconsistent { path: path.to_owned(), reason: e.to_string() };
    let mut ds = SeriesDataset::new(meta.name.clone(), inputs, targets, split, meta.horizon).map_err(inconsistent)?;
    if let Some(clean) = clean {
        ds = ds.with_clean_targets(clean).map_err(inconsistent)?;
    }
    Ok((ds, meta))
}
