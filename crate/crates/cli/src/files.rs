use datalab_core::augment::Family;
use datalab_core::{io, LabeledGraph};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes `bytes`, creating parent directories first.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledGraph>> {
    let samples = io::read_jsonl(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if samples.is_empty() {
        return Err(CliError::Data(format!("{}: no samples", path.display())));
    }
    Ok(samples)
}

/// `dataset.jsonl` -> `dataset.config.json`.
pub fn sidecar_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("config.json")
}

pub fn parse_families(names: &[String]) -> Result<Vec<Family>> {
    if names.is_empty() {
        return Err(CliError::Usage("empty family list".into()));
    }
    names
        .iter()
        .map(|n| {
            Family::parse(n.trim()).ok_or_else(|| {
                let known: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
                CliError::Usage(format!("unknown family {n}; expected one of {}", known.join(", ")))
            })
        })
        .collect()
}

/// Strengths sorted ascending without duplicates.
pub fn parse_gammas(gammas: &[f64]) -> Result<Vec<f64>> {
    if gammas.is_empty() {
        return Err(CliError::Usage("empty strength list".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(CliError::Usage(format!("strength {g} outside [0, 1]")));
    }
    let mut out = gammas.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// `0.1, 0.2, ..., 0.6`.
pub fn default_gammas() -> Vec<f64> {
    (1..=6).map(|i| i as f64 / 10.0).collect()
}

/// Header plus rows, comma separated.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(CliError::data)?;
    for row in rows {
        w.write_record(row).map_err(CliError::data)?;
    }
    w.into_inner().map_err(CliError::data)
}

pub fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}
