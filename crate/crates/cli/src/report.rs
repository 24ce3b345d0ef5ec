use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use crate::args::{Globals, ReportArgs};
use crate::error::{CliError, Result};
use crate::files;

#[derive(Debug, Clone)]
pub struct ReportJob {
    pub analysis: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl ReportJob {
    /// Explicit paths must exist; defaults are used only when present.
    pub fn resolve(args: ReportArgs, globals: &Globals) -> Result<Self> {
        let pick = |given: Option<PathBuf>, default: &str| -> Result<Option<PathBuf>> {
            match given {
                Some(p) if p.is_file() => Ok(Some(p)),
                Some(p) => Err(CliError::Data(format!("{}: no such file", p.display()))),
                None => Ok(Some(globals.out_dir.join(default)).filter(|p| p.is_file())),
            }
        };
        let analysis = pick(args.analysis, "analysis.csv")?;
        let summary = pick(args.summary, "summary.csv")?;
        if analysis.is_none() && summary.is_none() {
            return Err(CliError::Data("nothing to report: no analysis.csv or summary.csv".into()));
        }
        Ok(Self { analysis, summary, out_dir: globals.out_dir.clone() })
    }
}

/// A table read with its header.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let header = r.headers().map_err(CliError::data)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(Self { header, rows })
    }

    /// The named columns of every row.
    fn select(&self, names: &[&str], path: &Path) -> Result<Vec<Vec<String>>> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.header
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| CliError::Data(format!("{}: missing column {n}", path.display())))
            })
            .collect::<Result<_>>()?;
        Ok(self.rows.iter().map(|row| idx.iter().map(|&i| row[i].clone()).collect()).collect())
    }
}

fn plot(name: &str, file: &str, kind: &str, x: &str, y: &[&str], group: &[&str]) -> Value {
    json!({ "name": name, "file": file, "kind": kind, "x": x, "y": y, "group": group })
}

/// Writes plot-ready tables under `plots/` and a manifest describing them.
/// Returns the written file names, relative to the output directory.
pub fn run(job: &ReportJob) -> Result<Vec<String>> {
    let mut plots = Vec::new();
    let mut written = Vec::new();
    let mut emit = |file: &str, header: &[&str], rows: &[Vec<String>]| -> Result<()> {
        files::write_bytes(&job.out_dir.join(file), &files::csv_bytes(header, rows)?)?;
        written.push(file.to_string());
        Ok(())
    };

    if let Some(path) = &job.analysis {
        let cols = ["family", "gamma", "delta", "x_size", "lambda", "mu", "alpha_lower", "rho", "bound_value", "inconsistent"];
        let rows = Table::read(path)?.select(&cols, path)?;
        emit("plots/cooccurrence_vs_delta.csv", &cols, &rows)?;
        plots.push(plot("mu_vs_delta", "plots/cooccurrence_vs_delta.csv", "line", "delta", &["mu", "lambda"], &["family"]));
        plots.push(plot("bound_vs_delta", "plots/cooccurrence_vs_delta.csv", "line", "delta", &["bound_value"], &["family"]));
    }

    if let Some(path) = &job.summary {
        let table = Table::read(path)?;
        let cols = ["style_ratio", "family", "gamma", "knn_acc", "probe_acc", "invariance_median", "separability_median"];
        emit("plots/accuracy_vs_style.csv", &cols, &table.select(&cols, path)?)?;
        plots.push(plot(
            "accuracy_vs_style",
            "plots/accuracy_vs_style.csv",
            "line",
            "style_ratio",
            &["knn_acc", "probe_acc"],
            &["family", "gamma"],
        ));

        let base = path.parent().unwrap_or(Path::new("."));
        let mut points = Vec::new();
        for row in table.select(&["style_ratio", "family", "gamma", "score_file"], path)? {
            let score_path = base.join(&row[3]);
            let scores = Table::read(&score_path)?;
            for s in scores.select(&["id", "label", "invariance", "separability"], &score_path)? {
                points.push(row[..3].iter().chain(&s).cloned().collect());
            }
        }
        let cols = ["style_ratio", "family", "gamma", "id", "label", "invariance", "separability"];
        emit("plots/invariance_separability.csv", &cols, &points)?;
        plots.push(plot(
            "invariance_vs_separability",
            "plots/invariance_separability.csv",
            "density",
            "invariance",
            &["separability"],
            &["style_ratio", "family", "gamma"],
        ));
    }

    let manifest = json!({ "plots": plots });
    let text = serde_json::to_string_pretty(&manifest).map_err(CliError::data)? + "\n";
    files::write_bytes(&job.out_dir.join("plots.json"), text.as_bytes())?;
    written.push("plots.json".into());
    Ok(written)
}
