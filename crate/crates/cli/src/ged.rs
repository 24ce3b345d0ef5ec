use datalab_core::ged::{
    ged_exact_with_limit, ged_within_with, CostModel, Decision, DEFAULT_EXPANSION_BUDGET, EXACT_SIZE_LIMIT,
};
use datalab_core::{io, AttributedGraph};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::args::GedArgs;
use crate::error::{CliError, Result};
use crate::files;

#[derive(Debug, Clone)]
pub struct GedJob {
    pub first: PathBuf,
    pub second: PathBuf,
    pub threshold: Option<f64>,
    pub size_limit: usize,
    pub budget: usize,
}

impl GedJob {
    pub fn resolve(args: GedArgs) -> Result<Self> {
        if let Some(t) = args.threshold.filter(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Usage(format!("--threshold {t} must be nonnegative")));
        }
        Ok(Self {
            first: args.first,
            second: args.second,
            threshold: args.threshold,
            size_limit: args.size_limit.unwrap_or(EXACT_SIZE_LIMIT),
            budget: args.budget.unwrap_or(DEFAULT_EXPANSION_BUDGET),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GedOutput {
    Distance(f64),
    Decision(Decision),
}

impl fmt::Display for GedOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GedOutput::Distance(d) => write!(f, "{d}"),
            GedOutput::Decision(Decision::Within) => write!(f, "within"),
            GedOutput::Decision(Decision::Beyond) => write!(f, "beyond"),
            GedOutput::Decision(Decision::Unknown) => write!(f, "unknown"),
        }
    }
}

/// Reads a file holding exactly one graph record.
pub fn read_graph(path: &Path) -> Result<AttributedGraph> {
    let text = files::read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: expected one graph record: {e}", path.display())))?;
    io::from_value(&value).map(|g| g.graph).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn run(job: &GedJob) -> Result<GedOutput> {
    let (g1, g2) = (read_graph(&job.first)?, read_graph(&job.second)?);
    let cost = CostModel::default();
    match job.threshold {
        Some(t) => Ok(GedOutput::Decision(ged_within_with(&g1, &g2, t, &cost, job.size_limit, job.budget))),
        None => {
            let nodes = g1.node_count().max(g2.node_count());
            if nodes > job.size_limit {
                return Err(CliError::Infeasible(format!(
                    "a graph has {nodes} nodes, above the exact limit of {}; pass --threshold for a bounded decision",
                    job.size_limit
                )));
            }
            ged_exact_with_limit(&g1, &g2, &cost, job.size_limit)
                .map(|r| GedOutput::Distance(r.distance))
                .map_err(CliError::data)
        }
    }
}
