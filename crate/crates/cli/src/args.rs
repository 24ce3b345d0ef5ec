use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Declares an options struct whose fields are all optional, plus `overlay`,
/// which keeps set fields and fills unset ones from a lower-priority source.
macro_rules! options {
    (
        $(#[$m:meta])*
        pub struct $name:ident {
            $( $(#[$fm:meta])* pub $f:ident : Option<$t:ty>, )*
        }
    ) => {
        $(#[$m])*
        pub struct $name {
            $( $(#[$fm])* pub $f: Option<$t>, )*
        }

        impl $name {
            pub fn overlay(self, lower: Self) -> Self {
                Self { $( $f: self.$f.or(lower.$f), )* }
            }
        }
    };
}

#[derive(Debug, Parser)]
#[command(name = "gcl-datalab", version, about = "Synthetic graph benchmarks, augmentation analysis and spectral evaluation")]
pub struct Cli {
    /// Master seed; every command derives named sub-seeds from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (falls back to GCL_DATALAB_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for all outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON file with global keys and one section per command; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic motif dataset.
    Generate(GenerateArgs),
    /// Draw augmentations of every sample in a dataset.
    Augment(AugmentArgs),
    /// Sweep augmentation strengths and report co-occurrence statistics.
    Analyze(AnalyzeArgs),
    /// Fit spectral embeddings and evaluate them across style ratios.
    EmbedEval(EmbedEvalCommand),
    /// Graph edit distance between two single-graph files.
    Ged(GedArgs),
    /// Turn analysis and evaluation outputs into plot-ready tables.
    Report(ReportArgs),
}

options! {
    #[derive(Debug, Clone, Default, Args, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct GenerateArgs {
        /// Number of classes, taken from the front of the motif list.
        #[arg(long)]
        pub classes: Option<usize>,
        /// Samples per class.
        #[arg(long)]
        pub per_class: Option<usize>,
        /// Background size relative to total motif size.
        #[arg(long, allow_hyphen_values = true)]
        pub style_ratio: Option<f64>,
        /// Fewest motif copies per sample.
        #[arg(long)]
        pub copies_min: Option<usize>,
        /// Most motif copies per sample.
        #[arg(long)]
        pub copies_max: Option<usize>,
        /// Background size varies by up to this many nodes either way.
        #[arg(long)]
        pub jitter: Option<usize>,
        /// Largest fraction of background edges rewired.
        #[arg(long)]
        pub edge_noise: Option<f64>,
        /// Node attribute length.
        #[arg(long)]
        pub feature_dim: Option<usize>,
        /// JSONL file of motif graphs replacing the default six.
        #[arg(long)]
        pub motifs: Option<PathBuf>,
        /// Dataset path (default `<out-dir>/dataset.jsonl`).
        #[arg(long)]
        pub out: Option<PathBuf>,
    }
}

options! {
    #[derive(Debug, Clone, Default, Args, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct AugmentArgs {
        /// Input dataset (default `<out-dir>/dataset.jsonl`).
        #[arg(long)]
        pub dataset: Option<PathBuf>,
        /// Augmentation families, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub families: Option<Vec<String>>,
        /// Strengths, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub gammas: Option<Vec<f64>>,
        /// Augmentations drawn per sample, family and strength.
        #[arg(long)]
        pub per_sample: Option<usize>,
        /// Output JSONL (default `<out-dir>/augmentations.jsonl`).
        #[arg(long)]
        pub out: Option<PathBuf>,
    }
}

options! {
    #[derive(Debug, Clone, Default, Args, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct AnalyzeArgs {
        /// Input dataset (default `<out-dir>/dataset.jsonl`).
        #[arg(long)]
        pub dataset: Option<PathBuf>,
        /// Augmentation families, comma separated (default all).
        #[arg(long, value_delimiter = ',')]
        pub families: Option<Vec<String>>,
        /// Strengths, comma separated (default 0.1 to 0.6).
        #[arg(long, value_delimiter = ',')]
        pub gammas: Option<Vec<f64>>,
        /// `ged` (edit-distance co-occurrence over a fixed pool) or `provenance`.
        #[arg(long)]
        pub relation: Option<String>,
        /// `exact` (enumerate every augmentation) or `sampled`.
        #[arg(long)]
        pub mode: Option<String>,
        /// Augmentations drawn per parent and strength in sampled mode.
        #[arg(long)]
        pub samples: Option<usize>,
        /// Largest augmentation set enumerated per parent in exact mode.
        #[arg(long)]
        pub exact_cap: Option<u64>,
        /// `labeled` or `isomorphism` vertex identity for the provenance relation.
        #[arg(long)]
        pub identity: Option<String>,
        /// Largest graph given an exact distance; bigger pairs get bounds.
        #[arg(long)]
        pub size_limit: Option<usize>,
        /// Search expansions for bounded distances.
        #[arg(long)]
        pub budget: Option<usize>,
        /// Output CSV (default `<out-dir>/analysis.csv`).
        #[arg(long)]
        pub out: Option<PathBuf>,
    }
}

options! {
    #[derive(Debug, Clone, Default, Args, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct EmbedEvalArgs {
        /// Evaluate this dataset instead of generating one per style ratio.
        #[arg(long)]
        pub dataset: Option<PathBuf>,
        /// Style ratios to generate datasets for, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub style_ratios: Option<Vec<f64>>,
        /// Augmentation families, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub families: Option<Vec<String>>,
        /// Strengths, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub gammas: Option<Vec<f64>>,
        /// Representation dimension (default twice the class count).
        #[arg(long)]
        pub k: Option<usize>,
        /// Augmentations drawn per parent for the augmentation graph.
        #[arg(long)]
        pub samples: Option<usize>,
        /// Weisfeiler-Lehman refinement rounds for the feature map.
        #[arg(long)]
        pub wl_rounds: Option<usize>,
        /// Most frequent subtree features kept.
        #[arg(long)]
        pub features: Option<usize>,
        /// Ridge added to the feature second moment, relative to its mean diagonal.
        #[arg(long)]
        pub ridge: Option<f64>,
        /// Augmentations per sample for invariance scores.
        #[arg(long)]
        pub augmentations: Option<usize>,
        /// Neighbour counts tried on the validation split.
        #[arg(long, value_delimiter = ',')]
        pub k_grid: Option<Vec<usize>>,
        /// Linear probe training epochs.
        #[arg(long)]
        pub probe_epochs: Option<usize>,
        /// Linear probe learning rate.
        #[arg(long)]
        pub probe_lr: Option<f64>,
    }
}

/// Evaluation options plus the generation options used when no dataset is given.
#[derive(Debug, Clone, Args)]
pub struct EmbedEvalCommand {
    #[command(flatten)]
    pub eval: EmbedEvalArgs,
    #[command(flatten)]
    pub generate: GenerateArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GedArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Decide `GED <= threshold` instead of computing the distance.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Largest graph given an exact distance.
    #[arg(long)]
    pub size_limit: Option<usize>,
    /// Search expansions when deciding a threshold on larger graphs.
    #[arg(long)]
    pub budget: Option<usize>,
}

options! {
    #[derive(Debug, Clone, Default, Args, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct ReportArgs {
        /// Analysis CSV (default `<out-dir>/analysis.csv` when present).
        #[arg(long)]
        pub analysis: Option<PathBuf>,
        /// Evaluation summary CSV (default `<out-dir>/summary.csv` when present).
        #[arg(long)]
        pub summary: Option<PathBuf>,
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub generate: GenerateArgs,
    pub augment: AugmentArgs,
    pub analyze: AnalyzeArgs,
    pub embed_eval: EmbedEvalArgs,
    pub report: ReportArgs,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Settings shared by every command after merging flags, file and environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Globals {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
}

pub const THREADS_ENV: &str = "GCL_DATALAB_THREADS";

impl Globals {
    pub fn resolve(cli: &Cli, file: &ConfigFile) -> Result<Self> {
        let env_threads = match std::env::var(THREADS_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={s} is not a thread count")))?,
            ),
            Err(_) => None,
        };
        let threads = cli.threads.or(file.threads).or(env_threads);
        if threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(Self {
            seed: cli.seed.or(file.seed).unwrap_or(0),
            threads,
            out_dir: cli.out_dir.clone().or_else(|| file.out_dir.clone()).unwrap_or_else(|| PathBuf::from(".")),
        })
    }
}
