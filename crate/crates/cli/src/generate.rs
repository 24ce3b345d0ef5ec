use datalab_core::synthgen::{default_motifs, generate_dataset, Dataset, GenError, GenerationConfig};
use datalab_core::{io, seed};
use serde_json::json;
use std::path::PathBuf;

use crate::args::{GenerateArgs, Globals};
use crate::error::{CliError, Result};
use crate::files;

#[derive(Debug, Clone)]
pub struct GenerateJob {
    pub config: GenerationConfig,
    pub out: PathBuf,
    pub seed: u64,
}

/// Builds a generation config from merged options. Nonsensical numbers are
/// usage errors; a bad motif file is a data error.
pub fn generation_config(args: &GenerateArgs, master_seed: u64) -> Result<GenerationConfig> {
    let d = GenerationConfig::default();
    let mut motifs = match &args.motifs {
        Some(path) => files::read_dataset(path)?.into_iter().map(|s| s.graph).collect(),
        None => default_motifs(),
    };
    let classes = args.classes.unwrap_or(motifs.len());
    if classes == 0 || classes > motifs.len() {
        return Err(CliError::Usage(format!("--classes {classes} needs between 1 and {} motifs", motifs.len())));
    }
    motifs.truncate(classes);
    let style_ratio = args.style_ratio.unwrap_or(d.style_ratio);
    if !(style_ratio.is_finite() && style_ratio >= 0.0) {
        return Err(CliError::Usage(format!("--style-ratio {style_ratio} must be a nonnegative number")));
    }
    let config = GenerationConfig {
        motifs,
        samples_per_class: args.per_class.unwrap_or(d.samples_per_class),
        style_ratio,
        motif_copies_range: (
            args.copies_min.unwrap_or(d.motif_copies_range.0),
            args.copies_max.unwrap_or(d.motif_copies_range.1),
        ),
        background_jitter: args.jitter.unwrap_or(d.background_jitter),
        edge_noise_fraction: args.edge_noise.unwrap_or(d.edge_noise_fraction),
        feature_dim: args.feature_dim.unwrap_or(d.feature_dim),
        master_seed,
    };
    config.validate().map_err(gen_error)?;
    Ok(config)
}

fn gen_error(e: GenError) -> CliError {
    match e {
        GenError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

impl GenerateJob {
    pub fn resolve(args: GenerateArgs, globals: &Globals) -> Result<Self> {
        let config = generation_config(&args, seed::derive_named(globals.seed, "generate"))?;
        let out = args.out.unwrap_or_else(|| globals.out_dir.join("dataset.jsonl"));
        Ok(Self { config, out, seed: globals.seed })
    }
}

/// Generates the dataset, writes it as JSONL and writes the sidecar config.
pub fn run(job: &GenerateJob) -> Result<Dataset> {
    let dataset = generate_dataset(&job.config).map_err(gen_error)?;
    files::write_bytes(&job.out, io::write_jsonl(&dataset.samples).as_bytes())?;
    let sidecar = json!({ "seed": job.seed, "generation": job.config.to_json() });
    let text = serde_json::to_string_pretty(&sidecar).map_err(CliError::data)? + "\n";
    files::write_bytes(&files::sidecar_path(&job.out), text.as_bytes())?;
    Ok(dataset)
}
