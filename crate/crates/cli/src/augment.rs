use datalab_core::augment::{apply, augmentation_seed, AugmentationRecord, AugmentationSpec};
use datalab_core::seed;
use rayon::prelude::*;
use std::path::PathBuf;

use crate::args::{AugmentArgs, Globals};
use crate::error::{CliError, Result};
use crate::files;

#[derive(Debug, Clone)]
pub struct AugmentJob {
    pub dataset: PathBuf,
    pub specs: Vec<AugmentationSpec>,
    pub per_sample: usize,
    pub out: PathBuf,
    pub seed: u64,
}

impl AugmentJob {
    pub fn resolve(args: AugmentArgs, globals: &Globals) -> Result<Self> {
        let families = files::parse_families(&args.families.unwrap_or_else(|| vec!["node_drop".into()]))?;
        let gammas = files::parse_gammas(&args.gammas.unwrap_or_else(|| vec![0.2]))?;
        let specs = families
            .iter()
            .flat_map(|&f| gammas.iter().map(move |&g| AugmentationSpec::new(f, g)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Self {
            dataset: args.dataset.unwrap_or_else(|| globals.out_dir.join("dataset.jsonl")),
            specs,
            per_sample: args.per_sample.unwrap_or(1),
            out: args.out.unwrap_or_else(|| globals.out_dir.join("augmentations.jsonl")),
            seed: seed::derive_named(globals.seed, "augment"),
        })
    }
}

/// Draws `per_sample` augmentations of every sample under every spec and
/// writes them as JSONL, ordered by spec, then sample, then draw.
pub fn run(job: &AugmentJob) -> Result<Vec<AugmentationRecord>> {
    let samples = files::read_dataset(&job.dataset)?;
    let mut records = Vec::new();
    for (si, spec) in job.specs.iter().enumerate() {
        let spec_seed = seed::derive(job.seed, si as u64);
        let batch: Vec<AugmentationRecord> = samples
            .par_iter()
            .map(|s| {
                (0..job.per_sample)
                    .map(|i| {
                        apply(s, spec, augmentation_seed(spec_seed, s.id(), spec.family, i))
                            .map_err(|e| CliError::Data(format!("{}: {e}", s.id())))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        records.extend(batch);
    }
    let mut text = String::new();
    for r in &records {
        text += &serde_json::to_string(&r.to_value()).map_err(CliError::data)?;
        text.push('\n');
    }
    files::write_bytes(&job.out, text.as_bytes())?;
    Ok(records)
}
