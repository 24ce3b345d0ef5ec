use datalab_core::augment::{AugmentationSpec, Family};
use datalab_core::metrics::{
    knn_evaluate, linear_probe, stratified_split, ProbeConfig, ScoreTable, DEFAULT_AUGMENTATIONS, DEFAULT_K_GRID,
};
use datalab_core::pag::{build_pag, IdentityPolicy, ProbabilityMode};
use datalab_core::spectral::{fit_linear_spectral, WlFeatureMap, DEFAULT_FEATURES, DEFAULT_RIDGE, DEFAULT_WL_ROUNDS};
use datalab_core::synthgen::{generate_dataset, GenerationConfig};
use datalab_core::{seed, LabeledGraph};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use crate::args::{EmbedEvalArgs, GenerateArgs, Globals};
use crate::error::{CliError, Result};
use crate::files;
use crate::generate::generation_config;

/// Augmentations drawn per parent for the augmentation graph.
pub const DEFAULT_PAG_SAMPLES: usize = 20;

#[derive(Debug, Clone)]
pub enum DatasetSource {
    File(PathBuf),
    /// One generated dataset per style ratio; the config's own ratio is replaced.
    Generated { config: GenerationConfig, style_ratios: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct EvalJob {
    pub source: DatasetSource,
    pub families: Vec<Family>,
    pub gammas: Vec<f64>,
    /// `None` means twice the class count.
    pub k: Option<usize>,
    pub pag_samples: usize,
    pub wl_rounds: usize,
    pub features: usize,
    pub ridge: f64,
    pub augmentations: usize,
    pub k_grid: Vec<usize>,
    pub probe: ProbeConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl EvalJob {
    /// `gen` carries the generation options used when no dataset is given.
    pub fn resolve(args: EmbedEvalArgs, gen: GenerateArgs, globals: &Globals) -> Result<Self> {
        let source = match args.dataset {
            Some(path) => DatasetSource::File(path),
            None => {
                let style_ratios = args.style_ratios.unwrap_or_else(|| vec![gen.style_ratio.unwrap_or(1.0)]);
                if style_ratios.is_empty() {
                    return Err(CliError::Usage("empty style ratio list".into()));
                }
                let config = generation_config(&gen, seed::derive_named(globals.seed, "generate"))?;
                for &ratio in &style_ratios {
                    GenerationConfig { style_ratio: ratio, ..config.clone() }
                        .validate()
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                }
                DatasetSource::Generated { config, style_ratios }
            }
        };
        let families = files::parse_families(
            &args.families.unwrap_or_else(|| vec!["content_aware_edge_drop".into(), "edge_perturb".into()]),
        )?;
        let eval_seed = seed::derive_named(globals.seed, "eval");
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(CliError::Usage(format!("--{name} must be at least 1")))
            } else {
                Ok(v)
            }
        };
        let ridge = args.ridge.unwrap_or(DEFAULT_RIDGE);
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(CliError::Usage(format!("--ridge {ridge} must be nonnegative")));
        }
        Ok(Self {
            source,
            families,
            gammas: files::parse_gammas(&args.gammas.unwrap_or_else(|| vec![0.2]))?,
            k: args.k.map(|k| positive("k", k)).transpose()?,
            pag_samples: positive("samples", args.samples.unwrap_or(DEFAULT_PAG_SAMPLES))?,
            wl_rounds: args.wl_rounds.unwrap_or(DEFAULT_WL_ROUNDS),
            features: positive("features", args.features.unwrap_or(DEFAULT_FEATURES))?,
            ridge,
            augmentations: positive("augmentations", args.augmentations.unwrap_or(DEFAULT_AUGMENTATIONS))?,
            k_grid: args.k_grid.unwrap_or_else(|| DEFAULT_K_GRID.to_vec()),
            probe: ProbeConfig {
                epochs: args.probe_epochs.unwrap_or(ProbeConfig::default().epochs),
                lr: args.probe_lr.unwrap_or(ProbeConfig::default().lr),
                seed: seed::derive_named(eval_seed, "probe"),
            },
            out_dir: globals.out_dir.clone(),
            seed: eval_seed,
        })
    }
}

/// One evaluated combination of style ratio, family and strength.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// `None` when a dataset file without a sidecar was evaluated.
    pub style_ratio: Option<f64>,
    pub family: Family,
    pub gamma: f64,
    pub x_size: usize,
    pub k: usize,
    pub knn_acc: f64,
    pub chosen_k: usize,
    pub probe_acc: f64,
    pub invariance_median: f64,
    pub invariance_q25: f64,
    pub invariance_q75: f64,
    pub separability_median: f64,
    pub separability_q25: f64,
    pub separability_q75: f64,
    pub embedding_file: String,
    pub score_file: String,
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "style_ratio",
    "family",
    "gamma",
    "x_size",
    "k",
    "knn_acc",
    "chosen_k",
    "probe_acc",
    "invariance_median",
    "invariance_q25",
    "invariance_q75",
    "separability_median",
    "separability_q25",
    "separability_q75",
    "embedding_file",
    "score_file",
];

impl SummaryRow {
    fn csv(&self) -> Vec<String> {
        vec![
            self.style_ratio.map_or(String::new(), |r| r.to_string()),
            self.family.name().into(),
            self.gamma.to_string(),
            self.x_size.to_string(),
            self.k.to_string(),
            self.knn_acc.to_string(),
            self.chosen_k.to_string(),
            self.probe_acc.to_string(),
            self.invariance_median.to_string(),
            self.invariance_q25.to_string(),
            self.invariance_q75.to_string(),
            self.separability_median.to_string(),
            self.separability_q25.to_string(),
            self.separability_q75.to_string(),
            self.embedding_file.clone(),
            self.score_file.clone(),
        ]
    }

    fn json(&self) -> Value {
        json!({
            "style_ratio": self.style_ratio,
            "family": self.family.name(),
            "gamma": self.gamma,
            "x_size": self.x_size,
            "k": self.k,
            "knn_acc": self.knn_acc,
            "chosen_k": self.chosen_k,
            "probe_acc": self.probe_acc,
            "invariance_median": self.invariance_median,
            "separability_median": self.separability_median,
            "embedding_file": self.embedding_file,
            "score_file": self.score_file,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
}

fn datasets(source: &DatasetSource) -> Result<Vec<(Option<f64>, Vec<LabeledGraph>)>> {
    match source {
        DatasetSource::File(path) => {
            let samples = files::read_dataset(path)?;
            let sidecar = files::sidecar_path(path);
            let ratio = match std::fs::read_to_string(&sidecar) {
                Ok(text) => serde_json::from_str::<Value>(&text)
                    .ok()
                    .and_then(|v| v.pointer("/generation/style_ratio").and_then(Value::as_f64)),
                Err(_) => None,
            };
            Ok(vec![(ratio, samples)])
        }
        DatasetSource::Generated { config, style_ratios } => style_ratios
            .iter()
            .map(|&ratio| {
                let cfg = GenerationConfig { style_ratio: ratio, ..config.clone() };
                generate_dataset(&cfg).map(|d| (Some(ratio), d.samples)).map_err(CliError::data)
            })
            .collect(),
    }
}

fn tag(ratio: Option<f64>, family: Family, gamma: f64) -> String {
    let r = ratio.map_or("file".to_string(), |r| format!("s{r}"));
    format!("{r}_{}_g{gamma}", family.name())
}

/// Fits and evaluates one combination, writing its embedding and score files.
fn evaluate_one(
    job: &EvalJob,
    ratio: Option<f64>,
    samples: &[LabeledGraph],
    spec: &AugmentationSpec,
    k: usize,
    row_seed: u64,
) -> Result<SummaryRow> {
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let pag = build_pag(
        samples,
        spec,
        ProbabilityMode::Sampled { k: job.pag_samples },
        seed::derive_named(row_seed, "pag"),
        IdentityPolicy::Labeled,
    )
    .map_err(CliError::data)?;
    let map = WlFeatureMap::fit(pag.vertices.iter().map(|v| &v.graph), job.wl_rounds, job.features);
    if k > map.dim() {
        return Err(CliError::Usage(format!("k = {k} exceeds the {} available features", map.dim())));
    }
    let model = fit_linear_spectral(&pag, map, k, job.ridge).map_err(CliError::data)?;
    let embedding = model.embed_all(samples.iter().map(|s| &s.graph).collect::<Vec<_>>());
    let split = stratified_split(&labels, 0.8, 0.1, seed::derive_named(row_seed, "split"));
    let knn = knn_evaluate(&embedding, &labels, &split, &job.k_grid).map_err(CliError::data)?;
    let probe = linear_probe(&embedding, &labels, &split, &job.probe).map_err(CliError::data)?;
    let scores = ScoreTable::compute(
        samples,
        |g| model.embed(g),
        job.augmentations,
        spec,
        seed::derive_named(row_seed, "invariance"),
    )
    .map_err(CliError::data)?;

    let name = tag(ratio, spec.family, spec.gamma);
    let embedding_file = format!("embeddings/{name}.csv");
    let mut csv = Vec::new();
    embedding.write_csv(&mut csv).map_err(CliError::data)?;
    files::write_bytes(&job.out_dir.join(&embedding_file), &csv)?;
    let mut bin = Vec::new();
    embedding.write_binary(&mut bin).map_err(CliError::data)?;
    files::write_bytes(&job.out_dir.join(format!("embeddings/{name}.bin")), &bin)?;
    let score_file = format!("scores/{name}.csv");
    let mut sc = Vec::new();
    scores.write_csv(&mut sc).map_err(CliError::data)?;
    files::write_bytes(&job.out_dir.join(&score_file), &sc)?;

    let (inv, sep) = (scores.invariance(), scores.separability());
    Ok(SummaryRow {
        style_ratio: ratio,
        family: spec.family,
        gamma: spec.gamma,
        x_size: pag.len(),
        k,
        knn_acc: knn.accuracy,
        chosen_k: knn.chosen_k,
        probe_acc: probe.accuracy,
        invariance_median: inv.median,
        invariance_q25: inv.q25,
        invariance_q75: inv.q75,
        separability_median: sep.median,
        separability_q25: sep.q25,
        separability_q75: sep.q75,
        embedding_file,
        score_file,
    })
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    files::csv_bytes(&SUMMARY_HEADER, &rows.iter().map(SummaryRow::csv).collect::<Vec<_>>())
}

pub fn summary_json(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let v = Value::Array(rows.iter().map(SummaryRow::json).collect());
    Ok((serde_json::to_string_pretty(&v).map_err(CliError::data)? + "\n").into_bytes())
}

/// Runs every combination and writes `summary.csv` and `summary.json`
/// alongside per-row embedding and score files.
pub fn run(job: &EvalJob) -> Result<EvalOutcome> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (di, (ratio, samples)) in datasets(&job.source)?.into_iter().enumerate() {
        let r = samples.iter().map(|s| s.label).max().map_or(0, |m| m + 1);
        let k = job.k.unwrap_or(2 * r);
        let warning = format!("k = {k} is below twice the class count ({}); using it as given", 2 * r);
        if k < 2 * r && !warnings.contains(&warning) {
            warnings.push(warning);
        }
        for (fi, &family) in job.families.iter().enumerate() {
            for (gi, &gamma) in job.gammas.iter().enumerate() {
                let spec = AugmentationSpec::new(family, gamma).map_err(|e| CliError::Usage(e.to_string()))?;
                let row_seed = seed::derive(seed::derive(seed::derive(job.seed, di as u64), fi as u64), gi as u64);
                rows.push(evaluate_one(job, ratio, &samples, &spec, k, row_seed)?);
            }
        }
    }
    write_summaries(&job.out_dir, &rows)?;
    Ok(EvalOutcome { rows, warnings })
}

fn write_summaries(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    files::write_bytes(&dir.join("summary.csv"), &summary_csv(rows)?)?;
    files::write_bytes(&dir.join("summary.json"), &summary_json(rows)?)
}
