use datalab_core::augment::{
    allowable_budget, apply, augmentation_seed, count_augmentations_upper_bound, count_augmentations_with,
    enumerate_augmentations, AugmentError, AugmentationSpec, EdgeCounting, Family,
};
use datalab_core::ged::{DEFAULT_EXPANSION_BUDGET, EXACT_SIZE_LIMIT};
use datalab_core::pag::{
    analyze, build_pag, AnalysisReport, GedIntervals, IdentityPolicy, PagError, PartitionAssignment, PartitionSource,
    ProbabilityMode,
};
use datalab_core::{seed, AttributedGraph, LabeledGraph};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use std::path::PathBuf;

use crate::args::{AnalyzeArgs, Globals};
use crate::error::{CliError, Result};
use crate::files;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// Pairs within twice the edit budget over a fixed pool of augmentations.
    Ged,
    /// Pairs sharing a parent in the augmentation graph.
    Provenance,
}

#[derive(Debug, Clone)]
pub struct AnalyzeJob {
    pub dataset: PathBuf,
    pub families: Vec<Family>,
    /// Ascending.
    pub gammas: Vec<f64>,
    pub relation: Relation,
    pub mode: ProbabilityMode,
    pub identity: IdentityPolicy,
    pub size_limit: usize,
    pub budget: usize,
    pub out: PathBuf,
    pub seed: u64,
}

pub const DEFAULT_EXACT_CAP: u64 = 100_000;

impl AnalyzeJob {
    pub fn resolve(args: AnalyzeArgs, globals: &Globals) -> Result<Self> {
        let families = match args.families {
            Some(f) => files::parse_families(&f)?,
            None => Family::ALL.to_vec(),
        };
        let relation = match args.relation.as_deref().unwrap_or("ged") {
            "ged" => Relation::Ged,
            "provenance" => Relation::Provenance,
            other => return Err(CliError::Usage(format!("--relation {other}; expected ged or provenance"))),
        };
        let mode = match args.mode.as_deref().unwrap_or("sampled") {
            "exact" => ProbabilityMode::UniformExact { cap: args.exact_cap.unwrap_or(DEFAULT_EXACT_CAP) },
            "sampled" => {
                let k = args.samples.unwrap_or(1);
                if k == 0 {
                    return Err(CliError::Usage("--samples must be at least 1".into()));
                }
                ProbabilityMode::Sampled { k }
            }
            other => return Err(CliError::Usage(format!("--mode {other}; expected exact or sampled"))),
        };
        let identity = match args.identity.as_deref().unwrap_or("labeled") {
            "labeled" => IdentityPolicy::Labeled,
            "isomorphism" => IdentityPolicy::Isomorphism,
            other => return Err(CliError::Usage(format!("--identity {other}; expected labeled or isomorphism"))),
        };
        Ok(Self {
            dataset: args.dataset.unwrap_or_else(|| globals.out_dir.join("dataset.jsonl")),
            families,
            gammas: files::parse_gammas(&args.gammas.unwrap_or_else(files::default_gammas))?,
            relation,
            mode,
            identity,
            size_limit: args.size_limit.unwrap_or(EXACT_SIZE_LIMIT),
            budget: args.budget.unwrap_or(DEFAULT_EXPANSION_BUDGET),
            out: args.out.unwrap_or_else(|| globals.out_dir.join("analysis.csv")),
            seed: seed::derive_named(globals.seed, "analyze"),
        })
    }
}

/// One row of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub family: Family,
    pub gamma: f64,
    /// Smallest and largest per-parent edit budget.
    pub delta_min: usize,
    pub delta_max: usize,
    /// Size of the full augmentation population, summed over parents.
    pub x_population: f64,
    /// Pairs whose status rests on shared parentage because the distance
    /// search was inconclusive.
    pub undecided: usize,
    pub report: AnalysisReport,
}

pub const CSV_HEADER: [&str; 19] = [
    "family",
    "gamma",
    "delta",
    "delta_min",
    "x_size",
    "x_population",
    "lambda",
    "mu",
    "alpha_lower",
    "alpha_clamped",
    "phi",
    "rho",
    "rho_max",
    "conductance",
    "zero_degree_partitions",
    "bound_value",
    "inconsistent",
    "undecided",
    "r",
];

impl AnalysisRow {
    fn csv(&self, r: usize) -> Vec<String> {
        let rep = &self.report;
        vec![
            self.family.name().to_string(),
            self.gamma.to_string(),
            self.delta_max.to_string(),
            self.delta_min.to_string(),
            rep.x_size.to_string(),
            self.x_population.to_string(),
            rep.lambda.to_string(),
            rep.mu.to_string(),
            rep.alpha_lower.to_string(),
            rep.alpha_clamped.to_string(),
            files::join(&rep.phi),
            rep.rho.to_string(),
            rep.rho_max.to_string(),
            files::join(&rep.conductance),
            rep.zero_degree_partitions.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            rep.bound_value.to_string(),
            rep.inconsistent_ids.len().to_string(),
            self.undecided.to_string(),
            r.to_string(),
        ]
    }
}

fn class_count(samples: &[LabeledGraph]) -> usize {
    samples.iter().map(|s| s.label).max().map_or(0, |m| m + 1)
}

fn infeasible(parent: &str, gamma: f64, e: AugmentError) -> CliError {
    match e {
        AugmentError::CapExceeded { bound, cap } => CliError::Infeasible(format!(
            "exact mode needs all {bound} augmentations of {parent} at strength {gamma}, above the cap of {cap}; \
             rerun with --exact-cap {bound} or with --mode sampled --samples <k>"
        )),
        other => CliError::Data(format!("{parent}: {other}")),
    }
}

/// Refuses exact mode up front when any parent's augmentation set exceeds
/// the cap, naming the cap that would be required.
fn check_exact(samples: &[LabeledGraph], specs: &[AugmentationSpec], cap: u64) -> Result<()> {
    let mut worst: Option<(num_bigint::BigUint, &str, f64)> = None;
    for spec in specs {
        let counting = if spec.family == Family::EdgePerturb { EdgeCounting::AddAware } else { EdgeCounting::DeletionsOnly };
        for s in samples {
            let bound = count_augmentations_with(s, spec, counting);
            if worst.as_ref().is_none_or(|(b, _, _)| bound > *b) {
                worst = Some((bound, s.id(), spec.gamma));
            }
        }
    }
    match worst {
        Some((bound, parent, gamma)) if bound > num_bigint::BigUint::from(cap) => Err(CliError::Infeasible(format!(
            "exact mode needs up to {bound} augmentations per parent ({parent} at strength {gamma}), above the cap of \
             {cap}; rerun with --exact-cap {bound} or with --mode sampled --samples <k>"
        ))),
        _ => Ok(()),
    }
}

fn population(samples: &[LabeledGraph], spec: &AugmentationSpec) -> f64 {
    samples
        .iter()
        .map(|s| count_augmentations_upper_bound(s, spec).to_f64().unwrap_or(f64::INFINITY))
        .sum()
}

fn budgets(samples: &[LabeledGraph], spec: &AugmentationSpec) -> Vec<usize> {
    samples.iter().map(|s| allowable_budget(&s.graph, spec)).collect()
}

/// Augmentations of every parent at every strength, tagged with the parent
/// index. Exact mode enumerates; sampled mode draws `k` per parent.
fn augmentation_pool(
    samples: &[LabeledGraph],
    family: Family,
    gammas: &[f64],
    mode: ProbabilityMode,
    seed: u64,
) -> Result<(Vec<AttributedGraph>, Vec<usize>)> {
    let mut graphs = Vec::new();
    let mut parents = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        let spec = AugmentationSpec::new(family, gamma).map_err(|e| CliError::Usage(e.to_string()))?;
        let level_seed = seed::derive(seed, gi as u64);
        let per_parent: Vec<Vec<AttributedGraph>> = samples
            .par_iter()
            .map(|s| -> Result<Vec<AttributedGraph>> {
                match mode {
                    ProbabilityMode::UniformExact { cap } => Ok(enumerate_augmentations(s, &spec, cap)
                        .map_err(|e| infeasible(s.id(), gamma, e))?
                        .into_iter()
                        .map(|r| r.graph)
                        .collect()),
                    ProbabilityMode::Sampled { k } => (0..k)
                        .map(|i| {
                            apply(s, &spec, augmentation_seed(level_seed, s.id(), family, i))
                                .map(|r| r.graph)
                                .map_err(|e| CliError::Data(format!("{}: {e}", s.id())))
                        })
                        .collect(),
                }
            })
            .collect::<Result<_>>()?;
        for (p, children) in per_parent.into_iter().enumerate() {
            parents.extend(std::iter::repeat_n(p, children.len()));
            graphs.extend(children);
        }
    }
    Ok((graphs, parents))
}

/// Runs the sweep in memory. Rows are ordered by family, then strength.
pub fn analyze_samples(samples: &[LabeledGraph], job: &AnalyzeJob) -> Result<Vec<AnalysisRow>> {
    let r = class_count(samples);
    let mut rows = Vec::new();
    for (fi, &family) in job.families.iter().enumerate() {
        let family_seed = seed::derive(job.seed, fi as u64);
        let specs: Vec<AugmentationSpec> = job
            .gammas
            .iter()
            .map(|&g| AugmentationSpec::new(family, g))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if let ProbabilityMode::UniformExact { cap } = job.mode {
            check_exact(samples, &specs, cap)?;
        }
        match job.relation {
            Relation::Ged => {
                let (pool, parents) = augmentation_pool(samples, family, &job.gammas, job.mode, family_seed)?;
                if pool.is_empty() {
                    return Err(CliError::Data("empty augmentation pool".into()));
                }
                let level_budgets: Vec<Vec<usize>> = specs.iter().map(|s| budgets(samples, s)).collect();
                let cap = level_budgets.iter().flatten().copied().max().unwrap_or(0) as f64 * 2.0;
                let dist = GedIntervals::compute_with(&pool, cap, job.size_limit, job.budget);
                let part = PartitionAssignment::new(
                    parents.iter().map(|&p| samples[p].label).collect(),
                    r,
                    PartitionSource::TrueLabels,
                );
                for (spec, delta) in specs.iter().zip(&level_budgets) {
                    let threshold = |a: usize, b: usize| 2.0 * delta[parents[a]].min(delta[parents[b]]) as f64;
                    let rel = dist.relation(threshold, |a, b| parents[a] == parents[b]);
                    let report = analyze(&rel, &part, None).map_err(CliError::data)?;
                    rows.push(AnalysisRow {
                        family,
                        gamma: spec.gamma,
                        delta_min: delta.iter().copied().min().unwrap_or(0),
                        delta_max: delta.iter().copied().max().unwrap_or(0),
                        x_population: population(samples, spec),
                        undecided: dist.undecided(threshold),
                        report,
                    });
                }
            }
            Relation::Provenance => {
                for (gi, spec) in specs.iter().enumerate() {
                    let pag = build_pag(samples, spec, job.mode, seed::derive(family_seed, gi as u64), job.identity)
                        .map_err(|e| match e {
                            PagError::Augment { parent, source } => infeasible(&parent, spec.gamma, source),
                            other => CliError::data(other),
                        })?;
                    let rel = pag.cooccurrence();
                    let report = analyze(&rel, &pag.label_partition(), Some(&pag)).map_err(CliError::data)?;
                    let delta = budgets(samples, spec);
                    rows.push(AnalysisRow {
                        family,
                        gamma: spec.gamma,
                        delta_min: delta.iter().copied().min().unwrap_or(0),
                        delta_max: delta.iter().copied().max().unwrap_or(0),
                        x_population: population(samples, spec),
                        undecided: 0,
                        report,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn csv_bytes(rows: &[AnalysisRow], r: usize) -> Result<Vec<u8>> {
    files::csv_bytes(&CSV_HEADER, &rows.iter().map(|row| row.csv(r)).collect::<Vec<_>>())
}

/// Reads the dataset, runs the sweep and writes the CSV.
pub fn run(job: &AnalyzeJob) -> Result<Vec<AnalysisRow>> {
    let samples = files::read_dataset(&job.dataset)?;
    let rows = analyze_samples(&samples, job)?;
    files::write_bytes(&job.out, &csv_bytes(&rows, class_count(&samples))?)?;
    Ok(rows)
}
