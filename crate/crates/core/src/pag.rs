//! Population augmentation graph over augmented samples and the quantities
//! derived from it: co-occurring pair counts, the alpha lower bound,
//! partition dissimilarity, conductance, inconsistent samples and the
//! generalization bound.
//!
//! The weight between augmentations `g` and `g'` is
//! `(1/N) * sum over parents of p(g | parent) * p(g' | parent)`, so the weight
//! matrix factors as `W = B^T B` with `B[parent, g] = p(g | parent) / sqrt(N)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::augment::{
    apply, augmentation_seed, enumerate_augmentations, AugmentError, AugmentationRecord, AugmentationSpec,
};
use crate::ged::{ged_bounds, ged_capped, ged_within, CostModel, Decision};
use crate::graph::{AttributedGraph, LabeledGraph};
use crate::iso::{are_isomorphic, ISO_SIZE_LIMIT};
use crate::wl::wl_hash;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PagError {
    #[error("parent {parent}: {source}")]
    Augment { parent: String, source: AugmentError },
    #[error("empty vertex set")]
    Empty,
    #[error("partition covers {got} vertices, graph has {expected}")]
    PartitionSize { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityMode {
    /// Every allowable augmentation enumerated, uniform probability `1/|A|`.
    UniformExact { cap: u64 },
    /// `k` distinct augmentations drawn per parent, probability `1/k`.
    Sampled { k: usize },
}

/// When two augmentations count as the same vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdentityPolicy {
    /// Same attributes per node id and same edge set.
    #[default]
    Labeled,
    /// Isomorphic graphs merge (graphs above the isomorphism limit merge only
    /// when labeled-equal).
    Isomorphism,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PagVertex {
    pub graph: AttributedGraph,
    /// `(parent index, p(g | parent))`, ascending by parent.
    pub memberships: Vec<(usize, f64)>,
    /// First record that produced this vertex.
    pub record: AugmentationRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationAugmentationGraph {
    pub vertices: Vec<PagVertex>,
    pub natural_count: usize,
    pub parent_ids: Vec<String>,
    pub parent_labels: Vec<usize>,
    /// Allowable budget of each parent.
    pub parent_deltas: Vec<usize>,
    /// Number of augmentations each parent's probabilities are spread over.
    pub parent_support: Vec<usize>,
    pub mode: ProbabilityMode,
    pub spec: AugmentationSpec,
}

/// Candidate augmentations of one parent: graph, probability, record.
type ParentDraw = Vec<(AttributedGraph, f64, AugmentationRecord)>;

/// Cap on draws when looking for `k` distinct sampled augmentations.
const SAMPLE_ATTEMPTS_PER_DRAW: usize = 50;

fn content_key(g: &AttributedGraph) -> AttributedGraph {
    g.clone().with_id("")
}

fn draw_parent(
    parent: &LabeledGraph,
    spec: &AugmentationSpec,
    mode: ProbabilityMode,
    seed: u64,
) -> Result<(ParentDraw, usize), AugmentError> {
    let records = match mode {
        ProbabilityMode::UniformExact { cap } => enumerate_augmentations(parent, spec, cap)?,
        ProbabilityMode::Sampled { k } => {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            let mut i = 0;
            while out.len() < k && i < k * SAMPLE_ATTEMPTS_PER_DRAW {
                let rec = apply(parent, spec, augmentation_seed(seed, parent.id(), spec.family, i))?;
                i += 1;
                let key = content_key(&rec.graph);
                if seen.insert(edge_key(&key)) {
                    out.push(rec);
                }
            }
            out
        }
    };
    // Zero budget leaves only the identity augmentation.
    let records = if records.is_empty() { vec![apply(parent, spec, seed)?] } else { records };
    let support = records.len();
    let p = 1.0 / support as f64;
    let mut merged: Vec<(AttributedGraph, f64, AugmentationRecord)> = Vec::new();
    let mut index: HashMap<AttributedGraph, usize> = HashMap::new();
    for rec in records {
        let key = content_key(&rec.graph);
        match index.get(&key) {
            Some(&i) => merged[i].1 += p,
            None => {
                index.insert(key.clone(), merged.len());
                merged.push((key, p, rec));
            }
        }
    }
    Ok((merged, support))
}

/// Hashable summary of a labeled graph used for distinctness checks.
fn edge_key(g: &AttributedGraph) -> (Vec<Vec<i64>>, Vec<(usize, usize)>) {
    (g.attrs().to_vec(), g.edges().collect())
}

/// Builds the graph over the augmentations of every parent in `dataset`.
/// Deterministic in `seed`; parents are processed in dataset order.
pub fn build_pag(
    dataset: &[LabeledGraph],
    spec: &AugmentationSpec,
    mode: ProbabilityMode,
    seed: u64,
    identity: IdentityPolicy,
) -> Result<PopulationAugmentationGraph, PagError> {
    let draws: Vec<(ParentDraw, usize)> = dataset
        .par_iter()
        .map(|p| draw_parent(p, spec, mode, seed).map_err(|source| PagError::Augment { parent: p.id().to_string(), source }))
        .collect::<Result<_, _>>()?;

    let mut vertices: Vec<PagVertex> = Vec::new();
    let mut labeled: HashMap<AttributedGraph, usize> = HashMap::new();
    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut parent_support = Vec::with_capacity(dataset.len());
    for (pi, (draw, support)) in draws.into_iter().enumerate() {
        parent_support.push(support);
        for (key, p, record) in draw {
            let found = labeled.get(&key).copied().or_else(|| match identity {
                IdentityPolicy::Labeled => None,
                IdentityPolicy::Isomorphism if key.node_count() <= ISO_SIZE_LIMIT => by_hash
                    .get(&wl_hash(&key, 3))
                    .and_then(|c| c.iter().copied().find(|&v| are_isomorphic(&vertices[v].graph, &key).unwrap_or(false))),
                IdentityPolicy::Isomorphism => None,
            });
            match found {
                Some(v) => {
                    let m = &mut vertices[v].memberships;
                    match m.last_mut() {
                        Some((last, q)) if *last == pi => *q += p,
                        _ => m.push((pi, p)),
                    }
                }
                None => {
                    let v = vertices.len();
                    labeled.insert(key.clone(), v);
                    if identity == IdentityPolicy::Isomorphism {
                        by_hash.entry(wl_hash(&key, 3)).or_default().push(v);
                    }
                    vertices.push(PagVertex { graph: key, memberships: vec![(pi, p)], record });
                }
            }
        }
    }
    Ok(PopulationAugmentationGraph {
        vertices,
        natural_count: dataset.len(),
        parent_ids: dataset.iter().map(|g| g.id().to_string()).collect(),
        parent_labels: dataset.iter().map(|g| g.label).collect(),
        parent_deltas: dataset.iter().map(|g| crate::augment::allowable_budget(&g.graph, spec)).collect(),
        parent_support,
        mode,
        spec: *spec,
    })
}

impl PopulationAugmentationGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Members of each parent: `(vertex, p(g | parent))`.
    pub fn parent_members(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.natural_count];
        for (v, vert) in self.vertices.iter().enumerate() {
            for &(p, q) in &vert.memberships {
                out[p].push((v, q));
            }
        }
        out
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let (ma, mb) = (&self.vertices[a].memberships, &self.vertices[b].memberships);
        let (mut i, mut j, mut w) = (0, 0, 0.0);
        while i < ma.len() && j < mb.len() {
            match ma[i].0.cmp(&mb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    w += ma[i].1 * mb[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        w / self.natural_count as f64
    }

    /// Nonzero weights `(a, b, w)` with `a <= b`, ascending.
    pub fn weights(&self) -> Vec<(usize, usize, f64)> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let n = self.natural_count as f64;
        for members in self.parent_members() {
            for (i, &(a, pa)) in members.iter().enumerate() {
                for &(b, pb) in &members[i..] {
                    *acc.entry((a.min(b), a.max(b))).or_insert(0.0) += pa * pb / n;
                }
            }
        }
        acc.into_iter().map(|((a, b), w)| (a, b, w)).collect()
    }

    /// Weighted degree `sum_b w(a, b) = (1/N) sum over parents of p(a | parent)`.
    pub fn degree(&self, a: usize) -> f64 {
        self.vertices[a].memberships.iter().map(|&(_, q)| q).sum::<f64>() / self.natural_count as f64
    }

    /// Co-occurrence by provenance: vertices sharing a parent.
    pub fn cooccurrence(&self) -> CoOccurrence {
        let mut sets = vec![BTreeSet::new(); self.len()];
        for members in self.parent_members() {
            for &(a, _) in &members {
                for &(b, _) in &members {
                    if a != b {
                        sets[a].insert(b);
                    }
                }
            }
        }
        CoOccurrence { neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect() }
    }

    /// Parent labels of vertex `a` (the label set of its generating samples).
    pub fn label_set(&self, a: usize) -> BTreeSet<usize> {
        self.vertices[a].memberships.iter().map(|&(p, _)| self.parent_labels[p]).collect()
    }

    /// Partition by parent label; a vertex with parents of several classes
    /// goes to the lowest class index.
    pub fn label_partition(&self) -> PartitionAssignment {
        let r = self.parent_labels.iter().copied().max().map_or(0, |m| m + 1);
        let assignment = (0..self.len()).map(|a| *self.label_set(a).iter().next().expect("vertex has a parent")).collect();
        PartitionAssignment { assignment, r, source: PartitionSource::MajorityRuleExtended }
    }

    /// Sum of `p(g | parent)` per parent; 1 in every mode.
    pub fn parent_mass(&self) -> Vec<f64> {
        self.parent_members().iter().map(|m| m.iter().map(|&(_, q)| q).sum()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionSource {
    TrueLabels,
    MajorityRuleExtended,
    EmbeddingClusters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionAssignment {
    pub assignment: Vec<usize>,
    pub r: usize,
    pub source: PartitionSource,
}

impl PartitionAssignment {
    pub fn new(assignment: Vec<usize>, r: usize, source: PartitionSource) -> Self {
        Self { assignment, r, source }
    }
}

/// Symmetric co-occurrence relation without self pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoOccurrence {
    pub neighbors: Vec<Vec<usize>>,
}

impl CoOccurrence {
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for (a, b) in pairs {
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Self { neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect() }
    }

    /// Pairwise `GED <= 2 * delta` over graphs within the exact GED limit.
    pub fn by_ged(graphs: &[AttributedGraph], delta: usize) -> Self {
        let n = graphs.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let cm = CostModel::default();
        let hits: Vec<(usize, usize)> = pairs
            .into_par_iter()
            .filter(|&(a, b)| ged_within(&graphs[a], &graphs[b], 2.0 * delta as f64, &cm) == Decision::Within)
            .collect();
        Self::from_pairs(n, hits)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Ordered pair count.
    pub fn ordered_pairs(&self) -> u64 {
        self.neighbors.iter().map(|n| n.len() as u64).sum()
    }
}

fn check_partition(rel: &CoOccurrence, part: &PartitionAssignment) -> Result<(), PagError> {
    if rel.len() != part.assignment.len() {
        return Err(PagError::PartitionSize { got: part.assignment.len(), expected: rel.len() });
    }
    Ok(())
}

/// `(lambda, mu)`: ordered co-occurring pairs `g != g'` within one partition
/// and across partitions.
pub fn count_pairs(rel: &CoOccurrence, part: &PartitionAssignment) -> Result<(u64, u64), PagError> {
    check_partition(rel, part)?;
    let (mut lambda, mut mu) = (0u64, 0u64);
    for (a, nbrs) in rel.neighbors.iter().enumerate() {
        for &b in nbrs {
            if part.assignment[a] == part.assignment[b] {
                lambda += 1;
            } else {
                mu += 1;
            }
        }
    }
    Ok((lambda, mu))
}

/// Vertices in a cross-partition co-occurring pair. With provenance, only
/// those whose generating samples carry more than one label are kept.
pub fn detect_inconsistent(
    rel: &CoOccurrence,
    part: &PartitionAssignment,
    pag: Option<&PopulationAugmentationGraph>,
) -> Result<Vec<usize>, PagError> {
    check_partition(rel, part)?;
    let candidates = (0..rel.len()).filter(|&a| rel.neighbors[a].iter().any(|&b| part.assignment[a] != part.assignment[b]));
    Ok(match pag {
        Some(pag) => candidates.filter(|&a| pag.label_set(a).len() > 1).collect(),
        None => candidates.collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBound {
    pub value: f64,
    /// Unclamped `mu / |X|`.
    pub raw: f64,
    /// The raw ratio exceeded 1 and was clamped.
    pub clamped: bool,
}

/// `mu / |X|`, clamped to 1 with a flag.
pub fn alpha_lower_bound(mu: u64, x_size: usize) -> Option<AlphaBound> {
    if x_size == 0 {
        return None;
    }
    let raw = mu as f64 / x_size as f64;
    Some(AlphaBound { value: raw.min(1.0), raw, clamped: raw > 1.0 })
}

/// Partition dissimilarity of partition `i`: ordered co-occurring pairs with
/// exactly one endpoint in the partition, over those plus the ordered pairs
/// inside it. Zero when the partition has no co-occurring pairs.
pub fn partition_dissimilarity(rel: &CoOccurrence, part: &PartitionAssignment, i: usize) -> Result<f64, PagError> {
    check_partition(rel, part)?;
    let (mut cross, mut within) = (0u64, 0u64);
    for (a, nbrs) in rel.neighbors.iter().enumerate() {
        let pa = part.assignment[a];
        for &b in nbrs {
            let pb = part.assignment[b];
            if pa == i && pb == i {
                within += 1;
            } else if pa == i || pb == i {
                cross += 1;
            }
        }
    }
    Ok(if cross + within == 0 { 0.0 } else { cross as f64 / (cross + within) as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductance {
    pub value: f64,
    /// The partition has no edges; the value is defined as 0.
    pub zero_degree: bool,
}

/// Edges leaving partition `i` over the summed edge-set sizes of its vertices.
pub fn conductance(rel: &CoOccurrence, part: &PartitionAssignment, i: usize) -> Result<Conductance, PagError> {
    check_partition(rel, part)?;
    let (mut cross, mut degree) = (0u64, 0u64);
    for (a, nbrs) in rel.neighbors.iter().enumerate() {
        if part.assignment[a] != i {
            continue;
        }
        degree += nbrs.len() as u64;
        cross += nbrs.iter().filter(|&&b| part.assignment[b] != i).count() as u64;
    }
    Ok(if degree == 0 {
        Conductance { value: 0.0, zero_degree: true }
    } else {
        Conductance { value: cross as f64 / degree as f64, zero_degree: false }
    })
}

/// `(r / |X|) * (mu + 2 lambda + lambda^2 / mu)` up to constants and log
/// factors; 0 when `mu = 0`, where the alpha lower bound itself is 0.
pub fn generalization_bound(lambda: u64, mu: u64, r: usize, x_size: usize) -> f64 {
    if mu == 0 || x_size == 0 {
        return 0.0;
    }
    let (l, m) = (lambda as f64, mu as f64);
    r as f64 / x_size as f64 * (m + 2.0 * l + l * l / m)
}

/// The same bound in its `r * alpha / rho^2` form.
pub fn bound_from_alpha_rho(alpha: f64, rho: f64, r: usize) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    r as f64 * alpha / (rho * rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub x_size: usize,
    pub lambda: u64,
    pub mu: u64,
    pub alpha_lower: f64,
    pub alpha_clamped: bool,
    pub phi: Vec<f64>,
    /// Smallest partition dissimilarity over partitions with co-occurring pairs.
    pub rho: f64,
    /// Largest partition dissimilarity, reported alongside.
    pub rho_max: f64,
    pub conductance: Vec<f64>,
    pub zero_degree_partitions: Vec<usize>,
    pub bound_value: f64,
    pub inconsistent_ids: Vec<usize>,
}

pub fn analyze(
    rel: &CoOccurrence,
    part: &PartitionAssignment,
    pag: Option<&PopulationAugmentationGraph>,
) -> Result<AnalysisReport, PagError> {
    check_partition(rel, part)?;
    if rel.is_empty() {
        return Err(PagError::Empty);
    }
    let (lambda, mu) = count_pairs(rel, part)?;
    let alpha = alpha_lower_bound(mu, rel.len()).expect("nonempty");
    let phi: Vec<f64> = (0..part.r).map(|i| partition_dissimilarity(rel, part, i)).collect::<Result<_, _>>()?;
    let active: Vec<f64> = (0..part.r)
        .filter(|&i| rel.neighbors.iter().enumerate().any(|(a, n)| part.assignment[a] == i && !n.is_empty()))
        .map(|i| phi[i])
        .collect();
    let rho = active.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_max = active.iter().copied().fold(0.0, f64::max);
    let cond: Vec<Conductance> = (0..part.r).map(|i| conductance(rel, part, i)).collect::<Result<_, _>>()?;
    Ok(AnalysisReport {
        x_size: rel.len(),
        lambda,
        mu,
        alpha_lower: alpha.value,
        alpha_clamped: alpha.clamped,
        phi,
        rho: if rho.is_finite() { rho } else { 0.0 },
        rho_max,
        conductance: cond.iter().map(|c| c.value).collect(),
        zero_degree_partitions: (0..part.r).filter(|&i| cond[i].zero_degree).collect(),
        bound_value: generalization_bound(lambda, mu, part.r, rel.len()),
        inconsistent_ids: detect_inconsistent(rel, part, pag)?,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConnectivityReport {
    /// Pairs with positive weight but `GED > 2 delta`.
    pub violations: Vec<(usize, usize)>,
    /// Pairs with positive weight whose GED could not be decided.
    pub undecided: Vec<(usize, usize)>,
    /// Pairs with `GED <= 2 delta`.
    pub ged_close_pairs: usize,
    /// Of those, pairs that also have positive weight.
    pub covered_pairs: usize,
}

impl ConnectivityReport {
    pub fn coverage(&self) -> f64 {
        if self.ged_close_pairs == 0 {
            1.0
        } else {
            self.covered_pairs as f64 / self.ged_close_pairs as f64
        }
    }
}

/// Checks positive weight implies `GED <= 2 delta` on every vertex pair and
/// reports how many GED-close pairs have positive weight.
pub fn pag_connectivity_check(pag: &PopulationAugmentationGraph, delta: usize) -> ConnectivityReport {
    let n = pag.len();
    let rel = pag.cooccurrence();
    let cm = CostModel::default();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let results: Vec<(usize, usize, bool, Decision)> = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let linked = rel.contains(a, b);
            let d = ged_within(&pag.vertices[a].graph, &pag.vertices[b].graph, 2.0 * delta as f64, &cm);
            (a, b, linked, d)
        })
        .collect();
    let mut report = ConnectivityReport::default();
    for (a, b, linked, d) in results {
        match (linked, d) {
            (true, Decision::Beyond) => report.violations.push((a, b)),
            (true, Decision::Unknown) => report.undecided.push((a, b)),
            _ => {}
        }
        if d == Decision::Within {
            report.ged_close_pairs += 1;
            if linked {
                report.covered_pairs += 1;
            }
        }
    }
    report
}

/// Class index of every graph and the first member of each class. Graphs
/// above the isomorphism size limit form classes of their own.
fn isomorphism_classes(graphs: &[AttributedGraph]) -> (Vec<usize>, Vec<usize>) {
    let hashes: Vec<Option<u64>> =
        graphs.par_iter().map(|g| (g.node_count() <= ISO_SIZE_LIMIT).then(|| wl_hash(g, 3))).collect();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut class_of = Vec::with_capacity(graphs.len());
    let mut reps = Vec::new();
    for (i, h) in hashes.into_iter().enumerate() {
        let found = h.and_then(|h| {
            buckets
                .get(&h)
                .and_then(|cs| cs.iter().copied().find(|&c| are_isomorphic(&graphs[reps[c]], &graphs[i]).unwrap_or(false)))
        });
        let c = found.unwrap_or_else(|| {
            reps.push(i);
            if let Some(h) = h {
                buckets.entry(h).or_default().push(reps.len() - 1);
            }
            reps.len() - 1
        });
        class_of.push(c);
    }
    (class_of, reps)
}

/// What is known about one pairwise distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairDistance {
    Exact(f64),
    /// Larger than the cap.
    Above,
    /// Bracketed by a budgeted search.
    Bounds { lower: f64, upper: f64 },
}

/// Pairwise distances computed once up to a cap and then queried at any
/// threshold up to the cap. Pairs within the exact size limit get exact
/// values; larger pairs get bounds from a budgeted search.
#[derive(Debug, Clone, PartialEq)]
pub struct GedIntervals {
    pub n: usize,
    pub cap: f64,
    /// Indexed by unordered pair `(a, b)`, `a < b`.
    pub dist: BTreeMap<(usize, usize), PairDistance>,
}

impl GedIntervals {
    pub fn compute(graphs: &[AttributedGraph], cap: f64) -> Self {
        Self::compute_with(graphs, cap, crate::ged::EXACT_SIZE_LIMIT, crate::ged::DEFAULT_EXPANSION_BUDGET)
    }

    /// Distances are computed once per pair of isomorphism classes, since
    /// edit distance does not see node numbering.
    pub fn compute_with(graphs: &[AttributedGraph], cap: f64, size_limit: usize, budget: usize) -> Self {
        let n = graphs.len();
        let cm = CostModel::default();
        let (class_of, reps) = isomorphism_classes(graphs);
        let c = reps.len();
        let pairs: Vec<(usize, usize)> = (0..c).flat_map(|a| (a + 1..c).map(move |b| (a, b))).collect();
        let between: HashMap<(usize, usize), PairDistance> = pairs
            .into_par_iter()
            .map(|(a, b)| {
                let (g, h) = (&graphs[reps[a]], &graphs[reps[b]]);
                let d = if g.node_count().abs_diff(h.node_count()) as f64 > cap {
                    PairDistance::Above
                } else if g.node_count().max(h.node_count()) <= size_limit {
                    match ged_capped(g, h, &cm, cap).expect("unit costs are valid") {
                        Some(r) => PairDistance::Exact(r.distance),
                        None => PairDistance::Above,
                    }
                } else {
                    let b = ged_bounds(g, h, &cm, budget).expect("unit costs are valid");
                    if b.lower > cap {
                        PairDistance::Above
                    } else if b.lower == b.upper {
                        PairDistance::Exact(b.upper)
                    } else {
                        PairDistance::Bounds { lower: b.lower, upper: b.upper }
                    }
                };
                ((a, b), d)
            })
            .collect();
        let dist = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| {
                let (ca, cb) = (class_of[a], class_of[b]);
                let d = if ca == cb { PairDistance::Exact(0.0) } else { between[&(ca.min(cb), ca.max(cb))] };
                ((a, b), d)
            })
            .collect();
        Self { n, cap, dist }
    }

    /// Pairs with distance at most `threshold(a, b)` (which must not exceed
    /// the cap). Undecided pairs count when `fallback(a, b)` holds. The
    /// relation only grows as thresholds grow.
    pub fn relation(&self, threshold: impl Fn(usize, usize) -> f64, fallback: impl Fn(usize, usize) -> bool) -> CoOccurrence {
        let pairs = self.dist.iter().filter_map(|(&(a, b), d)| {
            let t = threshold(a, b) + 1e-9;
            debug_assert!(t <= self.cap + 1e-6);
            let hit = match *d {
                PairDistance::Exact(d) => d <= t,
                PairDistance::Above => false,
                PairDistance::Bounds { lower, upper } => upper <= t || (lower <= t && fallback(a, b)),
            };
            hit.then_some((a, b))
        });
        CoOccurrence::from_pairs(self.n, pairs)
    }

    /// Pairs whose status at `threshold` rests on the fallback.
    pub fn undecided(&self, threshold: impl Fn(usize, usize) -> f64) -> usize {
        self.dist
            .iter()
            .filter(|(&(a, b), d)| {
                let t = threshold(a, b) + 1e-9;
                matches!(d, PairDistance::Bounds { lower, upper } if *lower <= t && *upper > t)
            })
            .count()
    }
}
