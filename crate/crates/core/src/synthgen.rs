//! Synthetic graph-classification benchmarks: class motifs ("content")
//! attached to a random background tree ("style") whose size scales with
//! the style ratio.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::{shapes, Attr, AttributedGraph, LabeledGraph, NodeId};
use crate::io::{self, ParseError};
use crate::iso::are_isomorphic;
use crate::seed;
use crate::wl::wl_hash;

/// WL rounds used to certify that motifs are distinguishable.
pub const MOTIF_WL_ROUNDS: usize = 3;

/// Attribute value written on every generated node.
pub const FEATURE_VALUE: Attr = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid motif set: {0}")]
    InvalidMotifs(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("class {0} out of range for {1} motifs")]
    ClassOutOfRange(usize, usize),
}

/// The default six motifs: triangle, 4-cycle, 5-cycle, 4-node star,
/// 4-clique and house.
pub fn default_motifs() -> Vec<AttributedGraph> {
    let a = [0];
    vec![
        shapes::triangle(&a),
        shapes::cycle(4, &a),
        shapes::cycle(5, &a),
        shapes::star(4, &a),
        shapes::clique(4, &a),
        shapes::house(&a),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotifFailure {
    Isomorphic,
    WlIndistinguishable,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MotifReport {
    pub failures: Vec<(usize, usize, MotifFailure)>,
}

impl MotifReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Lists every motif pair that is isomorphic or that 1-WL cannot separate
/// within `MOTIF_WL_ROUNDS` rounds.
pub fn validate_motif_set(motifs: &[AttributedGraph]) -> MotifReport {
    let hashes: Vec<u64> = motifs.iter().map(|m| wl_hash(m, MOTIF_WL_ROUNDS)).collect();
    let mut failures = Vec::new();
    for i in 0..motifs.len() {
        for j in i + 1..motifs.len() {
            if hashes[i] != hashes[j] {
                continue;
            }
            let kind = if are_isomorphic(&motifs[i], &motifs[j]).unwrap_or(false) {
                MotifFailure::Isomorphic
            } else {
                MotifFailure::WlIndistinguishable
            };
            failures.push((i, j, kind));
        }
    }
    MotifReport { failures }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub motifs: Vec<AttributedGraph>,
    pub samples_per_class: usize,
    /// Background size relative to total motif size.
    pub style_ratio: f64,
    pub motif_copies_range: (usize, usize),
    pub background_jitter: usize,
    pub edge_noise_fraction: f64,
    pub feature_dim: usize,
    pub master_seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            motifs: default_motifs(),
            samples_per_class: 50,
            style_ratio: 1.0,
            motif_copies_range: (1, 3),
            background_jitter: 2,
            edge_noise_fraction: 0.10,
            feature_dim: 10,
            master_seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.motifs.is_empty() {
            return Err(GenError::InvalidMotifs("no motifs".into()));
        }
        if self.motifs.iter().any(AttributedGraph::is_empty) {
            return Err(GenError::InvalidMotifs("empty motif".into()));
        }
        let report = validate_motif_set(&self.motifs);
        if let Some(&(i, j, kind)) = report.failures.first() {
            return Err(GenError::InvalidMotifs(format!("motifs {i} and {j}: {kind:?}")));
        }
        let (lo, hi) = self.motif_copies_range;
        if lo < 1 || lo > hi {
            return Err(GenError::InvalidConfig(format!("motif copy range [{lo}, {hi}]")));
        }
        if self.samples_per_class < 1 {
            return Err(GenError::InvalidConfig("samples_per_class must be at least 1".into()));
        }
        if !(self.style_ratio.is_finite() && self.style_ratio >= 0.0) {
            return Err(GenError::InvalidConfig(format!("style_ratio {}", self.style_ratio)));
        }
        if !(0.0..1.0).contains(&self.edge_noise_fraction) {
            return Err(GenError::InvalidConfig(format!("edge_noise_fraction {}", self.edge_noise_fraction)));
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.motifs.len()
    }

    pub fn to_json(&self) -> Value {
        let motifs: Vec<Value> = self
            .motifs
            .iter()
            .map(|m| {
                json!({
                    "name": m.id(),
                    "n": m.node_count(),
                    "edges": m.edges().map(|(u, v)| [u, v]).collect::<Vec<_>>(),
                    "attrs": m.attrs(),
                })
            })
            .collect();
        json!({
            "motifs": motifs,
            "samples_per_class": self.samples_per_class,
            "style_ratio": self.style_ratio,
            "motif_copies_range": [self.motif_copies_range.0, self.motif_copies_range.1],
            "background_jitter": self.background_jitter,
            "edge_noise_fraction": self.edge_noise_fraction,
            "feature_dim": self.feature_dim,
            "master_seed": self.master_seed,
        })
    }

    pub fn from_json(value: &Value) -> Result<Self, ParseError> {
        let obj = io::object(value)?;
        let motifs = io::field(obj, "motifs")?
            .as_array()
            .ok_or_else(|| ParseError::invalid("motifs", "expected an array"))?
            .iter()
            .map(|m| {
                let mo = io::object(m)?;
                let mut rec = mo.clone();
                rec.insert("id".into(), io::field(mo, "name")?.clone());
                rec.insert("label".into(), json!(0));
                rec.insert("content_mask".into(), json!([]));
                rec.insert("seed".into(), json!(0));
                io::from_value(&Value::Object(rec)).map(|g| g.graph)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let range = io::field(obj, "motif_copies_range")?
            .as_array()
            .and_then(|a| match a.as_slice() {
                [lo, hi] => Some((lo.as_u64()? as usize, hi.as_u64()? as usize)),
                _ => None,
            })
            .ok_or_else(|| ParseError::invalid("motif_copies_range", "expected [lo, hi]"))?;
        Ok(Self {
            motifs,
            samples_per_class: io::uint_field(obj, "samples_per_class")? as usize,
            style_ratio: io::f64_field(obj, "style_ratio")?,
            motif_copies_range: range,
            background_jitter: io::uint_field(obj, "background_jitter")? as usize,
            edge_noise_fraction: io::f64_field(obj, "edge_noise_fraction")?,
            feature_dim: io::uint_field(obj, "feature_dim")? as usize,
            master_seed: io::uint_field(obj, "master_seed")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledGraph>,
    pub config: GenerationConfig,
    pub r: usize,
}

/// Edges of a uniformly random labeled tree on `n` nodes, by Prüfer decoding.
pub fn random_tree_edges(n: usize, rng: &mut impl Rng) -> Vec<(NodeId, NodeId)> {
    match n {
        0 | 1 => return Vec::new(),
        2 => return vec![(0, 1)],
        _ => {}
    }
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &x in &prufer {
        degree[x] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &x in &prufer {
        let leaf = leaves.pop_first().expect("a leaf always exists");
        edges.push((leaf.min(x), leaf.max(x)));
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.insert(x);
        }
    }
    let u = leaves.pop_first().expect("two leaves remain");
    let v = leaves.pop_first().expect("two leaves remain");
    edges.push((u, v));
    edges
}

pub fn random_background_tree(n: usize, seed: u64) -> AttributedGraph {
    let mut rng = seed::rng(seed);
    let edges = random_tree_edges(n, &mut rng);
    AttributedGraph::uniform(format!("tree{n}"), n, &[FEATURE_VALUE], edges).expect("tree edges are valid")
}

/// Seed of sample `index` of class `class`.
pub fn sample_seed(master_seed: u64, class: usize, index: usize) -> u64 {
    seed::derive(seed::derive(seed::derive_named(master_seed, "generate"), class as u64), index as u64)
}

pub fn sample_id(class: usize, index: usize) -> String {
    format!("c{class:02}-{index:06}")
}

/// Generates one sample; the id is left empty for the caller to assign.
pub fn generate_sample(class_id: usize, config: &GenerationConfig, sample_seed: u64) -> Result<LabeledGraph, GenError> {
    let motif = config
        .motifs
        .get(class_id)
        .ok_or(GenError::ClassOutOfRange(class_id, config.motifs.len()))?;
    let mut rng = seed::rng(sample_seed);
    let (lo, hi) = config.motif_copies_range;
    let copies = rng.gen_range(lo..=hi);
    let k = motif.node_count();
    let content = copies * k;
    let style_target = (config.style_ratio * content as f64).floor() as usize;
    let bg_lo = style_target.saturating_sub(config.background_jitter);
    let bg_hi = style_target + config.background_jitter;
    let bg = rng.gen_range(bg_lo..=bg_hi);
    let n = content + bg;

    // Motif copy c occupies slots c*k..(c+1)*k, background follows.
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for c in 0..copies {
        for (u, v) in motif.edges() {
            edges.insert((c * k + u, c * k + v));
        }
    }
    for (u, v) in random_tree_edges(bg, &mut rng) {
        edges.insert((content + u, content + v));
    }
    for c in 0..copies {
        let m = c * k + rng.gen_range(0..k);
        if bg > 0 {
            let b = content + rng.gen_range(0..bg);
            edges.insert((m, b));
        } else if c > 0 {
            let prev = (c - 1) * k + rng.gen_range(0..k);
            edges.insert((prev, m));
        }
    }

    perturb_style_edges(&mut edges, n, content, config.edge_noise_fraction, &mut rng);

    // Random node order so position carries no content information.
    let mut perm: Vec<NodeId> = (0..n).collect();
    perm.shuffle(&mut rng);
    let edges = edges.into_iter().map(|(u, v)| (perm[u], perm[v]));
    let mask: BTreeSet<NodeId> = (0..content).map(|v| perm[v]).collect();
    let graph = AttributedGraph::uniform(String::new(), n, &vec![FEATURE_VALUE; config.feature_dim], edges)
        .expect("generated edges are valid");
    Ok(LabeledGraph::new(graph, class_id, mask, sample_seed).expect("mask within graph"))
}

/// Rewires up to `fraction` of the background-incident edges. Each rewire
/// removes one such edge and reconnects the two sides with a uniformly chosen
/// new pair that is not content-to-content, so the graph stays connected and
/// motif-induced structure is untouched. Nodes `0..content` are motif nodes.
fn perturb_style_edges(
    edges: &mut BTreeSet<(NodeId, NodeId)>,
    n: usize,
    content: usize,
    fraction: f64,
    rng: &mut impl Rng,
) {
    let is_style = |&(u, v): &(NodeId, NodeId)| u >= content || v >= content;
    let style_count = edges.iter().filter(|e| is_style(e)).count();
    let max_noise = (fraction * style_count as f64).floor() as usize;
    let rounds = rng.gen_range(0..=max_noise);
    for _ in 0..rounds {
        let style: Vec<(NodeId, NodeId)> = edges.iter().copied().filter(is_style).collect();
        let removed = style[rng.gen_range(0..style.len())];
        edges.remove(&removed);
        let side = reachable(edges, n, removed.0);
        let mut candidates = Vec::new();
        for a in (0..n).filter(|&a| side[a]) {
            for b in (0..n).filter(|&b| !side[b]) {
                if (a >= content || b >= content) && (a.min(b), a.max(b)) != removed {
                    candidates.push((a.min(b), a.max(b)));
                }
            }
        }
        if candidates.is_empty() {
            edges.insert(removed);
        } else {
            edges.insert(candidates[rng.gen_range(0..candidates.len())]);
        }
    }
}

fn reachable(edges: &BTreeSet<(NodeId, NodeId)>, n: usize, start: NodeId) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn generate_dataset(config: &GenerationConfig) -> Result<Dataset, GenError> {
    config.validate()?;
    let r = config.class_count();
    let jobs: Vec<(usize, usize)> =
        (0..r).flat_map(|c| (0..config.samples_per_class).map(move |i| (c, i))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(c, i)| {
            let mut s = generate_sample(c, config, sample_seed(config.master_seed, c, i))?;
            s.graph = s.graph.with_id(sample_id(c, i));
            Ok(s)
        })
        .collect::<Result<Vec<_>, GenError>>()?;
    Ok(Dataset { samples, config: config.clone(), r })
}

/// Classes whose motif occurs as an induced subgraph of the sample.
pub fn matching_classes(sample: &AttributedGraph, motifs: &[AttributedGraph]) -> Vec<usize> {
    motifs
        .iter()
        .enumerate()
        .filter(|(_, m)| {
            let pattern = AttributedGraph::uniform("p", m.node_count(), &vec![FEATURE_VALUE; sample.arity()], m.edges())
                .expect("motif edges are valid");
            crate::iso::find_subgraph(sample, &pattern, true, |_| true).is_some()
        })
        .map(|(c, _)| c)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(style: f64, jitter: usize, copies: (usize, usize)) -> GenerationConfig {
        GenerationConfig {
            style_ratio: style,
            background_jitter: jitter,
            motif_copies_range: copies,
            samples_per_class: 3,
            master_seed: 11,
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn default_motifs_are_valid() {
        // Brute-force cross-check: every default pair differs in node or edge count.
        let m = default_motifs();
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                assert!(m[i].node_count() != m[j].node_count() || m[i].edge_count() != m[j].edge_count());
            }
        }
        assert!(validate_motif_set(&m).is_valid());
    }

    #[test]
    fn duplicate_motif_is_reported() {
        let t = shapes::triangle(&[0]);
        let t2 = AttributedGraph::uniform("t2", 3, &[0], [(1, 2), (2, 0), (0, 1)]).unwrap();
        let r = validate_motif_set(&[t, t2]);
        assert_eq!(r.failures, vec![(0, 1, MotifFailure::Isomorphic)]);
    }

    #[test]
    fn attribute_distinguished_singletons_are_valid() {
        let a = AttributedGraph::new("a", vec![vec![0]], []).unwrap();
        let b = AttributedGraph::new("b", vec![vec![1]], []).unwrap();
        assert!(validate_motif_set(&[a, b]).is_valid());
    }

    #[test]
    fn tree_shapes() {
        assert_eq!(random_background_tree(1, 3).edge_count(), 0);
        assert_eq!(random_background_tree(0, 3).node_count(), 0);
        let t = random_background_tree(5, 3);
        assert_eq!(t.edge_count(), 4);
        assert!(t.is_connected());
        assert_eq!(t, random_background_tree(5, 3));
    }

    #[test]
    fn size_arithmetic() {
        // 5-cycle motif, one copy, ratio 0.5, no jitter: 5 + floor(2.5) = 7 nodes.
        let cfg = config(0.5, 0, (1, 1));
        let s = generate_sample(2, &cfg, 99).unwrap();
        assert_eq!(s.graph.node_count(), 7);
        assert_eq!(s.content_mask.len(), 5);
    }

    #[test]
    fn zero_style_is_motifs_plus_bridges() {
        let cfg = config(0.0, 0, (3, 3));
        let s = generate_sample(0, &cfg, 5).unwrap();
        assert_eq!(s.graph.node_count(), 9);
        assert_eq!(s.graph.edge_count(), 9 + 2);
        assert!(s.graph.is_connected());
    }

    #[test]
    fn class_out_of_range() {
        let cfg = config(1.0, 2, (1, 3));
        assert_eq!(generate_sample(6, &cfg, 0).unwrap_err(), GenError::ClassOutOfRange(6, 6));
    }

    #[test]
    fn dataset_counts_and_determinism() {
        let cfg = config(2.0, 2, (1, 3));
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a.samples.len(), 18);
        for c in 0..6 {
            assert_eq!(a.samples.iter().filter(|s| s.label == c).count(), 3);
        }
        assert_eq!(io::write_jsonl(&a.samples), io::write_jsonl(&b.samples));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = config(1.5, 2, (1, 3));
        assert_eq!(GenerationConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = config(-1.0, 2, (1, 3));
        assert!(matches!(cfg.validate(), Err(GenError::InvalidConfig(_))));
        cfg.style_ratio = 1.0;
        cfg.motif_copies_range = (0, 2);
        assert!(matches!(cfg.validate(), Err(GenError::InvalidConfig(_))));
    }
}
