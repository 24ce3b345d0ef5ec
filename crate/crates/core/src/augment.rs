//! Graph augmentations realized as compositions of unit-cost edit operations.
//!
//! Generic families (node drop, edge perturbation, attribute masking,
//! subgraph sampling) and content-aware edge dropping each modify exactly
//! `delta` elements, where `delta` is the allowable budget. Every record
//! carries the edit path that reproduces it from its parent.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::{ordered, Attr, AttributedGraph, GraphError, LabeledGraph, NodeId, MASK};
use crate::io::{self, ParseError};
use crate::seed;

/// One elementary graph edit. Indices refer to the graph the op is applied to,
/// so node indices in a path are interpreted sequentially.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    NodeDeletion { node: NodeId },
    /// Appends a node joined to `neighbors`; incident edges are part of the op.
    NodeInsertion { attrs: Vec<Attr>, neighbors: Vec<NodeId> },
    EdgeDeletion { u: NodeId, v: NodeId },
    EdgeAddition { u: NodeId, v: NodeId },
    FeatureReplacement { node: NodeId, attrs: Vec<Attr> },
}

impl EditOp {
    pub fn apply(&self, g: &AttributedGraph) -> Result<AttributedGraph, GraphError> {
        match self {
            EditOp::NodeDeletion { node } => g.remove_node(*node),
            EditOp::NodeInsertion { attrs, neighbors } => g.insert_node(attrs.clone(), neighbors),
            EditOp::EdgeDeletion { u, v } => g.remove_edge(*u, *v),
            EditOp::EdgeAddition { u, v } => g.add_edge(*u, *v),
            EditOp::FeatureReplacement { node, attrs } => g.replace_attrs(*node, attrs.clone()),
        }
    }
}

/// Applies `path` to `g` in order.
pub fn replay(g: &AttributedGraph, path: &[EditOp]) -> Result<AttributedGraph, GraphError> {
    path.iter().try_fold(g.clone(), |acc, op| op.apply(&acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    NodeDrop,
    EdgePerturb,
    AttrMask,
    Subgraph,
    ContentAwareEdgeDrop,
    /// Uniform deletion of existing edges.
    EdgeDrop,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::NodeDrop,
        Family::EdgePerturb,
        Family::AttrMask,
        Family::Subgraph,
        Family::ContentAwareEdgeDrop,
        Family::EdgeDrop,
    ];
    pub const GENERIC: [Family; 4] = [Family::NodeDrop, Family::EdgePerturb, Family::AttrMask, Family::Subgraph];

    pub fn name(self) -> &'static str {
        match self {
            Family::NodeDrop => "node_drop",
            Family::EdgePerturb => "edge_perturb",
            Family::AttrMask => "attr_mask",
            Family::Subgraph => "subgraph",
            Family::ContentAwareEdgeDrop => "content_aware_edge_drop",
            Family::EdgeDrop => "edge_drop",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Whether the budget is a fraction of nodes (otherwise of edges).
    pub fn node_indexed(self) -> bool {
        matches!(self, Family::NodeDrop | Family::AttrMask | Family::Subgraph)
    }

    pub fn content_aware(self) -> bool {
        self == Family::ContentAwareEdgeDrop
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AugmentError {
    #[error("strength {0} outside [0, 1]")]
    Strength(String),
    #[error("subgraph sampling needs a connected graph")]
    Disconnected,
    #[error("content-aware augmentation needs a content mask")]
    NoContentMask,
    #[error("augmentation set has {bound} members, above the cap of {cap}")]
    CapExceeded { bound: BigUint, cap: u64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationSpec {
    pub family: Family,
    pub gamma: f64,
}

impl AugmentationSpec {
    pub fn new(family: Family, gamma: f64) -> Result<Self, AugmentError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(AugmentError::Strength(gamma.to_string()));
        }
        Ok(Self { family, gamma })
    }
}

/// Anything an augmentation can start from.
pub trait AugmentSource {
    fn graph(&self) -> &AttributedGraph;
    fn content_mask(&self) -> Option<&BTreeSet<NodeId>> {
        None
    }
    fn label(&self) -> Option<usize> {
        None
    }
}

impl AugmentSource for AttributedGraph {
    fn graph(&self) -> &AttributedGraph {
        self
    }
}

impl AugmentSource for LabeledGraph {
    fn graph(&self) -> &AttributedGraph {
        &self.graph
    }
    fn content_mask(&self) -> Option<&BTreeSet<NodeId>> {
        Some(&self.content_mask)
    }
    fn label(&self) -> Option<usize> {
        Some(self.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationRecord {
    pub graph: AttributedGraph,
    pub parent_id: String,
    pub spec: AugmentationSpec,
    pub delta: usize,
    pub seed: u64,
    pub edit_path: Vec<EditOp>,
    /// Parent label, when the parent has one.
    pub label: Option<usize>,
    /// Surviving content nodes, renumbered to the child's node ids.
    pub content_mask: BTreeSet<NodeId>,
}

impl AugmentationRecord {
    pub fn to_value(&self) -> Value {
        let lg = LabeledGraph {
            graph: self.graph.clone(),
            label: self.label.unwrap_or(0),
            content_mask: self.content_mask.clone(),
            seed: self.seed,
        };
        let mut v = io::to_value(&lg);
        let obj = v.as_object_mut().expect("record is an object");
        obj.insert("parent".into(), json!(self.parent_id));
        obj.insert("family".into(), json!(self.spec.family.name()));
        obj.insert("gamma".into(), json!(self.spec.gamma));
        obj.insert("delta".into(), json!(self.delta));
        obj.insert("edits".into(), serde_json::to_value(&self.edit_path).expect("edits serialize"));
        v
    }

    pub fn from_value(value: &Value) -> Result<Self, ParseError> {
        let lg = io::from_value(value)?;
        let obj = io::object(value)?;
        let family_name = io::str_field(obj, "family")?;
        let family = Family::parse(family_name)
            .ok_or_else(|| ParseError::invalid("family", format!("unknown family {family_name}")))?;
        let gamma = io::f64_field(obj, "gamma")?;
        let spec = AugmentationSpec::new(family, gamma).map_err(|e| ParseError::invalid("gamma", e.to_string()))?;
        let edit_path: Vec<EditOp> = serde_json::from_value(io::field(obj, "edits")?.clone())
            .map_err(|e| ParseError::invalid("edits", e.to_string()))?;
        Ok(Self {
            graph: lg.graph,
            parent_id: io::str_field(obj, "parent")?.to_string(),
            spec,
            delta: io::uint_field(obj, "delta")? as usize,
            seed: lg.seed,
            edit_path,
            label: Some(lg.label),
            content_mask: lg.content_mask,
        })
    }

    /// View of the child as a labeled graph (label 0 when the parent had none).
    pub fn to_labeled(&self) -> LabeledGraph {
        LabeledGraph {
            graph: self.graph.clone(),
            label: self.label.unwrap_or(0),
            content_mask: self.content_mask.clone(),
            seed: self.seed,
        }
    }
}

impl AugmentSource for AugmentationRecord {
    fn graph(&self) -> &AttributedGraph {
        &self.graph
    }
    fn content_mask(&self) -> Option<&BTreeSet<NodeId>> {
        Some(&self.content_mask)
    }
    fn label(&self) -> Option<usize> {
        self.label
    }
}

/// `floor(gamma * size)`, with a small tolerance so products such as
/// `0.29 * 100` land on the intended integer.
pub fn floor_fraction(gamma: f64, size: usize) -> usize {
    (gamma * size as f64 + 1e-9).floor() as usize
}

/// Edit budget: a fraction of nodes for node-indexed families, of edges otherwise.
pub fn allowable_budget(g: &AttributedGraph, spec: &AugmentationSpec) -> usize {
    let size = if spec.family.node_indexed() { g.node_count() } else { g.edge_count() };
    floor_fraction(spec.gamma, size)
}

fn style_edges(g: &AttributedGraph, mask: &BTreeSet<NodeId>) -> Vec<(NodeId, NodeId)> {
    g.edges().filter(|(u, v)| !(mask.contains(u) && mask.contains(v))).collect()
}

/// Edges a deletion-only family may remove.
fn droppable_edges<S: AugmentSource + ?Sized>(src: &S, family: Family) -> Result<Vec<(NodeId, NodeId)>, AugmentError> {
    let g = src.graph();
    if family == Family::EdgeDrop {
        return Ok(g.edges().collect());
    }
    let mask = src.content_mask().ok_or(AugmentError::NoContentMask)?;
    Ok(style_edges(g, mask))
}

fn child_id(parent: &str, family: Family, tag: u64) -> String {
    format!("{parent}/{}/{tag:016x}", family.name())
}

/// Deletes `nodes` (original ids) in descending order so each recorded index
/// is also the original id.
fn deletion_path(nodes: &BTreeSet<NodeId>) -> Vec<EditOp> {
    nodes.iter().rev().map(|&node| EditOp::NodeDeletion { node }).collect()
}

fn remap_mask(mask: Option<&BTreeSet<NodeId>>, deleted: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let Some(mask) = mask else { return BTreeSet::new() };
    mask.iter()
        .filter(|v| !deleted.contains(v))
        .map(|&v| v - deleted.range(..v).count())
        .collect()
}

fn record<S: AugmentSource + ?Sized>(
    src: &S,
    spec: &AugmentationSpec,
    delta: usize,
    seed: u64,
    edit_path: Vec<EditOp>,
    deleted: &BTreeSet<NodeId>,
) -> Result<AugmentationRecord, AugmentError> {
    let parent = src.graph();
    let graph = replay(parent, &edit_path)?.with_id(child_id(parent.id(), spec.family, seed));
    Ok(AugmentationRecord {
        graph,
        parent_id: parent.id().to_string(),
        spec: *spec,
        delta,
        seed,
        edit_path,
        label: src.label(),
        content_mask: remap_mask(src.content_mask(), deleted),
    })
}

/// Grows a connected node set of size `target` by a uniform random walk from
/// a uniform start node.
fn random_walk_nodes(g: &AttributedGraph, target: usize, rng: &mut impl Rng) -> BTreeSet<NodeId> {
    let mut kept = BTreeSet::new();
    if target == 0 {
        return kept;
    }
    let mut cur = rng.gen_range(0..g.node_count());
    kept.insert(cur);
    while kept.len() < target {
        let nbrs = g.neighbors(cur);
        cur = nbrs[rng.gen_range(0..nbrs.len())];
        kept.insert(cur);
    }
    kept
}

/// Draws one augmentation. Deterministic in `seed`.
pub fn apply<S: AugmentSource + ?Sized>(
    src: &S,
    spec: &AugmentationSpec,
    seed: u64,
) -> Result<AugmentationRecord, AugmentError> {
    let g = src.graph();
    let delta = allowable_budget(g, spec);
    let mut rng = seed::rng(seed);
    let n = g.node_count();
    let none = BTreeSet::new();
    match spec.family {
        Family::NodeDrop => {
            let dropped: BTreeSet<NodeId> = sample(&mut rng, n, delta).into_iter().collect();
            record(src, spec, delta, seed, deletion_path(&dropped), &dropped)
        }
        Family::AttrMask => {
            let mut nodes: Vec<NodeId> = sample(&mut rng, n, delta).into_vec();
            nodes.sort_unstable();
            let path = nodes
                .into_iter()
                .map(|node| EditOp::FeatureReplacement { node, attrs: vec![MASK; g.arity()] })
                .collect();
            record(src, spec, delta, seed, path, &none)
        }
        Family::Subgraph => {
            if !g.is_connected() {
                return Err(AugmentError::Disconnected);
            }
            let kept = random_walk_nodes(g, n - delta, &mut rng);
            let dropped: BTreeSet<NodeId> = (0..n).filter(|v| !kept.contains(v)).collect();
            record(src, spec, delta, seed, deletion_path(&dropped), &dropped)
        }
        Family::EdgePerturb => {
            let mut existing: Vec<(NodeId, NodeId)> = g.edges().collect();
            let mut absent = g.absent_pairs();
            let mut path = Vec::with_capacity(delta);
            for _ in 0..delta {
                let delete = if existing.is_empty() {
                    false
                } else if absent.is_empty() {
                    true
                } else {
                    rng.gen_bool(0.5)
                };
                if delete {
                    let (u, v) = existing.swap_remove(rng.gen_range(0..existing.len()));
                    path.push(EditOp::EdgeDeletion { u, v });
                } else {
                    let (u, v) = absent.swap_remove(rng.gen_range(0..absent.len()));
                    path.push(EditOp::EdgeAddition { u, v });
                }
            }
            record(src, spec, delta, seed, path, &none)
        }
        Family::ContentAwareEdgeDrop | Family::EdgeDrop => {
            let style = droppable_edges(src, spec.family)?;
            let picks = delta.min(style.len());
            let mut chosen: Vec<(NodeId, NodeId)> =
                sample(&mut rng, style.len(), picks).into_iter().map(|i| style[i]).collect();
            chosen.sort_unstable();
            let path = chosen.into_iter().map(|(u, v)| EditOp::EdgeDeletion { u, v }).collect();
            record(src, spec, delta, seed, path, &none)
        }
    }
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `sum_{j=1}^{delta} C(size, j)`, or 1 (identity only) when `delta = 0`.
pub fn binomial_sum(size: usize, delta: usize) -> BigUint {
    if delta == 0 {
        return BigUint::one();
    }
    (1..=delta).map(|j| binomial(size, j)).sum()
}

/// How edge perturbation is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeCounting {
    /// Deletions of existing edges only.
    #[default]
    DeletionsOnly,
    /// Toggles of any node pair (deletions and additions).
    AddAware,
}

/// Upper bound on the augmentation set size. Edge perturbation is counted
/// over deletions only; see `count_augmentations_with` for the add-aware count.
pub fn count_augmentations_upper_bound<S: AugmentSource + ?Sized>(src: &S, spec: &AugmentationSpec) -> BigUint {
    count_augmentations_with(src, spec, EdgeCounting::DeletionsOnly)
}

pub fn count_augmentations_with<S: AugmentSource + ?Sized>(
    src: &S,
    spec: &AugmentationSpec,
    counting: EdgeCounting,
) -> BigUint {
    let g = src.graph();
    let delta = allowable_budget(g, spec);
    match spec.family {
        Family::NodeDrop | Family::AttrMask | Family::Subgraph => binomial_sum(g.node_count(), delta),
        Family::EdgePerturb => match counting {
            EdgeCounting::DeletionsOnly => binomial_sum(g.edge_count(), delta),
            EdgeCounting::AddAware => {
                let n = g.node_count();
                binomial_sum(n * n.saturating_sub(1) / 2, delta)
            }
        },
        Family::ContentAwareEdgeDrop => {
            let style = src.content_mask().map_or(0, |m| style_edges(g, m).len());
            binomial_sum(style, delta.min(style))
        }
        Family::EdgeDrop => binomial_sum(g.edge_count(), delta),
    }
}

/// Every subset of `0..n` with size in `1..=max`, in size-then-lexicographic order.
fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=max.min(n) {
        rec(0, n, size, &mut Vec::new(), &mut out);
    }
    out
}

/// All distinct labeled outcomes modifying between 1 and `delta` elements.
/// Outcomes are identified by their edit set, so isomorphic results stay
/// separate. Edge perturbation enumerates toggles of any pair and is capped
/// by the add-aware count. Enumerated records carry their list index as seed.
pub fn enumerate_augmentations<S: AugmentSource + ?Sized>(
    src: &S,
    spec: &AugmentationSpec,
    cap: u64,
) -> Result<Vec<AugmentationRecord>, AugmentError> {
    let g = src.graph();
    let delta = allowable_budget(g, spec);
    let counting = if spec.family == Family::EdgePerturb { EdgeCounting::AddAware } else { EdgeCounting::DeletionsOnly };
    let bound = count_augmentations_with(src, spec, counting);
    if bound > BigUint::from(cap) {
        return Err(AugmentError::CapExceeded { bound, cap });
    }
    if delta == 0 {
        return Ok(Vec::new());
    }
    let n = g.node_count();
    let none = BTreeSet::new();
    let mut paths: Vec<(Vec<EditOp>, BTreeSet<NodeId>)> = Vec::new();
    match spec.family {
        Family::NodeDrop => {
            for s in subsets(n, delta) {
                let dropped: BTreeSet<NodeId> = s.into_iter().collect();
                paths.push((deletion_path(&dropped), dropped));
            }
        }
        Family::AttrMask => {
            for s in subsets(n, delta) {
                let path = s
                    .into_iter()
                    .map(|node| EditOp::FeatureReplacement { node, attrs: vec![MASK; g.arity()] })
                    .collect();
                paths.push((path, none.clone()));
            }
        }
        Family::Subgraph => {
            if !g.is_connected() {
                return Err(AugmentError::Disconnected);
            }
            for s in subsets(n, delta) {
                let dropped: BTreeSet<NodeId> = s.into_iter().collect();
                let kept: BTreeSet<NodeId> = (0..n).filter(|v| !dropped.contains(v)).collect();
                if g.induced_subgraph(&kept).is_connected() {
                    paths.push((deletion_path(&dropped), dropped));
                }
            }
        }
        Family::EdgePerturb => {
            let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    pairs.push((u, v));
                }
            }
            for s in subsets(pairs.len(), delta) {
                let path = s
                    .into_iter()
                    .map(|i| {
                        let (u, v) = pairs[i];
                        if g.has_edge(u, v) {
                            EditOp::EdgeDeletion { u, v }
                        } else {
                            EditOp::EdgeAddition { u, v }
                        }
                    })
                    .collect();
                paths.push((path, none.clone()));
            }
        }
        Family::ContentAwareEdgeDrop | Family::EdgeDrop => {
            let style = droppable_edges(src, spec.family)?;
            for s in subsets(style.len(), delta) {
                let path = s
                    .into_iter()
                    .map(|i| {
                        let (u, v) = style[i];
                        EditOp::EdgeDeletion { u, v }
                    })
                    .collect();
                paths.push((path, none.clone()));
            }
        }
    }
    paths
        .into_iter()
        .enumerate()
        .map(|(i, (path, dropped))| record(src, spec, delta, i as u64, path, &dropped))
        .collect()
}

/// Seed for the `index`-th augmentation of `parent_id` under a master seed.
pub fn augmentation_seed(master: u64, parent_id: &str, family: Family, index: usize) -> u64 {
    let base = seed::derive_named(seed::derive_named(master, "augment"), parent_id);
    seed::derive(seed::derive_named(base, family.name()), index as u64)
}

/// Sorted pair key, handy for edit-set comparisons.
pub fn pair(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    ordered(u, v)
}
