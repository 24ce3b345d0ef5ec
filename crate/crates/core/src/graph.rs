//! Attributed undirected graphs with categorical node attributes.
//!
//! Graphs are simple (no self-loops, no parallel edges) and immutable once
//! built; every edit produces a fresh graph. Node ids are dense `0..n`.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

pub type NodeId = usize;

/// One categorical attribute coordinate.
pub type Attr = i64;

/// Reserved attribute symbol written by attribute masking. Data symbols are
/// never negative.
pub const MASK: Attr = -1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    EndpointOutOfRange(NodeId, NodeId, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("node {node} has {found} attributes, expected {expected}")]
    ArityMismatch { node: NodeId, expected: usize, found: usize },
    #[error("content mask references node {0} outside the graph")]
    MaskOutOfRange(NodeId),
    #[error("node {0} does not exist")]
    NoSuchNode(NodeId),
    #[error("edge ({0}, {1}) does not exist")]
    NoSuchEdge(NodeId, NodeId),
    #[error("edge ({0}, {1}) already exists")]
    EdgeExists(NodeId, NodeId),
}

#[inline]
pub fn ordered(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AttributedGraph {
    id: String,
    attrs: Vec<Vec<Attr>>,
    edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
}

impl AttributedGraph {
    pub fn new(
        id: impl Into<String>,
        attrs: Vec<Vec<Attr>>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let n = attrs.len();
        if let Some(first) = attrs.first() {
            let expected = first.len();
            for (node, a) in attrs.iter().enumerate() {
                if a.len() != expected {
                    return Err(GraphError::ArityMismatch { node, expected, found: a.len() });
                }
            }
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::EndpointOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let e = ordered(u, v);
            if !set.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(Self::from_parts(id.into(), attrs, set))
    }

    /// Graph with `n` nodes all carrying the same attribute vector.
    pub fn uniform(
        id: impl Into<String>,
        n: usize,
        attr: &[Attr],
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        Self::new(id, vec![attr.to_vec(); n], edges)
    }

    pub fn empty(id: impl Into<String>) -> Self {
        Self::from_parts(id.into(), Vec::new(), BTreeSet::new())
    }

    fn from_parts(id: String, attrs: Vec<Vec<Attr>>, edges: BTreeSet<(NodeId, NodeId)>) -> Self {
        let mut adjacency = vec![Vec::new(); attrs.len()];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { id, attrs, edges, adjacency }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn node_count(&self) -> usize {
        self.attrs.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    /// Attribute vector length; zero for the empty graph.
    pub fn arity(&self) -> usize {
        self.attrs.first().map_or(0, Vec::len)
    }

    pub fn attrs(&self) -> &[Vec<Attr>] {
        &self.attrs
    }

    pub fn attr(&self, v: NodeId) -> &[Attr] {
        &self.attrs[v]
    }

    /// Edges in ascending `(min, max)` order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u != v && self.edges.contains(&ordered(u, v))
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    /// Unordered node pairs not joined by an edge, ascending.
    pub fn absent_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let n = self.node_count();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2 - self.edge_count());
        for u in 0..n {
            for v in u + 1..n {
                if !self.edges.contains(&(u, v)) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// The empty graph counts as connected.
    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Subgraph induced by `keep`, renumbered in ascending order of the kept ids.
    pub fn induced_subgraph(&self, keep: &BTreeSet<NodeId>) -> Self {
        let mut remap = vec![usize::MAX; self.node_count()];
        let mut attrs = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
            attrs.push(self.attrs[old].clone());
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| remap[*u] != usize::MAX && remap[*v] != usize::MAX)
            .map(|&(u, v)| ordered(remap[u], remap[v]))
            .collect();
        Self::from_parts(self.id.clone(), attrs, edges)
    }

    /// Deletes `v` and its incident edges; nodes above `v` shift down by one.
    pub fn remove_node(&self, v: NodeId) -> Result<Self, GraphError> {
        if v >= self.node_count() {
            return Err(GraphError::NoSuchNode(v));
        }
        let keep: BTreeSet<NodeId> = (0..self.node_count()).filter(|&u| u != v).collect();
        Ok(self.induced_subgraph(&keep))
    }

    /// Appends a node with id `n` joined to each of `neighbors`.
    pub fn insert_node(&self, attrs: Vec<Attr>, neighbors: &[NodeId]) -> Result<Self, GraphError> {
        let n = self.node_count();
        if n > 0 && attrs.len() != self.arity() {
            return Err(GraphError::ArityMismatch { node: n, expected: self.arity(), found: attrs.len() });
        }
        let mut edges = self.edges.clone();
        for &u in neighbors {
            if u >= n {
                return Err(GraphError::EndpointOutOfRange(u, n, n + 1));
            }
            if !edges.insert((u, n)) {
                return Err(GraphError::DuplicateEdge(u, n));
            }
        }
        let mut all = self.attrs.clone();
        all.push(attrs);
        Ok(Self::from_parts(self.id.clone(), all, edges))
    }

    pub fn add_edge(&self, u: NodeId, v: NodeId) -> Result<Self, GraphError> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(GraphError::EndpointOutOfRange(u, v, n));
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let mut edges = self.edges.clone();
        if !edges.insert(ordered(u, v)) {
            return Err(GraphError::EdgeExists(u, v));
        }
        Ok(Self::from_parts(self.id.clone(), self.attrs.clone(), edges))
    }

    pub fn remove_edge(&self, u: NodeId, v: NodeId) -> Result<Self, GraphError> {
        let mut edges = self.edges.clone();
        if !edges.remove(&ordered(u, v)) {
            return Err(GraphError::NoSuchEdge(u, v));
        }
        Ok(Self::from_parts(self.id.clone(), self.attrs.clone(), edges))
    }

    /// Toggles every listed pair at once (delete if present, add if absent).
    pub fn toggle_edges(&self, pairs: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let n = self.node_count();
        let mut edges = self.edges.clone();
        for &(u, v) in pairs {
            if u >= n || v >= n {
                return Err(GraphError::EndpointOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let e = ordered(u, v);
            if !edges.remove(&e) {
                edges.insert(e);
            }
        }
        Ok(Self::from_parts(self.id.clone(), self.attrs.clone(), edges))
    }

    pub fn replace_attrs(&self, v: NodeId, attrs: Vec<Attr>) -> Result<Self, GraphError> {
        if v >= self.node_count() {
            return Err(GraphError::NoSuchNode(v));
        }
        if attrs.len() != self.arity() {
            return Err(GraphError::ArityMismatch { node: v, expected: self.arity(), found: attrs.len() });
        }
        let mut all = self.attrs.clone();
        all[v] = attrs;
        Ok(Self::from_parts(self.id.clone(), all, self.edges.clone()))
    }

    /// Disjoint union; `other`'s nodes are shifted past this graph's nodes.
    pub fn disjoint_union(&self, other: &AttributedGraph) -> Result<Self, GraphError> {
        let offset = self.node_count();
        let mut attrs = self.attrs.clone();
        attrs.extend(other.attrs.iter().cloned());
        let edges = self
            .edges()
            .chain(other.edges().map(|(u, v)| (u + offset, v + offset)));
        Self::new(self.id.clone(), attrs, edges)
    }

    /// Labeled equality ignoring the id: same attributes per node and same edges.
    pub fn same_content(&self, other: &AttributedGraph) -> bool {
        self.attrs == other.attrs && self.edges == other.edges
    }
}

/// A dataset sample: graph plus class label, motif ("content") nodes and the
/// seed it was generated from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    pub graph: AttributedGraph,
    pub label: usize,
    pub content_mask: BTreeSet<NodeId>,
    pub seed: u64,
}

impl LabeledGraph {
    pub fn new(
        graph: AttributedGraph,
        label: usize,
        content_mask: BTreeSet<NodeId>,
        seed: u64,
    ) -> Result<Self, GraphError> {
        if let Some(&bad) = content_mask.iter().find(|&&v| v >= graph.node_count()) {
            return Err(GraphError::MaskOutOfRange(bad));
        }
        Ok(Self { graph, label, content_mask, seed })
    }

    pub fn id(&self) -> &str {
        self.graph.id()
    }

    /// Edges with at least one endpoint outside the content mask.
    pub fn style_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.graph
            .edges()
            .filter(|(u, v)| !(self.content_mask.contains(u) && self.content_mask.contains(v)))
            .collect()
    }
}

/// Small named shapes used as motifs and test fixtures.
pub mod shapes {
    use super::{Attr, AttributedGraph, NodeId};

    fn build(name: &str, n: usize, attr: &[Attr], edges: Vec<(NodeId, NodeId)>) -> AttributedGraph {
        AttributedGraph::uniform(name, n, attr, edges).expect("shape edges are valid")
    }

    pub fn path(n: usize, attr: &[Attr]) -> AttributedGraph {
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        build(&format!("path{n}"), n, attr, edges)
    }

    pub fn cycle(n: usize, attr: &[Attr]) -> AttributedGraph {
        assert!(n >= 3, "a simple cycle needs at least 3 nodes");
        let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
        build(&format!("cycle{n}"), n, attr, edges)
    }

    pub fn triangle(attr: &[Attr]) -> AttributedGraph {
        cycle(3, attr).with_id("triangle")
    }

    pub fn clique(n: usize, attr: &[Attr]) -> AttributedGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        build(&format!("clique{n}"), n, attr, edges)
    }

    /// Star with one hub (node 0) and `n - 1` leaves.
    pub fn star(n: usize, attr: &[Attr]) -> AttributedGraph {
        let edges = (1..n).map(|i| (0, i)).collect();
        build(&format!("star{n}"), n, attr, edges)
    }

    /// Square 0-1-2-3 with a roof node 4 joined to 0 and 1.
    pub fn house(attr: &[Attr]) -> AttributedGraph {
        build("house", 5, attr, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert_eq!(
            AttributedGraph::uniform("g", 2, &[0], [(1, 1)]).unwrap_err(),
            GraphError::SelfLoop(1)
        );
        assert_eq!(
            AttributedGraph::uniform("g", 2, &[0], [(0, 1), (1, 0)]).unwrap_err(),
            GraphError::DuplicateEdge(0, 1)
        );
        assert!(matches!(
            AttributedGraph::uniform("g", 2, &[0], [(0, 2)]),
            Err(GraphError::EndpointOutOfRange(..))
        ));
    }

    #[test]
    fn rejects_ragged_attributes() {
        let err = AttributedGraph::new("g", vec![vec![0, 1], vec![0]], []).unwrap_err();
        assert_eq!(err, GraphError::ArityMismatch { node: 1, expected: 2, found: 1 });
    }

    #[test]
    fn edges_are_normalized() {
        let g = AttributedGraph::uniform("g", 3, &[0], [(2, 0), (1, 2)]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
        assert!(g.has_edge(2, 1));
        assert_eq!(g.neighbors(2), &[0, 1]);
    }

    #[test]
    fn remove_node_renumbers() {
        let g = shapes::path(4, &[0]);
        let h = g.remove_node(1).unwrap();
        assert_eq!(h.node_count(), 3);
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![(1, 2)]);
        assert_eq!(h.components().len(), 2);
    }

    #[test]
    fn insert_node_connects_to_neighbors() {
        let g = shapes::path(2, &[0]);
        let h = g.insert_node(vec![5], &[0, 1]).unwrap();
        assert_eq!(h.node_count(), 3);
        assert_eq!(h.edge_count(), 3);
        assert_eq!(h.attr(2), &[5]);
    }

    #[test]
    fn isolated_nodes_are_legal() {
        let g = AttributedGraph::uniform("g", 3, &[0], [(0, 1)]).unwrap();
        assert!(!g.is_connected());
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn mask_must_lie_inside_graph() {
        let g = shapes::triangle(&[0]);
        let err = LabeledGraph::new(g, 0, BTreeSet::from([3]), 0).unwrap_err();
        assert_eq!(err, GraphError::MaskOutOfRange(3));
    }

    #[test]
    fn style_edges_exclude_content_induced() {
        let g = shapes::path(4, &[0]);
        let lg = LabeledGraph::new(g, 0, BTreeSet::from([0, 1]), 0).unwrap();
        assert_eq!(lg.style_edges(), vec![(1, 2), (2, 3)]);
    }
}
