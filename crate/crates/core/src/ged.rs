//! Graph edit distance under node insertion, node deletion, edge deletion,
//! edge addition and categorical feature replacement.
//!
//! Node deletion removes incident edges and node insertion brings its incident
//! edges, each at the cost of one node operation, so the distance is symmetric.
//! It then equals the cheapest partial node mapping: deleted and inserted
//! nodes, attribute mismatches on mapped pairs, and edge mismatches among
//! mapped pairs. The search assigns the nodes of one graph in a fixed order
//! to nodes of the other or to deletion.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::augment::{AugmentationRecord, EditOp};
use crate::graph::{AttributedGraph, NodeId};

/// Largest graph `ged_exact` accepts by default.
pub const EXACT_SIZE_LIMIT: usize = 10;

/// Expansion budget for decisions on graphs above the exact limit.
pub const DEFAULT_EXPANSION_BUDGET: usize = 200_000;

const EPS: f64 = 1e-9;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub node_insertion: f64,
    pub node_deletion: f64,
    pub edge_deletion: f64,
    pub edge_addition: f64,
    pub feature_replacement: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { node_insertion: 1.0, node_deletion: 1.0, edge_deletion: 1.0, edge_addition: 1.0, feature_replacement: 1.0 }
    }
}

impl CostModel {
    pub fn cost(&self, op: &EditOp) -> f64 {
        match op {
            EditOp::NodeDeletion { .. } => self.node_deletion,
            EditOp::NodeInsertion { .. } => self.node_insertion,
            EditOp::EdgeDeletion { .. } => self.edge_deletion,
            EditOp::EdgeAddition { .. } => self.edge_addition,
            EditOp::FeatureReplacement { .. } => self.feature_replacement,
        }
    }

    pub fn path_cost(&self, path: &[EditOp]) -> f64 {
        path.iter().map(|op| self.cost(op)).sum()
    }

    fn validate(&self) -> Result<(), GedError> {
        let all = [self.node_insertion, self.node_deletion, self.edge_deletion, self.edge_addition, self.feature_replacement];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err(GedError::InvalidCost)
        }
    }

    /// Costs for the reverse direction.
    fn swapped(&self) -> Self {
        Self {
            node_insertion: self.node_deletion,
            node_deletion: self.node_insertion,
            edge_deletion: self.edge_addition,
            edge_addition: self.edge_deletion,
            feature_replacement: self.feature_replacement,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GedError {
    #[error("graph with {nodes} nodes exceeds the exact limit of {limit}; use ged_within or ged_bounds")]
    SizeLimit { nodes: usize, limit: usize },
    #[error("edit costs must be finite and non-negative")]
    InvalidCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GedResult {
    pub distance: f64,
    pub witness_path: Vec<EditOp>,
    pub exact: bool,
    /// Image in `g2` of each node of `g1`, `None` for deleted nodes.
    pub mapping: Vec<Option<NodeId>>,
}

/// Outcome of a threshold query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Within,
    Beyond,
    Unknown,
}

impl Decision {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Decision::Within => Some(true),
            Decision::Beyond => Some(false),
            Decision::Unknown => None,
        }
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Decision::Within
        } else {
            Decision::Beyond
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GedBounds {
    pub lower: f64,
    pub upper: f64,
    /// Witness achieving `upper`.
    pub witness: GedResult,
}

impl GedBounds {
    pub fn is_exact(&self) -> bool {
        self.upper - self.lower <= EPS
    }
}

/// Precomputed data for mapping the nodes of `a` into `b`.
struct Search {
    n1: usize,
    n2: usize,
    order: Vec<NodeId>,
    adj1: Vec<Vec<bool>>,
    adj2: Vec<Vec<bool>>,
    eq: Vec<Vec<bool>>,
    attr1: Vec<usize>,
    attr2: Vec<usize>,
    attr_kinds: usize,
    cost: CostModel,
}

fn adjacency_matrix(g: &AttributedGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut m = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        m[u][v] = true;
        m[v][u] = true;
    }
    m
}

/// Breadth-first order from the highest-degree node, so each new node tends
/// to have processed neighbours that constrain its image.
fn processing_order(g: &AttributedGraph) -> Vec<NodeId> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&v| !seen[v]).max_by_key(|&v| (g.degree(v), std::cmp::Reverse(v))).unwrap();
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<NodeId> = g.neighbors(u).iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (std::cmp::Reverse(g.degree(w)), w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order
}

#[derive(Clone)]
struct State {
    f: f64,
    g: f64,
    depth: usize,
    /// Image of `order[i]` for `i < depth`.
    map: Vec<usize>,
    used: Vec<bool>,
    seq: u64,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for State {}
impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for State {
    /// Max-heap order: lowest f, then deepest, then earliest created.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

impl Search {
    fn new(a: &AttributedGraph, b: &AttributedGraph, cost: CostModel) -> Self {
        let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut intern = |x: &[i64]| -> usize {
            let next = ids.len();
            *ids.entry(x.to_vec()).or_insert(next)
        };
        let attr1: Vec<usize> = (0..a.node_count()).map(|v| intern(a.attr(v))).collect();
        let attr2: Vec<usize> = (0..b.node_count()).map(|v| intern(b.attr(v))).collect();
        let attr_kinds = ids.len();
        let eq = attr1.iter().map(|&x| attr2.iter().map(|&y| x == y).collect()).collect();
        Self {
            n1: a.node_count(),
            n2: b.node_count(),
            order: processing_order(a),
            adj1: adjacency_matrix(a),
            adj2: adjacency_matrix(b),
            eq,
            attr1,
            attr2,
            attr_kinds,
            cost,
        }
    }

    /// Cost of mapping `v` to `u` given the first `depth` assignments:
    /// attribute mismatch plus edge mismatches towards mapped predecessors.
    fn match_cost(&self, map: &[usize], depth: usize, v: NodeId, u: NodeId) -> f64 {
        let mut c = if self.eq[v][u] { 0.0 } else { self.cost.feature_replacement };
        for j in 0..depth {
            let uj = map[j];
            if uj == NONE {
                continue;
            }
            let w = self.order[j];
            match (self.adj1[v][w], self.adj2[u][uj]) {
                (true, false) => c += self.cost.edge_deletion,
                (false, true) => c += self.cost.edge_addition,
                _ => {}
            }
        }
        c
    }

    fn heuristic(&self, map: &[usize], used: &[bool], depth: usize) -> f64 {
        let rest1 = &self.order[depth..];
        let rest2: Vec<NodeId> = (0..self.n2).filter(|&u| !used[u]).collect();
        let r1 = rest1.len();
        let r2 = rest2.len();
        if r1 == 0 {
            return r2 as f64 * self.cost.node_insertion;
        }
        let c = &self.cost;

        // Count bound: unmatched nodes plus unavoidable attribute mismatches.
        let mut count = vec![0i64; self.attr_kinds];
        for &v in rest1 {
            count[self.attr1[v]] += 1;
        }
        let mut common = 0usize;
        for &u in &rest2 {
            let k = &mut count[self.attr2[u]];
            if *k > 0 {
                *k -= 1;
                common += 1;
            }
        }
        let m = r1.min(r2);
        let count_bound = [m, common.min(m)]
            .iter()
            .map(|&k| {
                (r1 - k) as f64 * c.node_deletion
                    + (r2 - k) as f64 * c.node_insertion
                    + k.saturating_sub(common) as f64 * c.feature_replacement
            })
            .fold(f64::INFINITY, f64::min);

        // Per-node bounds over costs tied to one remaining node of each side.
        let mut best1 = vec![c.node_deletion; r1];
        let mut best2 = vec![c.node_insertion; r2];
        for (i, &v) in rest1.iter().enumerate() {
            for (k, &u) in rest2.iter().enumerate() {
                let mc = self.match_cost(map, depth, v, u);
                best1[i] = best1[i].min(mc);
                best2[k] = best2[k].min(mc);
            }
        }
        let side1 = best1.iter().sum::<f64>() + r2.saturating_sub(r1) as f64 * c.node_insertion;
        let side2 = best2.iter().sum::<f64>() + r1.saturating_sub(r2) as f64 * c.node_deletion;
        count_bound.max(side1).max(side2)
    }

    fn root(&self) -> State {
        let map = Vec::new();
        let used = vec![false; self.n2];
        let h = self.heuristic(&map, &used, 0);
        State { f: h, g: 0.0, depth: 0, map, used, seq: 0 }
    }

    /// Children of `s`: one per unused image plus deletion.
    fn children(&self, s: &State, seq: &mut u64) -> Vec<State> {
        let v = self.order[s.depth];
        let mut out = Vec::with_capacity(self.n2 + 1);
        let options = (0..self.n2).filter(|&u| !s.used[u]).chain(std::iter::once(NONE));
        for u in options {
            let step = if u == NONE { self.cost.node_deletion } else { self.match_cost(&s.map, s.depth, v, u) };
            let mut map = s.map.clone();
            map.push(u);
            let mut used = s.used.clone();
            if u != NONE {
                used[u] = true;
            }
            let g = s.g + step;
            let depth = s.depth + 1;
            let h = self.heuristic(&map, &used, depth);
            *seq += 1;
            out.push(State { f: g + h, g, depth, map, used, seq: *seq });
        }
        out
    }

    /// Greedy complete mapping, used as the initial upper bound.
    fn greedy(&self) -> State {
        let mut s = self.root();
        while s.depth < self.n1 {
            let v = self.order[s.depth];
            let mut best = (self.cost.node_deletion, NONE);
            for u in (0..self.n2).filter(|&u| !s.used[u]) {
                let mc = self.match_cost(&s.map, s.depth, v, u);
                if mc < best.0 - EPS {
                    best = (mc, u);
                }
            }
            s.g += best.0;
            s.map.push(best.1);
            if best.1 != NONE {
                s.used[best.1] = true;
            }
            s.depth += 1;
        }
        s.f = s.g + self.heuristic(&s.map, &s.used, s.depth);
        s
    }

    fn mapping(&self, s: &State) -> Vec<Option<NodeId>> {
        let mut m = vec![None; self.n1];
        for (i, &u) in s.map.iter().enumerate() {
            if u != NONE {
                m[self.order[i]] = Some(u);
            }
        }
        m
    }

    /// Best-first search. Returns the best complete state found and the
    /// largest proven lower bound; exact when the budget was not exhausted.
    fn astar(&self, budget: Option<usize>) -> (State, f64, bool) {
        let mut best = self.greedy();
        let mut heap = BinaryHeap::new();
        let root = self.root();
        if root.f >= best.f - EPS {
            return (best.clone(), best.f, true);
        }
        heap.push(root);
        let mut seq = 0u64;
        let mut expanded = 0usize;
        while let Some(s) = heap.pop() {
            if s.f >= best.f - EPS {
                return (best.clone(), best.f, true);
            }
            if s.depth == self.n1 {
                return (s.clone(), s.f, true);
            }
            if let Some(b) = budget {
                if expanded >= b {
                    let lower = s.f.min(best.f);
                    return (best, lower, false);
                }
            }
            expanded += 1;
            for child in self.children(&s, &mut seq) {
                if child.f < best.f - EPS {
                    if child.depth == self.n1 {
                        best = child;
                    } else {
                        heap.push(child);
                    }
                }
            }
        }
        let f = best.f;
        (best, f, true)
    }

    /// Exact distance when it is at most `cap`, else `None`. States above the
    /// cap are pruned, so far-apart pairs are rejected quickly.
    fn capped(&self, cap: f64) -> Option<State> {
        let greedy = self.greedy();
        let mut best: Option<State> = (greedy.f <= cap + EPS).then_some(greedy);
        let mut bound = best.as_ref().map_or(cap + EPS, |b| b.f - EPS);
        let mut heap = BinaryHeap::new();
        let root = self.root();
        if root.f < bound || (best.is_none() && root.f <= cap + EPS) {
            heap.push(root);
        }
        let mut seq = 0u64;
        while let Some(s) = heap.pop() {
            if s.depth == self.n1 {
                return Some(s);
            }
            for child in self.children(&s, &mut seq) {
                let keep = if best.is_some() { child.f < bound } else { child.f <= bound };
                if !keep {
                    continue;
                }
                if child.depth == self.n1 {
                    bound = child.f - EPS;
                    best = Some(child);
                } else {
                    heap.push(child);
                }
            }
            if let Some(b) = &best {
                if heap.peek().is_none_or(|top| top.f >= b.f - EPS) {
                    break;
                }
            }
        }
        best
    }

    /// Depth-first branch and bound for `distance <= threshold`.
    fn within(&self, threshold: f64, budget: Option<usize>) -> Decision {
        let root = self.root();
        if root.f > threshold + EPS {
            return Decision::Beyond;
        }
        if self.greedy().f <= threshold + EPS {
            return Decision::Within;
        }
        let mut expanded = 0usize;
        let mut seq = 0u64;
        let mut stack = vec![root];
        while let Some(s) = stack.pop() {
            if s.depth == self.n1 {
                if s.f <= threshold + EPS {
                    return Decision::Within;
                }
                continue;
            }
            if let Some(b) = budget {
                if expanded >= b {
                    return Decision::Unknown;
                }
            }
            expanded += 1;
            let mut kids: Vec<State> =
                self.children(&s, &mut seq).into_iter().filter(|c| c.f <= threshold + EPS).collect();
            // Best child last so it is popped first.
            kids.sort();
            stack.extend(kids);
        }
        Decision::Beyond
    }
}

/// Orients the problem so the larger graph's nodes are assigned.
struct Oriented {
    search: Search,
    swapped: bool,
}

fn orient(g1: &AttributedGraph, g2: &AttributedGraph, cost: &CostModel) -> Oriented {
    if g1.node_count() >= g2.node_count() {
        Oriented { search: Search::new(g1, g2, *cost), swapped: false }
    } else {
        Oriented { search: Search::new(g2, g1, cost.swapped()), swapped: true }
    }
}

fn invert(mapping: &[Option<NodeId>], n: usize) -> Vec<Option<NodeId>> {
    let mut out = vec![None; n];
    for (v, u) in mapping.iter().enumerate() {
        if let Some(u) = u {
            out[*u] = Some(v);
        }
    }
    out
}

/// Edit path realizing `mapping` from `g1` to a graph isomorphic to `g2`:
/// feature replacements and edge edits among mapped nodes, deletions in
/// descending index order, then insertions carrying their edges.
pub fn witness_path(g1: &AttributedGraph, g2: &AttributedGraph, mapping: &[Option<NodeId>]) -> Vec<EditOp> {
    let n1 = g1.node_count();
    let mut path = Vec::new();
    for v in 0..n1 {
        if let Some(u) = mapping[v] {
            if g1.attr(v) != g2.attr(u) {
                path.push(EditOp::FeatureReplacement { node: v, attrs: g2.attr(u).to_vec() });
            }
        }
    }
    for v in 0..n1 {
        for w in v + 1..n1 {
            if let (Some(a), Some(b)) = (mapping[v], mapping[w]) {
                match (g1.has_edge(v, w), g2.has_edge(a, b)) {
                    (true, false) => path.push(EditOp::EdgeDeletion { u: v, v: w }),
                    (false, true) => path.push(EditOp::EdgeAddition { u: v, v: w }),
                    _ => {}
                }
            }
        }
    }
    for v in (0..n1).rev() {
        if mapping[v].is_none() {
            path.push(EditOp::NodeDeletion { node: v });
        }
    }
    // Current index of each g2 node present in the working graph.
    let mut position = vec![NONE; g2.node_count()];
    let mut next = 0;
    for v in 0..n1 {
        if let Some(u) = mapping[v] {
            position[u] = next;
            next += 1;
        }
    }
    for u in 0..g2.node_count() {
        if position[u] != NONE {
            continue;
        }
        let mut neighbors: Vec<NodeId> =
            g2.neighbors(u).iter().filter(|&&w| position[w] != NONE).map(|&w| position[w]).collect();
        neighbors.sort_unstable();
        path.push(EditOp::NodeInsertion { attrs: g2.attr(u).to_vec(), neighbors });
        position[u] = next;
        next += 1;
    }
    path
}

fn result_from(o: &Oriented, g1: &AttributedGraph, g2: &AttributedGraph, s: &State, exact: bool) -> GedResult {
    let m = o.search.mapping(s);
    let mapping = if o.swapped { invert(&m, g1.node_count()) } else { m };
    GedResult { distance: s.f, witness_path: witness_path(g1, g2, &mapping), exact, mapping }
}

pub fn ged_exact(g1: &AttributedGraph, g2: &AttributedGraph, cost: &CostModel) -> Result<GedResult, GedError> {
    ged_exact_with_limit(g1, g2, cost, EXACT_SIZE_LIMIT)
}

pub fn ged_exact_with_limit(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    cost: &CostModel,
    limit: usize,
) -> Result<GedResult, GedError> {
    cost.validate()?;
    let nodes = g1.node_count().max(g2.node_count());
    if nodes > limit {
        return Err(GedError::SizeLimit { nodes, limit });
    }
    let o = orient(g1, g2, cost);
    let (s, _, _) = o.search.astar(None);
    Ok(result_from(&o, g1, g2, &s, true))
}

/// Exact distance if it is at most `cap`, `None` if it is larger.
pub fn ged_capped(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    cost: &CostModel,
    cap: f64,
) -> Result<Option<GedResult>, GedError> {
    cost.validate()?;
    let o = orient(g1, g2, cost);
    Ok(o.search.capped(cap).map(|s| result_from(&o, g1, g2, &s, true)))
}

/// Lower and upper bounds from a best-first search capped at `budget`
/// expansions; equal bounds mean the distance is exact.
pub fn ged_bounds(g1: &AttributedGraph, g2: &AttributedGraph, cost: &CostModel, budget: usize) -> Result<GedBounds, GedError> {
    cost.validate()?;
    let o = orient(g1, g2, cost);
    let (s, lower, exact) = o.search.astar(Some(budget));
    let witness = result_from(&o, g1, g2, &s, exact);
    Ok(GedBounds { lower, upper: s.f, witness })
}

/// Whether `GED(g1, g2) <= threshold`. Sound and complete up to the exact
/// size limit; above it the search runs with an expansion budget and answers
/// `Unknown` when the budget runs out.
pub fn ged_within(g1: &AttributedGraph, g2: &AttributedGraph, threshold: f64, cost: &CostModel) -> Decision {
    ged_within_with(g1, g2, threshold, cost, EXACT_SIZE_LIMIT, DEFAULT_EXPANSION_BUDGET)
}

pub fn ged_within_with(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    threshold: f64,
    cost: &CostModel,
    size_limit: usize,
    budget: usize,
) -> Decision {
    if cost.validate().is_err() || threshold < 0.0 {
        return Decision::Unknown;
    }
    let o = orient(g1, g2, cost);
    let within_limit = g1.node_count().max(g2.node_count()) <= size_limit;
    let d = o.search.within(threshold, if within_limit { None } else { Some(budget) });
    if within_limit {
        debug_assert_ne!(d, Decision::Unknown);
        Decision::from_bool(d == Decision::Within)
    } else {
        d
    }
}

/// Co-occurrence budget: the smallest of the node and edge budgets of both graphs.
pub fn co_occurrence_budget(gamma: f64, natural: &AttributedGraph, augmented: &AttributedGraph) -> usize {
    use crate::augment::floor_fraction;
    [natural.node_count(), natural.edge_count(), augmented.node_count(), augmented.edge_count()]
        .into_iter()
        .map(|s| floor_fraction(gamma, s))
        .min()
        .unwrap_or(0)
}

/// Whether two augmented graphs may share a parent: `GED <= 2 * delta`.
pub fn co_occurring(a1: &AttributedGraph, a2: &AttributedGraph, delta: usize) -> Decision {
    ged_within(a1, a2, 2.0 * delta as f64, &CostModel::default())
}

/// Provenance form: same parent and both edits within budget.
pub fn provenance_co_occurring(r1: &AugmentationRecord, r2: &AugmentationRecord, delta: usize) -> bool {
    r1.parent_id == r2.parent_id && r1.edit_path.len() <= delta && r2.edit_path.len() <= delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::replay;
    use crate::graph::shapes;
    use crate::iso::are_isomorphic;

    /// Exhaustive minimum over all partial injections of the node-mapping cost.
    fn brute_force(g1: &AttributedGraph, g2: &AttributedGraph) -> f64 {
        fn rec(v: usize, g1: &AttributedGraph, g2: &AttributedGraph, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, best: &mut f64) {
            if v == g1.node_count() {
                let mut c = 0.0;
                for (a, m) in map.iter().enumerate() {
                    match m {
                        None => c += 1.0,
                        Some(u) => c += f64::from(u8::from(g1.attr(a) != g2.attr(*u))),
                    }
                }
                c += used.iter().filter(|&&x| !x).count() as f64;
                for a in 0..map.len() {
                    for b in a + 1..map.len() {
                        if let (Some(x), Some(y)) = (map[a], map[b]) {
                            c += f64::from(u8::from(g1.has_edge(a, b) != g2.has_edge(x, y)));
                        }
                    }
                }
                *best = best.min(c);
                return;
            }
            map.push(None);
            rec(v + 1, g1, g2, map, used, best);
            map.pop();
            for u in 0..g2.node_count() {
                if !used[u] {
                    used[u] = true;
                    map.push(Some(u));
                    rec(v + 1, g1, g2, map, used, best);
                    map.pop();
                    used[u] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(0, g1, g2, &mut Vec::new(), &mut vec![false; g2.node_count()], &mut best);
        best
    }

    fn check(g1: &AttributedGraph, g2: &AttributedGraph, expected: f64) {
        let cm = CostModel::default();
        let r = ged_exact(g1, g2, &cm).unwrap();
        assert_eq!(r.distance, expected);
        assert_eq!(cm.path_cost(&r.witness_path), r.distance);
        let out = replay(g1, &r.witness_path).unwrap();
        assert!(are_isomorphic(&out, g2).unwrap());
    }

    #[test]
    fn isomorphic_copy_is_zero() {
        let g = shapes::house(&[0]);
        let h = AttributedGraph::uniform("h", 5, &[0], [(4, 3), (3, 2), (2, 1), (1, 4), (4, 0), (3, 0)]).unwrap();
        check(&g, &h, 0.0);
    }

    #[test]
    fn triangle_minus_edge() {
        let t = shapes::triangle(&[0]);
        let p = t.remove_edge(0, 1).unwrap();
        assert_eq!(brute_force(&t, &p), 1.0);
        check(&t, &p, 1.0);
        check(&p, &t, 1.0);
        assert_eq!(ged_within(&t, &p, 0.0, &CostModel::default()), Decision::Beyond);
        assert_eq!(ged_within(&t, &t, 0.0, &CostModel::default()), Decision::Within);
    }

    #[test]
    fn one_feature_replacement() {
        let p = shapes::path(3, &[0]);
        let q = p.replace_attrs(1, vec![7]).unwrap();
        assert_eq!(brute_force(&p, &q), 1.0);
        check(&p, &q, 1.0);
    }

    #[test]
    fn insertion_brings_edges() {
        let t = shapes::triangle(&[0]);
        let e = shapes::path(2, &[0]);
        check(&t, &e, 1.0);
        check(&e, &t, 1.0);
    }

    #[test]
    fn empty_graphs() {
        let e = AttributedGraph::empty("e");
        check(&e, &e, 0.0);
        check(&e, &shapes::path(3, &[0]), 3.0);
        check(&shapes::path(3, &[0]), &e, 3.0);
    }

    #[test]
    fn matches_brute_force_on_small_pairs() {
        let graphs = vec![
            shapes::triangle(&[0]),
            shapes::path(4, &[0]),
            shapes::star(4, &[1]),
            shapes::cycle(4, &[0]),
            shapes::clique(4, &[0]),
            shapes::house(&[0]).replace_attrs(2, vec![1]).unwrap(),
            AttributedGraph::uniform("iso", 3, &[0], []).unwrap(),
        ];
        for a in &graphs {
            for b in &graphs {
                check(a, b, brute_force(a, b));
            }
        }
    }

    #[test]
    fn lower_bound_rejects_many_attribute_mismatches() {
        let a = AttributedGraph::uniform("a", 5, &[0], []).unwrap();
        let b = AttributedGraph::uniform("b", 5, &[1], []).unwrap();
        let root = Search::new(&a, &b, CostModel::default()).root();
        assert!(root.f >= 5.0);
        assert_eq!(ged_within(&a, &b, 2.0, &CostModel::default()), Decision::Beyond);
    }

    #[test]
    fn size_limit_refusal_and_bounds() {
        let g = shapes::path(12, &[0]);
        let h = shapes::cycle(12, &[0]);
        assert!(matches!(ged_exact(&g, &h, &CostModel::default()), Err(GedError::SizeLimit { nodes: 12, .. })));
        assert_eq!(ged_within(&g, &h, 1.0, &CostModel::default()), Decision::Within);
        let b = ged_bounds(&g, &h, &CostModel::default(), 10_000).unwrap();
        assert!(b.lower <= 1.0 && b.upper >= 1.0);
    }

    #[test]
    fn capped_distance() {
        let a = shapes::clique(4, &[0]);
        let b = shapes::path(4, &[0]);
        let exact = ged_exact(&a, &b, &CostModel::default()).unwrap().distance;
        assert_eq!(exact, 3.0);
        for cap in 0..6 {
            let got = ged_capped(&a, &b, &CostModel::default(), cap as f64).unwrap().map(|r| r.distance);
            assert_eq!(got, (exact <= cap as f64).then_some(exact));
        }
    }

    #[test]
    fn non_unit_costs() {
        let cm = CostModel { feature_replacement: 5.0, ..CostModel::default() };
        let p = shapes::path(2, &[0]);
        let q = p.replace_attrs(1, vec![1]).unwrap();
        // Delete and re-insert (cost 2) beats replacement (cost 5).
        let r = ged_exact(&p, &q, &cm).unwrap();
        assert_eq!(r.distance, 2.0);
        assert_eq!(cm.path_cost(&r.witness_path), 2.0);
    }

    #[test]
    fn cooccurrence_budget_uses_minimum() {
        let parent = shapes::house(&[0]);
        let child = parent.remove_node(4).unwrap();
        assert_eq!(co_occurrence_budget(0.4, &parent, &child), 1);
    }
}
