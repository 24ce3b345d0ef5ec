//! Exact isomorphism and subgraph-isomorphism by backtracking.
//!
//! Candidate images are filtered by stable WL colours, which are computed
//! with a graph-independent hash and are therefore comparable across graphs.

use thiserror::Error;

use crate::graph::{AttributedGraph, NodeId};
use crate::wl::wl_colours;

/// Largest graph `are_isomorphic` accepts.
pub const ISO_SIZE_LIMIT: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsoError {
    #[error("graph with {0} nodes exceeds the isomorphism size limit of {ISO_SIZE_LIMIT}; screen with wl_hash instead")]
    SizeLimit(usize),
}

fn degree_sequence(g: &AttributedGraph) -> Vec<usize> {
    let mut d: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    d.sort_unstable();
    d
}

/// Node order for backtracking: start from a rarest colour, then grow along
/// edges so each new node is constrained by already mapped neighbours.
fn search_order(g: &AttributedGraph, colours: &[u64]) -> Vec<NodeId> {
    let n = g.node_count();
    let mut freq = std::collections::HashMap::new();
    for &c in colours {
        *freq.entry(c).or_insert(0usize) += 1;
    }
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // Prefer nodes adjacent to many placed nodes, then rare colours, then high degree.
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| {
                let links = g.neighbors(v).iter().filter(|&&u| placed[u]).count();
                (links, std::cmp::Reverse(freq[&colours[v]]), g.degree(v), std::cmp::Reverse(v))
            })
            .expect("unplaced node exists");
        placed[next] = true;
        order.push(next);
    }
    order
}

/// Returns a mapping `m` with `m[v]` the image in `g2` of node `v` of `g1`.
pub fn find_isomorphism(g1: &AttributedGraph, g2: &AttributedGraph) -> Result<Option<Vec<NodeId>>, IsoError> {
    for g in [g1, g2] {
        if g.node_count() > ISO_SIZE_LIMIT {
            return Err(IsoError::SizeLimit(g.node_count()));
        }
    }
    let n = g1.node_count();
    if n != g2.node_count() || g1.edge_count() != g2.edge_count() || degree_sequence(g1) != degree_sequence(g2) {
        return Ok(None);
    }
    let c1 = wl_colours(g1, n).pop().unwrap_or_default();
    let c2 = wl_colours(g2, n).pop().unwrap_or_default();
    let mut s1 = c1.clone();
    let mut s2 = c2.clone();
    s1.sort_unstable();
    s2.sort_unstable();
    if s1 != s2 {
        return Ok(None);
    }
    let order = search_order(g1, &c1);
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let found = extend(g1, g2, &c1, &c2, &order, 0, &mut map, &mut used, true);
    Ok(found.then_some(map))
}

pub fn are_isomorphic(g1: &AttributedGraph, g2: &AttributedGraph) -> Result<bool, IsoError> {
    Ok(find_isomorphism(g1, g2)?.is_some())
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    c1: &[u64],
    c2: &[u64],
    order: &[NodeId],
    depth: usize,
    map: &mut [NodeId],
    used: &mut [bool],
    exact: bool,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for u in 0..g2.node_count() {
        if used[u] || c1[v] != c2[u] {
            continue;
        }
        if !consistent(g1, g2, order, depth, map, v, u, exact) {
            continue;
        }
        map[v] = u;
        used[u] = true;
        if extend(g1, g2, c1, c2, order, depth + 1, map, used, exact) {
            return true;
        }
        map[v] = usize::MAX;
        used[u] = false;
    }
    false
}

/// Checks the new pair `v -> u` against all earlier pairs. With `exact`,
/// non-edges must also map to non-edges.
#[allow(clippy::too_many_arguments)]
fn consistent(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    order: &[NodeId],
    depth: usize,
    map: &[NodeId],
    v: NodeId,
    u: NodeId,
    exact: bool,
) -> bool {
    order[..depth].iter().all(|&w| {
        let e1 = g1.has_edge(v, w);
        let e2 = g2.has_edge(u, map[w]);
        if exact {
            e1 == e2
        } else {
            !e1 || e2
        }
    })
}

/// Whether `pattern` embeds into `host` as an attribute-preserving subgraph.
/// With `induced`, non-edges of the pattern must also be non-edges in the host.
/// Only host nodes accepted by `allowed` may be used.
pub fn find_subgraph(
    host: &AttributedGraph,
    pattern: &AttributedGraph,
    induced: bool,
    allowed: impl Fn(NodeId) -> bool,
) -> Option<Vec<NodeId>> {
    let p = pattern.node_count();
    if p == 0 {
        return Some(Vec::new());
    }
    if p > host.node_count() {
        return None;
    }
    // Attribute equality plus a degree floor stand in for colours here.
    let cp: Vec<u64> = vec![0; p];
    let order = search_order(pattern, &cp);
    let mut map = vec![usize::MAX; p];
    let mut used = vec![false; host.node_count()];
    let allowed: Vec<bool> = (0..host.node_count()).map(&allowed).collect();
    sub_extend(host, pattern, &order, 0, &mut map, &mut used, induced, &allowed).then_some(map)
}

#[allow(clippy::too_many_arguments)]
fn sub_extend(
    host: &AttributedGraph,
    pattern: &AttributedGraph,
    order: &[NodeId],
    depth: usize,
    map: &mut [NodeId],
    used: &mut [bool],
    induced: bool,
    allowed: &[bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for u in 0..host.node_count() {
        if used[u] || !allowed[u] || host.attr(u) != pattern.attr(v) || host.degree(u) < pattern.degree(v) {
            continue;
        }
        if !consistent(pattern, host, order, depth, map, v, u, induced) {
            continue;
        }
        map[v] = u;
        used[u] = true;
        if sub_extend(host, pattern, order, depth + 1, map, used, induced, allowed) {
            return true;
        }
        map[v] = usize::MAX;
        used[u] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::shapes;

    fn brute_force_iso(g1: &AttributedGraph, g2: &AttributedGraph) -> bool {
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for i in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        if g1.node_count() != g2.node_count() || g1.edge_count() != g2.edge_count() {
            return false;
        }
        permutations(g1.node_count()).into_iter().any(|p| {
            (0..g1.node_count()).all(|v| g1.attr(v) == g2.attr(p[v]))
                && g1.edges().all(|(a, b)| g2.has_edge(p[a], p[b]))
        })
    }

    #[test]
    fn identity_is_isomorphism() {
        let g = shapes::house(&[0]);
        assert!(are_isomorphic(&g, &g).unwrap());
    }

    #[test]
    fn triangle_vs_path() {
        let t = shapes::triangle(&[0]);
        let p = shapes::path(3, &[0]);
        assert!(!brute_force_iso(&t, &p));
        assert!(!are_isomorphic(&t, &p).unwrap());
    }

    #[test]
    fn clique_vs_cycle() {
        let k = shapes::clique(4, &[0]);
        let c = shapes::cycle(4, &[0]);
        assert!(!brute_force_iso(&k, &c));
        assert!(!are_isomorphic(&k, &c).unwrap());
    }

    #[test]
    fn mapping_is_returned_for_relabeled_graph() {
        let g = shapes::house(&[0]);
        let h = AttributedGraph::uniform("h", 5, &[0], [(4, 3), (3, 2), (2, 1), (1, 4), (4, 0), (3, 0)]).unwrap();
        let m = find_isomorphism(&g, &h).unwrap().expect("isomorphic");
        for (a, b) in g.edges() {
            assert!(h.has_edge(m[a], m[b]));
        }
    }

    #[test]
    fn regular_graphs_with_equal_wl_colours() {
        // Two triangles vs a hexagon: 1-WL cannot separate them, search must.
        let two = AttributedGraph::uniform("a", 6, &[0], [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        let hex = shapes::cycle(6, &[0]);
        assert_eq!(crate::wl::wl_hash(&two, 3), crate::wl::wl_hash(&hex, 3));
        assert!(!are_isomorphic(&two, &hex).unwrap());
    }

    #[test]
    fn refuses_above_limit() {
        let g = shapes::path(17, &[0]);
        assert_eq!(are_isomorphic(&g, &g).unwrap_err(), IsoError::SizeLimit(17));
    }

    #[test]
    fn subgraph_search() {
        let host = shapes::house(&[0]);
        assert!(find_subgraph(&host, &shapes::triangle(&[0]), true, |_| true).is_some());
        assert!(find_subgraph(&host, &shapes::cycle(4, &[0]), true, |_| true).is_some());
        assert!(find_subgraph(&host, &shapes::clique(4, &[0]), false, |_| true).is_none());
        // The triangle uses the roof node 4.
        assert!(find_subgraph(&host, &shapes::triangle(&[0]), true, |v| v != 4).is_none());
    }
}
