//! Exhaustive edit-sequence search: the fewest unit-cost edits (node
//! deletion with its edges, node insertion with chosen neighbours, edge
//! deletion or addition, attribute replacement) turning one graph into an
//! isomorph of another. Edits are invertible at equal cost, so two balls of
//! radius `r` around each graph cover every distance up to `2r`.

#![allow(dead_code)]

use std::collections::HashMap;

use datalab_core::AttributedGraph;

/// Sorted per-node (attributes, degree, neighbour degrees).
type Signature = Vec<(Vec<i64>, usize, Vec<usize>)>;

/// Degree-and-attribute signature used to bucket graphs before the exact check.
fn signature(g: &AttributedGraph) -> Signature {
    let mut sig: Signature = (0..g.node_count())
        .map(|v| {
            let mut nd: Vec<usize> = g.neighbors(v).iter().map(|&w| g.degree(w)).collect();
            nd.sort_unstable();
            (g.attr(v).to_vec(), g.degree(v), nd)
        })
        .collect();
    sig.sort();
    sig
}

/// Isomorphism by backtracking over attribute- and degree-compatible images.
pub fn isomorphic(a: &AttributedGraph, b: &AttributedGraph) -> bool {
    fn rec(a: &AttributedGraph, b: &AttributedGraph, map: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let v = map.len();
        if v == a.node_count() {
            return true;
        }
        for w in 0..b.node_count() {
            if used[w] || a.attr(v) != b.attr(w) || a.degree(v) != b.degree(w) {
                continue;
            }
            if (0..v).any(|u| a.has_edge(u, v) != b.has_edge(map[u], w)) {
                continue;
            }
            used[w] = true;
            map.push(w);
            if rec(a, b, map, used) {
                return true;
            }
            map.pop();
            used[w] = false;
        }
        false
    }
    a.node_count() == b.node_count()
        && a.edge_count() == b.edge_count()
        && rec(a, b, &mut Vec::new(), &mut vec![false; b.node_count()])
}

/// Graphs reachable in one edit, with attributes drawn from `alphabet`.
pub fn neighbours(g: &AttributedGraph, alphabet: &[Vec<i64>]) -> Vec<AttributedGraph> {
    let n = g.node_count();
    let mut out = Vec::new();
    for v in 0..n {
        out.push(g.remove_node(v).unwrap());
        for a in alphabet {
            if a.as_slice() != g.attr(v) {
                out.push(g.replace_attrs(v, a.clone()).unwrap());
            }
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            out.push(g.toggle_edges(&[(u, v)]).unwrap());
        }
    }
    for mask in 0u32..(1 << n) {
        let nbrs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        for a in alphabet {
            out.push(g.insert_node(a.clone(), &nbrs).unwrap());
        }
    }
    out
}

/// Isomorphism classes within `radius` edits of `g`, with their distance.
pub struct Ball {
    buckets: HashMap<Signature, Vec<(AttributedGraph, usize)>>,
}

impl Ball {
    pub fn new(g: &AttributedGraph, radius: usize, alphabet: &[Vec<i64>]) -> Self {
        let mut ball = Ball { buckets: HashMap::new() };
        ball.insert(g.clone(), 0);
        let mut frontier = vec![g.clone()];
        for d in 1..=radius {
            let mut next = Vec::new();
            for h in &frontier {
                for x in neighbours(h, alphabet) {
                    if ball.insert(x.clone(), d) {
                        next.push(x);
                    }
                }
            }
            frontier = next;
        }
        ball
    }

    /// Adds `g` unless an isomorph is already present.
    fn insert(&mut self, g: AttributedGraph, d: usize) -> bool {
        let bucket = self.buckets.entry(signature(&g)).or_default();
        if bucket.iter().any(|(h, _)| isomorphic(h, &g)) {
            return false;
        }
        bucket.push((g, d));
        true
    }

    pub fn distance_to(&self, g: &AttributedGraph) -> Option<usize> {
        self.buckets.get(&signature(g))?.iter().find(|(h, _)| isomorphic(h, g)).map(|&(_, d)| d)
    }

    pub fn members(&self) -> impl Iterator<Item = &(AttributedGraph, usize)> {
        self.buckets.values().flatten()
    }
}

/// Exact edit distance if it is at most `2 * radius`, else `None`.
pub fn edit_distance(g1: &AttributedGraph, g2: &AttributedGraph, radius: usize) -> Option<usize> {
    let mut alphabet: Vec<Vec<i64>> = g1.attrs().iter().chain(g2.attrs()).cloned().collect();
    alphabet.sort();
    alphabet.dedup();
    if alphabet.is_empty() {
        alphabet.push(vec![0]);
    }
    let b1 = Ball::new(g1, radius, &alphabet);
    let b2 = Ball::new(g2, radius, &alphabet);
    b2.members().filter_map(|(h, d2)| b1.distance_to(h).map(|d1| d1 + d2)).min()
}
