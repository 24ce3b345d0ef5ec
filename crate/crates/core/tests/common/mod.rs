#![allow(dead_code)]

use datalab_core::AttributedGraph;
use proptest::prelude::*;

/// Graphs with `lo..=hi` nodes, single attributes in `0..attr_values`, and a
/// random subset of node pairs as edges.
pub fn arb_graph(lo: usize, hi: usize, attr_values: i64) -> impl Strategy<Value = AttributedGraph> {
    (lo..=hi).prop_flat_map(move |n| {
        let pairs = n * n.saturating_sub(1) / 2;
        (prop::collection::vec(0..attr_values, n), prop::collection::vec(any::<bool>(), pairs)).prop_map(move |(attrs, mask)| {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if mask[k] {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            AttributedGraph::new("g", attrs.into_iter().map(|a| vec![a]).collect(), edges).unwrap()
        })
    })
}

/// Connected graphs: a random spanning tree plus extra edges.
pub fn arb_connected(lo: usize, hi: usize, attr_values: i64) -> impl Strategy<Value = AttributedGraph> {
    (arb_graph(lo, hi, attr_values), any::<u64>()).prop_map(|(g, s)| {
        let n = g.node_count();
        let mut edges: Vec<(usize, usize)> = g.edges().collect();
        let mut x = s;
        for v in 1..n {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (x >> 33) as usize % v;
            edges.push((u, v));
        }
        edges.sort_unstable();
        edges.dedup();
        AttributedGraph::new("g", g.attrs().to_vec(), edges).unwrap()
    })
}

pub fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// `g` with node `v` renamed to `perm[v]`.
pub fn relabel(g: &AttributedGraph, perm: &[usize]) -> AttributedGraph {
    let mut attrs = vec![Vec::new(); g.node_count()];
    for v in 0..g.node_count() {
        attrs[perm[v]] = g.attr(v).to_vec();
    }
    let edges: Vec<(usize, usize)> = g.edges().map(|(u, v)| (perm[u], perm[v])).collect();
    AttributedGraph::new(g.id(), attrs, edges).unwrap()
}
