//! 1-Weisfeiler-Lehman colour refinement and graph hashing.
//!
//! Neighbour multisets are hashed after sorting, so the digest does not depend
//! on node order. The digest is a screening tool: different digests certify
//! non-isomorphism, equal digests do not certify isomorphism.

use crate::graph::AttributedGraph;
use crate::seed::mix64;

fn hash_seq(init: u64, items: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = mix64(init);
    for x in items {
        h = mix64(h ^ x).wrapping_add(0x2545_F491_4F6C_DD1D);
    }
    h
}

fn initial_colour(attr: &[i64]) -> u64 {
    hash_seq(0xA77E, attr.iter().map(|&a| a as u64))
}

/// Node colours after each round; entry `0` holds the attribute colours and
/// entry `i` the colours after `i` refinement rounds.
pub fn wl_colours(g: &AttributedGraph, iterations: usize) -> Vec<Vec<u64>> {
    let n = g.node_count();
    let mut rounds = Vec::with_capacity(iterations + 1);
    rounds.push((0..n).map(|v| initial_colour(g.attr(v))).collect::<Vec<_>>());
    for round in 0..iterations {
        let prev = &rounds[round];
        let mut next = Vec::with_capacity(n);
        let mut buf = Vec::new();
        for v in 0..n {
            buf.clear();
            buf.extend(g.neighbors(v).iter().map(|&u| prev[u]));
            buf.sort_unstable();
            next.push(hash_seq(prev[v], buf.iter().copied()));
        }
        rounds.push(next);
    }
    rounds
}

/// 64-bit digest of the colour multisets of every round.
pub fn wl_hash(g: &AttributedGraph, iterations: usize) -> u64 {
    let rounds = wl_colours(g, iterations);
    let mut h = hash_seq(0x57A7, [g.node_count() as u64, g.edge_count() as u64]);
    for colours in &rounds {
        let mut sorted = colours.clone();
        sorted.sort_unstable();
        h = hash_seq(h, sorted);
    }
    h
}
