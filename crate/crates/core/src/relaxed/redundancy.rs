use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{BallSearch, WeightedGraph};

use super::{ClusterGraph, LenEdge, PhaseParams};

/// Absolute slack on the redundancy inequalities. A pair counts as mutually
/// redundant only when both hold with this much room, so rounding never
/// removes an edge that is needed.
pub const REDUNDANCY_SLACK: f64 = 1e-9;

/// `min(sp(u_a, u_b) + sp(v_a, v_b), sp(u_a, v_b) + sp(v_a, u_b))`.
pub fn pairing_distance(
    mut sp: impl FnMut(usize, usize) -> f64,
    a: (usize, usize),
    b: (usize, usize),
) -> f64 {
    let straight = sp(a.0, b.0) + sp(a.1, b.1);
    let crossed = sp(a.0, b.1) + sp(a.1, b.0);
    straight.min(crossed)
}

/// Both redundancy conditions for edges of lengths `len_a` and `len_b`
/// whose endpoints are `pairing` apart in the cluster graph.
pub fn mutually_redundant(pairing: f64, len_a: f64, len_b: f64, t1: f64) -> bool {
    pairing + len_b <= t1 * len_a - REDUNDANCY_SLACK && pairing + len_a <= t1 * len_b - REDUNDANCY_SLACK
}

/// Maximal independent set taken greedily in index order.
pub fn greedy_mis(n: usize, adjacency: &[Vec<usize>]) -> Vec<bool> {
    let mut inside = vec![false; n];
    for v in 0..n {
        if !adjacency[v].iter().any(|&u| inside[u]) {
            inside[v] = true;
        }
    }
    inside
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RedundancyOutcome {
    /// Mutually redundant pairs as indices into the added edges, `i < j`.
    pub pairs: Vec<(usize, usize)>,
    /// Added edges that take part in at least one pair.
    pub conflicted: Vec<usize>,
    /// Conflicted edges chosen by the independent set.
    pub kept: Vec<usize>,
    pub removed: Vec<(usize, usize)>,
}

/// Distances in `h` from every endpoint of `added` to the other endpoints,
/// up to `budget`.
pub(crate) fn endpoint_distances(
    h: &WeightedGraph,
    added: &[LenEdge],
    budget: f64,
) -> BTreeMap<(usize, usize), f64> {
    let mut ends: Vec<usize> = added.iter().flat_map(|e| [e.0, e.1]).collect();
    ends.sort_unstable();
    ends.dedup();
    let mut is_end = vec![false; h.n()];
    for &v in &ends {
        is_end[v] = true;
    }
    let mut ball = BallSearch::new(h.n());
    let mut out = BTreeMap::new();
    for &s in &ends {
        ball.run(s, budget, |u, o| o.extend_from_slice(h.neighbors(u)));
        for &v in ball.settled() {
            if is_end[v] {
                out.insert((s, v), ball.dist(v));
            }
        }
    }
    out
}

/// Mutually redundant pairs among `added`, given endpoint distances.
pub(crate) fn redundant_pairs(
    added: &[LenEdge],
    sp: &BTreeMap<(usize, usize), f64>,
    t1: f64,
) -> Vec<(usize, usize)> {
    let lookup = |u: usize, v: usize| sp.get(&(u, v)).copied().unwrap_or(f64::INFINITY);
    let mut pairs = Vec::new();
    for (i, a) in added.iter().enumerate() {
        for (j, b) in added.iter().enumerate().skip(i + 1) {
            let d = pairing_distance(lookup, (a.0, a.1), (b.0, b.1));
            if mutually_redundant(d, a.2, b.2, t1) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Drops every conflicted addition outside a greedy independent set of the
/// conflict graph. `added` must be sorted by endpoints; that order is the
/// priority of the independent set.
pub fn remove_redundant(added: &[LenEdge], h: &ClusterGraph, params: &PhaseParams) -> RedundancyOutcome {
    let longest = added.iter().map(|e| e.2).fold(0.0, f64::max);
    let sp = endpoint_distances(h.graph(), added, params.t1 * longest);
    let pairs = redundant_pairs(added, &sp, params.t1);
    resolve_conflicts(added, pairs)
}

pub(crate) fn resolve_conflicts(added: &[LenEdge], pairs: Vec<(usize, usize)>) -> RedundancyOutcome {
    let mut adjacency = vec![Vec::new(); added.len()];
    for &(i, j) in &pairs {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    let conflicted: Vec<usize> = (0..added.len()).filter(|&i| !adjacency[i].is_empty()).collect();
    // non-conflicted nodes have no neighbours, so they would always join;
    // only the conflicted part matters
    let inside = greedy_mis(added.len(), &adjacency);
    let kept = conflicted.iter().copied().filter(|&i| inside[i]).collect();
    let removed = conflicted
        .iter()
        .filter(|&&i| !inside[i])
        .map(|&i| (added[i].0, added[i].1))
        .collect();
    RedundancyOutcome {
        pairs,
        conflicted,
        kept,
        removed,
    }
}
