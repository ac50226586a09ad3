//! The classical sequential greedy spanner.
//!
//! Edges are examined shortest first; an edge is kept only when the spanner
//! built so far has no path between its endpoints within `t` times its
//! length. It is the reference point for the relaxed algorithm and the
//! subroutine that handles the shortest bin.

use std::collections::HashMap;

use serde::Serialize;

use crate::graph::{sparse_dijkstra, WeightedGraph};

/// Relative slack on the stretch when deciding whether an existing path is
/// short enough. Paths of length exactly `t * w` (up to rounding) count as
/// good enough, so `t = 1` drops edges with an equal-length detour.
pub const GREEDY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreedyDecision {
    pub u: usize,
    pub v: usize,
    pub len: f64,
    pub added: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GreedyRun {
    /// Kept edges as `(u, v)` with `u < v`, in examination order.
    pub edges: Vec<(usize, usize)>,
    pub trace: Vec<GreedyDecision>,
}

/// Examination order: length, then lexicographic endpoints.
pub fn greedy_order(edges: &mut [(usize, usize, f64)]) {
    for e in edges.iter_mut() {
        if e.0 > e.1 {
            std::mem::swap(&mut e.0, &mut e.1);
        }
    }
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
}

/// Greedy `t`-spanner of `g`; returns kept edges with `u < v`, sorted.
pub fn seq_greedy(g: &WeightedGraph, t: f64) -> Vec<(usize, usize)> {
    let mut edges = seq_greedy_traced(g, t).edges;
    edges.sort_unstable();
    edges
}

pub fn seq_greedy_traced(g: &WeightedGraph, t: f64) -> GreedyRun {
    greedy_over_edges(g.edges(), t)
}

/// Greedy spanner over an explicit edge list. Only nodes touched by the
/// edges are materialised, so this is cheap on small pieces of a big graph.
pub fn greedy_over_edges(edges: impl IntoIterator<Item = (usize, usize, f64)>, t: f64) -> GreedyRun {
    let mut edges: Vec<_> = edges.into_iter().collect();
    greedy_order(&mut edges);

    let mut local: HashMap<usize, usize> = HashMap::new();
    for &(u, v, _) in &edges {
        let next = local.len();
        local.entry(u).or_insert(next);
        let next = local.len();
        local.entry(v).or_insert(next);
    }
    let mut partial = WeightedGraph::new(local.len());
    let mut run = GreedyRun::default();
    for (u, v, w) in edges {
        let (lu, lv) = (local[&u], local[&v]);
        let limit = (t + GREEDY_SLACK) * w;
        let reach = sparse_dijkstra(lu, limit, |x, out| out.extend_from_slice(partial.neighbors(x)));
        let added = reach.dist(lv).is_none();
        if added {
            partial.add_edge(lu, lv, w);
            run.edges.push((u, v));
        }
        run.trace.push(GreedyDecision { u, v, len: w, added });
    }
    run
}
