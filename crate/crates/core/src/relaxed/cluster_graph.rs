use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BallSearch, WeightedGraph};

use super::{ClusterCover, PhaseParams};

/// Absolute slack on query answers. A query is declined only when the
/// cluster graph path beats `t |xy|` by at least this much.
pub const ANSWER_SLACK: f64 = 1e-9;

/// Approximation of the spanner in which members hang off their center and
/// nearby centers are joined directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGraph {
    /// `(center, member, sp)` for every non-center node.
    pub intra: Vec<(usize, usize, f64)>,
    /// `(a, b, sp)` with `a < b`, both centers.
    pub inter: Vec<(usize, usize, f64)>,
    pub w_prev: f64,
    graph: WeightedGraph,
}

impl ClusterGraph {
    /// Assembles a cluster graph from explicit edge lists.
    pub fn from_parts(
        n: usize,
        intra: Vec<(usize, usize, f64)>,
        inter: Vec<(usize, usize, f64)>,
        w_prev: f64,
    ) -> Result<Self> {
        let graph = WeightedGraph::from_edges(n, intra.iter().chain(inter.iter()).copied())?;
        Ok(ClusterGraph {
            intra,
            inter,
            w_prev,
            graph,
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn inter_degree(&self, center: usize) -> usize {
        self.inter
            .iter()
            .filter(|e| e.0 == center || e.1 == center)
            .count()
    }

    pub fn max_inter_degree(&self) -> usize {
        let mut deg = vec![0usize; self.graph.n()];
        for &(a, b, _) in &self.inter {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Largest inter-edge weight relative to `(2 delta + 1) W_{i-1}`.
    pub fn max_inter_weight_ratio(&self, delta: f64) -> f64 {
        let bound = (2.0 * delta + 1.0) * self.w_prev;
        self.inter.iter().map(|e| e.2 / bound).fold(0.0, f64::max)
    }
}

/// Builds the cluster graph of `spanner` for the given cover.
///
/// Two centers are joined when they are within `w_prev` in the spanner or
/// some spanner edge runs between their clusters. Every weight is the exact
/// spanner distance between the endpoints.
pub fn build_cluster_graph(
    spanner: &WeightedGraph,
    cover: &ClusterCover,
    w_prev: f64,
) -> Result<ClusterGraph> {
    let n = spanner.n();
    let delta_w = cover.radius;
    let reach = (2.0 * delta_w + w_prev) * (1.0 + 1e-12) + 1e-12;
    let mut crossing = BTreeSet::new();
    for (u, v, _) in spanner.edges() {
        let (a, b) = (cover.member_of[u], cover.member_of[v]);
        if a != b {
            crossing.insert((a.min(b), a.max(b)));
        }
    }
    let intra = (0..n)
        .filter(|&v| !cover.is_center(v))
        .map(|v| (cover.member_of[v], v, cover.dist_to_center[v]))
        .collect();
    let mut inter = Vec::new();
    let mut ball = BallSearch::new(n);
    for &a in &cover.centers {
        ball.run(a, reach, |u, out| out.extend_from_slice(spanner.neighbors(u)));
        let mut near: Vec<usize> = ball
            .settled()
            .iter()
            .copied()
            .filter(|&b| b > a && cover.is_center(b))
            .collect();
        near.sort_unstable();
        for b in near {
            let d = ball.dist(b);
            if d <= w_prev || crossing.contains(&(a, b)) {
                inter.push((a, b, d));
            }
        }
        for &(_, b) in crossing.range((a, 0)..(a + 1, 0)) {
            if ball.dist(b).is_infinite() {
                return Err(Error::Invariant(format!(
                    "clusters of {a} and {b} share a spanner edge but their centers are farther than (2 delta + 1) W apart"
                )));
            }
        }
    }
    ClusterGraph::from_parts(n, intra, inter, w_prev)
}

/// Outcome of one shortest-path query on the cluster graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueryAnswer {
    pub x: usize,
    pub y: usize,
    pub add: bool,
    /// Cluster-graph distance, infinite when it exceeds the query budget.
    pub sp_h: f64,
    /// Hops on the qualifying path when one was found.
    pub hops: Option<usize>,
}

/// Decides whether query edge `{x, y}` must be added: only when the cluster
/// graph has no `xy`-path within `t |xy|`.
pub fn answer_query(h: &ClusterGraph, x: usize, y: usize, len: f64, params: &PhaseParams) -> QueryAnswer {
    let mut ball = BallSearch::new(h.graph.n());
    answer_with(&mut ball, h.graph(), x, y, len, params.t)
}

pub(crate) fn answer_with(
    ball: &mut BallSearch,
    h: &WeightedGraph,
    x: usize,
    y: usize,
    len: f64,
    t: f64,
) -> QueryAnswer {
    let budget = t * len - ANSWER_SLACK;
    ball.run(x, budget, |u, out| out.extend_from_slice(h.neighbors(u)));
    let sp_h = ball.dist(y);
    QueryAnswer {
        x,
        y,
        add: sp_h.is_infinite(),
        sp_h,
        hops: ball.hops(y),
    }
}
