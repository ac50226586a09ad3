use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{BallSearch, WeightedGraph};

/// Assignment of every node to a cluster center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterCover {
    /// Centers in increasing id order.
    pub centers: Vec<usize>,
    pub member_of: Vec<usize>,
    /// Spanner distance from each node to its center.
    pub dist_to_center: Vec<f64>,
    pub radius: f64,
}

impl ClusterCover {
    pub fn is_center(&self, v: usize) -> bool {
        self.member_of[v] == v
    }

    /// Members of each cluster (including the center), keyed by center.
    pub fn clusters(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in self.member_of.iter().enumerate() {
            out.entry(c).or_default().push(v);
        }
        out
    }
}

/// Greedy cover of `spanner` with clusters of the given radius.
///
/// The smallest uncovered id becomes a center and claims every still
/// uncovered node within `radius`; distances are measured in the whole
/// spanner, so later centers are farther than `radius` from earlier ones.
pub fn compute_cluster_cover(spanner: &WeightedGraph, radius: f64) -> ClusterCover {
    let n = spanner.n();
    let mut member_of = vec![usize::MAX; n];
    let mut dist_to_center = vec![f64::INFINITY; n];
    let mut centers = Vec::new();
    let mut ball = BallSearch::new(n);
    for c in 0..n {
        if member_of[c] != usize::MAX {
            continue;
        }
        centers.push(c);
        ball.run(c, radius, |u, out| out.extend_from_slice(spanner.neighbors(u)));
        for &v in ball.settled() {
            if member_of[v] == usize::MAX {
                member_of[v] = c;
                dist_to_center[v] = ball.dist(v);
            }
        }
    }
    ClusterCover {
        centers,
        member_of,
        dist_to_center,
        radius,
    }
}
