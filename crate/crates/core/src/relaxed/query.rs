use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{angle_from_distances, UbgInstance};
use crate::graph::WeightedGraph;

use super::{ClusterCover, LenEdge, PhaseParams};

/// Whether some kept edge `{u, z}` points within `theta` of `v` with `z`
/// close to `v`. `dist_to_v(z)` reports `|vz|` when it is known.
pub(crate) fn covered_at(
    u: usize,
    v: usize,
    len_uv: f64,
    kept_at_u: &[(usize, f64)],
    mut dist_to_v: impl FnMut(usize) -> Option<f64>,
    params: &PhaseParams,
) -> Result<bool> {
    for &(z, len_uz) in kept_at_u {
        if z == v {
            continue;
        }
        let Some(len_vz) = dist_to_v(z) else { continue };
        if len_vz > params.alpha {
            continue;
        }
        let angle = angle_from_distances(len_uv, len_uz, len_vz)
            .map_err(|e| Error::Invariant(format!("angle at {u} for ({u},{v}) via {z}: {e}")))?;
        if angle <= params.theta {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Czumaj-Zhao covering test for `{u, v}` against the spanner of the
/// previous phase.
pub fn is_covered_edge(
    u: usize,
    v: usize,
    spanner: &WeightedGraph,
    params: &PhaseParams,
    inst: &UbgInstance,
) -> Result<bool> {
    let len = inst.dist(u, v);
    Ok(
        covered_at(u, v, len, spanner.neighbors(u), |z| Some(inst.dist(v, z)), params)?
            || covered_at(v, u, len, spanner.neighbors(v), |z| Some(inst.dist(u, z)), params)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueryEdge {
    /// Endpoints with `x < y`.
    pub x: usize,
    pub y: usize,
    pub len: f64,
    /// Centers of the clusters holding `x` and `y`.
    pub cx: usize,
    pub cy: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QuerySelection {
    pub covered: usize,
    pub candidates: usize,
    /// One edge per cluster pair, ordered by the pair.
    pub queries: Vec<QueryEdge>,
    /// Number of query edges incident on each cluster, keyed by center.
    pub per_cluster: BTreeMap<usize, usize>,
}

impl QuerySelection {
    pub fn max_per_cluster(&self) -> usize {
        self.per_cluster.values().copied().max().unwrap_or(0)
    }
}

/// `t |xy| - sp(cx, x) - sp(cy, y)`.
pub(crate) fn query_objective(t: f64, len: f64, to_cx: f64, to_cy: f64) -> f64 {
    t * len - to_cx - to_cy
}

/// Keeps `cand` if it beats `best` on the objective, ties going to the
/// lexicographically smaller edge.
pub(crate) fn better_query(cand: &QueryEdge, best: &QueryEdge) -> bool {
    cand.objective < best.objective
        || (cand.objective == best.objective && (cand.x, cand.y) < (best.x, best.y))
}

/// Picks one query edge per pair of clusters among the non-covered edges of
/// the bin.
pub fn select_query_edges(
    bin: &[LenEdge],
    cover: &ClusterCover,
    spanner: &WeightedGraph,
    params: &PhaseParams,
    inst: &UbgInstance,
) -> Result<QuerySelection> {
    let mut sel = QuerySelection::default();
    let mut best: BTreeMap<(usize, usize), QueryEdge> = BTreeMap::new();
    for &(x, y, len) in bin {
        if is_covered_edge(x, y, spanner, params, inst)? {
            sel.covered += 1;
            continue;
        }
        sel.candidates += 1;
        let (cx, cy) = (cover.member_of[x], cover.member_of[y]);
        if cx == cy {
            return Err(Error::Invariant(format!(
                "edge ({x},{y}) of length {len} lies inside the cluster of {cx}"
            )));
        }
        let cand = QueryEdge {
            x,
            y,
            len,
            cx,
            cy,
            objective: query_objective(params.t, len, cover.dist_to_center[x], cover.dist_to_center[y]),
        };
        best.entry((cx.min(cy), cx.max(cy)))
            .and_modify(|b| {
                if better_query(&cand, b) {
                    *b = cand;
                }
            })
            .or_insert(cand);
    }
    for q in best.into_values() {
        *sel.per_cluster.entry(q.cx).or_default() += 1;
        *sel.per_cluster.entry(q.cy).or_default() += 1;
        sel.queries.push(q);
    }
    Ok(sel)
}
