use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::UbgInstance;
use crate::graph::{BallSearch, WeightedGraph};

use super::cluster_graph::answer_with;
use super::{
    bin_edges, build_cluster_graph, compute_cluster_cover, derive_params, process_short_edges,
    remove_redundant, select_query_edges, ClusterCover, ClusterGraph, LenEdge, PhaseParams,
    QueryAnswer, QuerySelection, RedundancyOutcome,
};

/// Per-phase counters. Phase 0 only fills `bin_size` and `added`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub i: usize,
    pub bin_size: usize,
    pub queries: usize,
    pub added: usize,
    pub removed: usize,
    pub covered: usize,
    pub clusters: usize,
    pub max_queries_per_cluster: usize,
    pub max_inter_degree: usize,
    /// Most hops on any qualifying cluster-graph path.
    pub max_answer_hops: usize,
}

/// The spanner being grown, plus the trace of every phase that had edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SpannerState {
    pub kept: WeightedGraph,
    /// Last phase executed.
    pub phase_index: usize,
    pub phases: Vec<PhaseTrace>,
}

impl SpannerState {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.kept.edges().into_iter().map(|(u, v, _)| (u, v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedRun {
    pub params: PhaseParams,
    pub state: SpannerState,
}

/// On-disk form of a spanner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpannerFile {
    pub t: f64,
    pub params: PhaseParams,
    pub edges: Vec<(usize, usize)>,
    pub phases: Vec<PhaseTrace>,
}

impl RelaxedRun {
    pub fn to_file(&self) -> SpannerFile {
        SpannerFile {
            t: self.params.t,
            params: self.params,
            edges: self.state.edges(),
            phases: self.state.phases.clone(),
        }
    }
}

/// Everything a phase `i >= 1` computed, handed to observers before the
/// next phase starts.
#[derive(Debug)]
pub struct PhaseSnapshot<'a> {
    pub i: usize,
    pub params: &'a PhaseParams,
    pub w_prev: f64,
    /// Spanner at the start of the phase.
    pub before: &'a WeightedGraph,
    pub bin: &'a [LenEdge],
    pub cover: &'a ClusterCover,
    pub selection: &'a QuerySelection,
    pub cluster_graph: &'a ClusterGraph,
    pub answers: &'a [QueryAnswer],
    /// Additions before redundancy removal, sorted by endpoints.
    pub added: &'a [LenEdge],
    pub redundancy: &'a RedundancyOutcome,
    /// Spanner at the end of the phase.
    pub after: &'a WeightedGraph,
}

pub fn run_relaxed_greedy(inst: &UbgInstance, t: f64) -> Result<RelaxedRun> {
    run_relaxed_greedy_observed(inst, t, |_| {})
}

/// Runs every phase, calling `observe` after each non-empty phase `i >= 1`.
pub fn run_relaxed_greedy_observed(
    inst: &UbgInstance,
    t: f64,
    mut observe: impl FnMut(&PhaseSnapshot),
) -> Result<RelaxedRun> {
    let n = inst.n();
    let params = derive_params(t, inst.alpha, n.max(1))?;
    let bins = bin_edges(inst, &params)?.bins;
    let mut kept = process_short_edges(inst, &bins[0], t)?;
    let mut phases = vec![PhaseTrace {
        i: 0,
        bin_size: bins[0].len(),
        added: kept.edge_count(),
        ..PhaseTrace::default()
    }];
    let mut ball = BallSearch::new(n);
    for i in 1..=params.m {
        let bin = &bins[i];
        if bin.is_empty() {
            continue;
        }
        let w_prev = params.w(i - 1);
        let cover = compute_cluster_cover(&kept, params.delta * w_prev);
        let selection = select_query_edges(bin, &cover, &kept, &params, inst)?;
        let h = build_cluster_graph(&kept, &cover, w_prev)?;
        let answers: Vec<QueryAnswer> = selection
            .queries
            .iter()
            .map(|q| answer_with(&mut ball, h.graph(), q.x, q.y, q.len, t))
            .collect();
        let mut added: Vec<LenEdge> = selection
            .queries
            .iter()
            .zip(&answers)
            .filter(|(_, a)| a.add)
            .map(|(q, _)| (q.x, q.y, q.len))
            .collect();
        added.sort_by_key(|e| (e.0, e.1));
        let redundancy = remove_redundant(&added, &h, &params);
        let mut next = kept.clone();
        for &(u, v, len) in &added {
            next.add_edge(u, v, len);
        }
        for &(u, v) in &redundancy.removed {
            next.remove_edge(u, v);
        }
        phases.push(PhaseTrace {
            i,
            bin_size: bin.len(),
            queries: selection.queries.len(),
            added: added.len(),
            removed: redundancy.removed.len(),
            covered: selection.covered,
            clusters: cover.centers.len(),
            max_queries_per_cluster: selection.max_per_cluster(),
            max_inter_degree: h.max_inter_degree(),
            max_answer_hops: answers.iter().filter_map(|a| a.hops).max().unwrap_or(0),
        });
        observe(&PhaseSnapshot {
            i,
            params: &params,
            w_prev,
            before: &kept,
            bin,
            cover: &cover,
            selection: &selection,
            cluster_graph: &h,
            answers: &answers,
            added: &added,
            redundancy: &redundancy,
            after: &next,
        });
        kept = next;
    }
    Ok(RelaxedRun {
        params,
        state: SpannerState {
            kept,
            phase_index: params.m,
            phases,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_instance, EdgePolicy, Point};
    use crate::graph::edge_stretch;

    #[test]
    fn single_node_gives_empty_spanner() {
        let inst = generate_instance(1, 2, 0.7, EdgePolicy::All, 0).unwrap();
        let run = run_relaxed_greedy(&inst, 1.5).unwrap();
        assert!(run.state.edges().is_empty());
    }

    #[test]
    fn all_short_edges_reduce_to_phase_zero() {
        let pts = vec![
            Point::new(vec![0.0, 0.0]),
            Point::new(vec![0.001, 0.0]),
            Point::new(vec![0.002, 0.000_1]),
        ];
        let inst = UbgInstance::from_parts(2, 0.7, EdgePolicy::All, 0, pts, [(0, 1), (0, 2), (1, 2)]);
        let run = run_relaxed_greedy(&inst, 2.0).unwrap();
        let e0: Vec<LenEdge> = inst.edges.iter().map(|&(u, v)| (u, v, inst.dist(u, v))).collect();
        assert_eq!(run.state.kept, process_short_edges(&inst, &e0, 2.0).unwrap());
        assert_eq!(run.state.phases.len(), 1);
    }

    #[test]
    fn hundred_nodes_is_a_spanner_and_each_phase_closes_its_bin() {
        let inst = generate_instance(100, 2, 0.7, EdgePolicy::Bernoulli(0.5), 7).unwrap();
        let g = inst.graph();
        let mut phase_failures = Vec::new();
        let run = run_relaxed_greedy_observed(&inst, 1.5, |snap| {
            let mut ball = BallSearch::new(snap.after.n());
            for &(u, v, len) in snap.bin {
                ball.run(u, 1.5 * len + 1e-9, |x, out| out.extend_from_slice(snap.after.neighbors(x)));
                if ball.dist(v).is_infinite() {
                    phase_failures.push((snap.i, u, v));
                }
            }
        })
        .unwrap();
        assert!(phase_failures.is_empty(), "{phase_failures:?}");
        let s = edge_stretch(&g, &run.state.kept).unwrap();
        assert!(s.max <= 1.5 + 1e-9, "{s:?}");
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = generate_instance(80, 2, 0.6, EdgePolicy::All, 3).unwrap();
        let a = run_relaxed_greedy(&inst, 1.3).unwrap();
        let b = run_relaxed_greedy(&inst, 1.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a.to_file()).unwrap(),
            serde_json::to_string(&b.to_file()).unwrap()
        );
    }
}
