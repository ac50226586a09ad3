//! The relaxed greedy spanner: edges are bucketed by length into
//! geometrically growing bins and each bin is processed in one phase, using
//! a cluster graph of the spanner built so far to answer path queries.

mod bins;
mod cluster_graph;
mod cover;
mod engine;
pub mod params;
pub(crate) mod query;
mod redundancy;

pub use bins::{bin_edges, process_short_edges, BinnedEdges};
pub use cluster_graph::{answer_query, build_cluster_graph, ClusterGraph, QueryAnswer, ANSWER_SLACK};
pub use cover::{compute_cluster_cover, ClusterCover};
pub use engine::{
    run_relaxed_greedy, run_relaxed_greedy_observed, PhaseSnapshot, PhaseTrace, RelaxedRun,
    SpannerFile, SpannerState,
};
pub use params::{derive_params, max_covering_angle, PhaseParams};
pub use query::{is_covered_edge, select_query_edges, QueryEdge, QuerySelection};
pub use redundancy::{
    greedy_mis, mutually_redundant, pairing_distance, remove_redundant, RedundancyOutcome,
    REDUNDANCY_SLACK,
};

/// An edge `(u, v, |uv|)` with `u < v`.
pub type LenEdge = (usize, usize, f64);
