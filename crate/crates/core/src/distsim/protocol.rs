use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UbgInstance;
use crate::graph::{BallSearch, WeightedGraph};
use crate::greedy::greedy_over_edges;
use crate::relaxed::query::{better_query, covered_at, query_objective};
use crate::relaxed::{
    bin_edges, derive_params, mutually_redundant, pairing_distance, ClusterCover, ClusterGraph, LenEdge,
    PhaseParams, QueryAnswer, QueryEdge, ANSWER_SLACK,
};

use super::mis::{mis_distributed, JNode, MisOutcome};
use super::sim::{Accounting, GatherRecord, Record, Simulator};

/// Default cap on the total number of rounds.
pub const DEFAULT_MAX_ROUNDS: u64 = 50_000_000;

#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub inst: &'a UbgInstance,
    pub t: f64,
    pub params: PhaseParams,
    pub seed: u64,
    pub max_rounds: u64,
}

impl<'a> SimConfig<'a> {
    pub fn new(inst: &'a UbgInstance, t: f64) -> Result<Self> {
        Ok(SimConfig {
            inst,
            t,
            params: derive_params(t, inst.alpha, inst.n().max(1))?,
            seed: inst.seed,
            max_rounds: DEFAULT_MAX_ROUNDS,
        })
    }
}

/// What a single node knows and holds between steps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeState {
    pub id: usize,
    /// Incident network edges with lengths, by neighbour id.
    pub adj: Vec<(usize, f64)>,
    /// Adjacency lists of the network neighbours, learned at setup.
    pub nbr_adj: BTreeMap<usize, Vec<(usize, f64)>>,
    /// Incident spanner edges, by neighbour id.
    pub kept: Vec<(usize, f64)>,
    pub center: usize,
    pub dist_to_center: f64,
}

impl NodeState {
    fn nbr_len(&self, v: usize, z: usize) -> Option<f64> {
        let list = self.nbr_adj.get(&v)?;
        list.binary_search_by_key(&z, |e| e.0).ok().map(|k| list[k].1)
    }

    fn is_center(&self) -> bool {
        self.center == self.id
    }

    fn bin_edges(&self, params: &PhaseParams, i: usize) -> Vec<(usize, f64)> {
        self.adj.iter().copied().filter(|e| params.bin_index(e.1) == i).collect()
    }

    fn add_kept(&mut self, v: usize, len: f64) {
        if let Err(k) = self.kept.binary_search_by_key(&v, |e| e.0) {
            self.kept.insert(k, (v, len));
        }
    }

    fn remove_kept(&mut self, v: usize) {
        if let Ok(k) = self.kept.binary_search_by_key(&v, |e| e.0) {
            self.kept.remove(k);
        }
    }
}

/// Per-phase counters of a distributed run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistPhaseTrace {
    pub i: usize,
    pub rounds: u64,
    pub bin_size: usize,
    pub clusters: usize,
    pub queries: usize,
    pub added: usize,
    pub removed: usize,
    pub cover_mis_iterations: usize,
    pub redundancy_mis_iterations: usize,
    pub max_answer_hops: usize,
}

/// Result of a distributed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTranscript {
    pub rounds_total: u64,
    pub rounds_by_step: BTreeMap<String, u64>,
    pub max_payload_words: usize,
    pub edges: Vec<(usize, usize)>,
    pub seed: u64,
    pub messages_total: u64,
    pub max_payload_records: usize,
    /// Largest number of records any node held after a gather.
    pub max_view: usize,
    /// Rounds spent in phases `i >= 1`.
    pub rounds_nonempty_phases: u64,
    pub phases: Vec<DistPhaseTrace>,
    pub per_round_messages: Vec<u64>,
    pub gathers: Vec<GatherRecord>,
}

impl SimTranscript {
    fn from_parts(acct: Accounting, edges: Vec<(usize, usize)>, seed: u64, phases: Vec<DistPhaseTrace>) -> Self {
        let rounds_nonempty_phases = phases.iter().filter(|p| p.i >= 1).map(|p| p.rounds).sum();
        SimTranscript {
            rounds_total: acct.rounds_total,
            rounds_by_step: acct.rounds_by_step,
            max_payload_words: acct.max_payload_words,
            edges,
            seed,
            messages_total: acct.messages_total,
            max_payload_records: acct.max_payload_records,
            max_view: acct.gathers.iter().map(|g| g.max_view).max().unwrap_or(0),
            rounds_nonempty_phases,
            phases,
            per_round_messages: acct.per_round_messages,
            gathers: acct.gathers,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Gathers whose reads went past their declared radius.
    pub fn locality_violations(&self) -> Vec<&GatherRecord> {
        self.gathers.iter().filter(|g| g.max_hop_seen > g.declared).collect()
    }
}

/// Hop radii of the steps of phase `i`, from the bound that a spanner path
/// of length `l` stays within `ceil(2 l / alpha)` network hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepRadii {
    pub cover: usize,
    pub select: usize,
    pub notify: usize,
    pub cluster_graph: usize,
    pub answer: usize,
    pub redundancy: usize,
}

pub fn step_radii(params: &PhaseParams, w_prev: f64) -> StepRadii {
    let hops = |len: f64| ((2.0 * len / params.alpha).ceil() as usize).max(1);
    let cover = hops(params.delta * w_prev);
    StepRadii {
        cover,
        select: 1 + cover,
        notify: cover,
        cluster_graph: hops((2.0 * params.delta + 1.0) * w_prev).max(1 + cover),
        answer: hops(params.t * params.r * w_prev),
        redundancy: 1 + hops(params.t1 * params.r * w_prev),
    }
}

/// Everything phase `i >= 1` of a distributed run computed, assembled from
/// the node states for inspection.
#[derive(Debug)]
pub struct DistPhaseSnapshot<'a> {
    pub i: usize,
    pub params: &'a PhaseParams,
    pub w_prev: f64,
    pub radii: StepRadii,
    pub before: &'a WeightedGraph,
    pub bin: &'a [LenEdge],
    pub cover: &'a ClusterCover,
    /// Cover conflict graph over the nodes, with the chosen centers.
    pub cover_mis: &'a MisOutcome,
    pub queries: &'a [QueryEdge],
    pub cluster_graph: &'a ClusterGraph,
    pub answers: &'a [QueryAnswer],
    /// Additions before redundancy removal, sorted by endpoints.
    pub added: &'a [LenEdge],
    /// Redundancy conflict graph over `added`.
    pub redundancy_mis: &'a MisOutcome,
    pub removed: &'a [(usize, usize)],
    pub after: &'a WeightedGraph,
}

struct Edges(Vec<(usize, f64)>);

impl Record for Edges {
    fn words(&self) -> usize {
        1 + 2 * self.0.len()
    }
}

struct SelectRec {
    center: usize,
    dist: f64,
    /// Incident bin edges with the locally computed covered flag.
    edges: Vec<(usize, f64, bool)>,
}

impl Record for SelectRec {
    fn words(&self) -> usize {
        3 + 3 * self.edges.len()
    }
}

struct Queries(Vec<QueryEdge>);

impl Record for Queries {
    fn words(&self) -> usize {
        1 + 5 * self.0.len()
    }
}

struct ClusterRec {
    center: usize,
    dist: f64,
    kept: Vec<(usize, f64)>,
}

impl Record for ClusterRec {
    fn words(&self) -> usize {
        3 + 2 * self.kept.len()
    }
}

struct RedundancyRec {
    h: Vec<(usize, f64)>,
    added: Vec<LenEdge>,
}

impl Record for RedundancyRec {
    fn words(&self) -> usize {
        2 + 2 * self.h.len() + 3 * self.added.len()
    }
}

fn none<R>(n: usize) -> Vec<Option<R>> {
    (0..n).map(|_| None).collect()
}

/// Cluster-graph edges a node can rebuild from the head records it holds.
fn local_h<'a>(heads: impl Iterator<Item = (usize, &'a [(usize, f64)])>) -> BTreeMap<usize, Vec<(usize, f64)>> {
    let mut adj: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (a, edges) in heads {
        for &(b, w) in edges {
            adj.entry(a).or_default().push((b, w));
            adj.entry(b).or_default().push((a, w));
        }
    }
    adj
}

pub fn run_distributed(cfg: &SimConfig) -> Result<SimTranscript> {
    run_distributed_observed(cfg, |_| {})
}

/// Runs the distributed algorithm, calling `observe` after each phase
/// `i >= 1` that had edges.
pub fn run_distributed_observed(cfg: &SimConfig, mut observe: impl FnMut(&DistPhaseSnapshot)) -> Result<SimTranscript> {
    if cfg.max_rounds == 0 {
        return Err(Error::Usage("max_rounds must be positive".into()));
    }
    let inst = cfg.inst;
    let params = cfg.params;
    let t = cfg.t;
    let n = inst.n();
    let net = inst.graph();
    // nodes validate lengths locally; this reports the first bad edge
    let bins = bin_edges(inst, &params)?.bins;
    let mut sim = Simulator::new(&net, cfg.max_rounds);
    let mut nodes: Vec<NodeState> = (0..n)
        .map(|u| {
            let mut adj = net.neighbors(u).to_vec();
            adj.sort_by_key(|e| e.0);
            NodeState {
                id: u,
                adj,
                center: u,
                ..NodeState::default()
            }
        })
        .collect();
    let mut phases = Vec::new();
    let mut ball = BallSearch::new(n);

    // setup: learn the neighbours' adjacency
    sim.phase = 0;
    let recs = nodes
        .iter()
        .map(|s| (!s.adj.is_empty()).then(|| Edges(s.adj.clone())))
        .collect();
    let g = sim.gather("setup", 1, recs)?;
    for s in nodes.iter_mut() {
        for &(v, _) in &s.adj {
            let list = g.read(s.id, v).expect("neighbour one hop away");
            s.nbr_adj.insert(v, list.0.clone());
        }
    }
    sim.close("setup", &g);

    // phase 0: greedy inside each short-edge component
    let start = sim.acct.rounds_total;
    let mut phase0_added = vec![Vec::new(); n];
    for s in &nodes {
        phase0_added[s.id] = short_edge_greedy(s, &params, t)?;
    }
    let recs = phase0_added
        .iter()
        .map(|a| (!a.is_empty()).then(|| Edges(a.clone())))
        .collect();
    let g = sim.gather("phase0", 1, recs)?;
    for (u, added) in phase0_added.iter().enumerate() {
        for &(v, len) in added {
            // the other endpoint ran the same greedy and must agree
            let theirs = g.read(v, u).map(|r| r.0.iter().any(|e| e.0 == v));
            if theirs != Some(true) || !phase0_added[v].iter().any(|e| e.0 == u) {
                return Err(Error::Invariant(format!("endpoints disagree on short edge ({u},{v})")));
            }
            nodes[u].add_kept(v, len);
        }
    }
    sim.close("phase0", &g);
    phases.push(DistPhaseTrace {
        i: 0,
        rounds: sim.acct.rounds_total - start,
        bin_size: bins[0].len(),
        added: phase0_added.iter().map(Vec::len).sum::<usize>() / 2,
        ..DistPhaseTrace::default()
    });

    for i in 1..=params.m {
        if bins[i].is_empty() {
            continue;
        }
        sim.phase = i;
        let start = sim.acct.rounds_total;
        let w_prev = params.w(i - 1);
        let radii = step_radii(&params, w_prev);
        let before = kept_graph(&nodes)?;
        let dw = params.delta * w_prev;

        // cover: each node finds the nodes within delta W in the spanner
        let recs = nodes
            .iter()
            .map(|s| (!s.kept.is_empty()).then(|| Edges(s.kept.clone())))
            .collect();
        let g = sim.gather("cover", radii.cover, recs)?;
        let mut near: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for u in 0..n {
            ball.run(u, dw * (1.0 + 1e-12), |x, out| {
                if let Some(rec) = g.read(u, x) {
                    out.extend(rec.0.iter().copied().filter(|e| g.hop(u, e.0).is_some()));
                }
            });
            let mut found: Vec<(usize, f64)> = ball.settled().iter().map(|&v| (v, ball.dist(v))).collect();
            found.sort_by_key(|e| e.0);
            near[u] = found;
        }
        sim.close("cover", &g);
        let jnodes: Vec<JNode> = (0..n)
            .map(|u| JNode {
                host: u,
                key: (u, u),
                claims: near[u]
                    .iter()
                    .filter(|&&(v, d)| v != u && d <= dw)
                    .map(|&(v, _)| ((v, v), v))
                    .collect(),
            })
            .collect();
        let cover_mis = mis_distributed(&mut sim, "cover_mis", radii.cover, &jnodes)?;
        for u in 0..n {
            let s = &mut nodes[u];
            if cover_mis.inside[u] {
                s.center = u;
                s.dist_to_center = 0.0;
                continue;
            }
            let c = *cover_mis.joined_neighbors[u]
                .iter()
                .max()
                .ok_or_else(|| Error::Invariant(format!("node {u} is outside the cover MIS with no member neighbour")))?;
            let k = near[u]
                .binary_search_by_key(&c, |e| e.0)
                .map_err(|_| Error::Invariant(format!("center {c} of {u} was not found within delta W")))?;
            s.center = c;
            s.dist_to_center = near[u][k].1;
        }
        let cover = cover_of(&nodes, dw);

        // query selection: heads pick one uncovered edge per cluster pair
        let mut bin_size = 0;
        let mut recs = none::<SelectRec>(n);
        for s in &nodes {
            let mut edges = Vec::new();
            for (v, len) in s.bin_edges(&params, i) {
                bin_size += usize::from(s.id < v);
                let cov = covered_at(s.id, v, len, &s.kept, |z| s.nbr_len(v, z), &params)?;
                edges.push((v, len, cov));
            }
            if !edges.is_empty() {
                recs[s.id] = Some(SelectRec {
                    center: s.center,
                    dist: s.dist_to_center,
                    edges,
                });
            }
        }
        let g = sim.gather("select", radii.select, recs)?;
        let mut head_queries: Vec<BTreeMap<(usize, usize), QueryEdge>> = vec![BTreeMap::new(); n];
        for a in (0..n).filter(|&a| nodes[a].is_center()) {
            let best = &mut head_queries[a];
            let members: Vec<(usize, &SelectRec)> =
                g.visible(a).filter(|r| r.2.center == a).map(|r| (r.0, r.2)).collect();
            for (x, rx) in members {
                for &(y, len, cov_x) in &rx.edges {
                    let ry = g
                        .read(a, y)
                        .ok_or_else(|| Error::Invariant(format!("head {a} cannot see endpoint {y} of ({x},{y})")))?;
                    let cov_y = ry.edges.iter().find(|e| e.0 == x).map(|e| e.2).unwrap_or(false);
                    if cov_x || cov_y {
                        continue;
                    }
                    if ry.center == a {
                        return Err(Error::Invariant(format!(
                            "edge ({x},{y}) of length {len} lies inside the cluster of {a}"
                        )));
                    }
                    let (lo, hi) = if x < y { ((x, rx), (y, ry)) } else { ((y, ry), (x, rx)) };
                    let cand = QueryEdge {
                        x: lo.0,
                        y: hi.0,
                        len,
                        cx: lo.1.center,
                        cy: hi.1.center,
                        objective: query_objective(t, len, lo.1.dist, hi.1.dist),
                    };
                    best.entry((a.min(ry.center), a.max(ry.center)))
                        .and_modify(|b| {
                            if better_query(&cand, b) {
                                *b = cand;
                            }
                        })
                        .or_insert(cand);
                }
            }
        }
        sim.close("select", &g);
        let mut queries: BTreeMap<(usize, usize), QueryEdge> = BTreeMap::new();
        for (a, qs) in head_queries.iter().enumerate() {
            for (&pair, q) in qs {
                if let Some(prev) = queries.insert(pair, *q) {
                    if prev != *q {
                        return Err(Error::Invariant(format!("heads of {pair:?} chose different queries ({a})")));
                    }
                }
            }
        }

        // notify: endpoints learn their queries from their heads
        let recs = head_queries
            .iter()
            .map(|qs| (!qs.is_empty()).then(|| Queries(qs.values().copied().collect())))
            .collect();
        let g = sim.gather("notify", radii.notify, recs)?;
        let mut my_queries: Vec<Vec<QueryEdge>> = vec![Vec::new(); n];
        for s in &nodes {
            let Some(rec) = g.read(s.id, s.center) else {
                if !head_queries[s.center].is_empty() {
                    return Err(Error::Invariant(format!("node {} cannot see its head {}", s.id, s.center)));
                }
                continue;
            };
            my_queries[s.id] = rec.0.iter().copied().filter(|q| q.x == s.id || q.y == s.id).collect();
        }
        sim.close("notify", &g);

        // cluster graph: each head lists its members and the nearby heads above it
        let recs = nodes
            .iter()
            .map(|s| {
                (!s.kept.is_empty() || s.is_center()).then(|| ClusterRec {
                    center: s.center,
                    dist: s.dist_to_center,
                    kept: s.kept.clone(),
                })
            })
            .collect();
        let g = sim.gather("cluster_graph", radii.cluster_graph, recs)?;
        let reach = (2.0 * dw + w_prev) * (1.0 + 1e-12) + 1e-12;
        let mut head_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for a in (0..n).filter(|&a| nodes[a].is_center()) {
            let mut crossing = BTreeSet::new();
            let mut edges = Vec::new();
            for (x, _, rx) in g.visible(a) {
                if rx.center != a {
                    continue;
                }
                if x != a {
                    edges.push((x, rx.dist));
                    intra.push((a, x, rx.dist));
                }
                for &(y, _) in &rx.kept {
                    let ry = g
                        .read(a, y)
                        .ok_or_else(|| Error::Invariant(format!("head {a} cannot see {y}, a spanner neighbour of {x}")))?;
                    if ry.center != a {
                        crossing.insert(ry.center);
                    }
                }
            }
            ball.run(a, reach, |x, out| {
                if let Some(rec) = g.read(a, x) {
                    out.extend(rec.kept.iter().copied().filter(|e| g.hop(a, e.0).is_some()));
                }
            });
            let mut near_heads: Vec<usize> = ball
                .settled()
                .iter()
                .copied()
                .filter(|&b| b > a && g.read(a, b).is_some_and(|r| r.center == b))
                .collect();
            near_heads.sort_unstable();
            for b in near_heads {
                let d = ball.dist(b);
                if d <= w_prev || crossing.contains(&b) {
                    edges.push((b, d));
                    inter.push((a, b, d));
                }
            }
            for &b in crossing.range(a + 1..) {
                if ball.dist(b).is_infinite() {
                    return Err(Error::Invariant(format!(
                        "clusters of {a} and {b} share a spanner edge but their centers are farther than (2 delta + 1) W apart"
                    )));
                }
            }
            head_edges[a] = edges;
        }
        sim.close("cluster_graph", &g);
        intra.sort_by_key(|e| (e.1, e.0));
        let h = ClusterGraph::from_parts(n, intra, inter, w_prev)?;

        // answer: the larger endpoint of each query searches the cluster graph
        let recs = head_edges
            .iter()
            .map(|e| (!e.is_empty()).then(|| Edges(e.clone())))
            .collect();
        let g = sim.gather("answer", radii.answer, recs)?;
        let mut answers = Vec::new();
        let mut to_add: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for u in 0..n {
            let mine: Vec<QueryEdge> = my_queries[u].iter().copied().filter(|q| q.y == u).collect();
            if mine.is_empty() {
                continue;
            }
            let local = local_h(g.visible(u).map(|(a, _, r)| (a, r.0.as_slice())));
            for q in mine {
                ball.run(q.x, t * q.len - ANSWER_SLACK, |x, out| {
                    if let Some(list) = local.get(&x) {
                        out.extend_from_slice(list);
                    }
                });
                let sp_h = ball.dist(q.y);
                let add = sp_h.is_infinite();
                answers.push(QueryAnswer {
                    x: q.x,
                    y: q.y,
                    add,
                    sp_h,
                    hops: ball.hops(q.y),
                });
                if add {
                    to_add[u].push((q.x, q.len));
                }
            }
        }
        sim.close("answer", &g);
        answers.sort_by_key(|a| (a.x, a.y));

        // inform: the other endpoint learns of each addition
        let recs = to_add
            .iter()
            .map(|a| (!a.is_empty()).then(|| Edges(a.clone())))
            .collect();
        let g = sim.gather("inform", 1, recs)?;
        let mut added: Vec<LenEdge> = Vec::new();
        for u in 0..n {
            for q in my_queries[u].iter().filter(|q| q.x == u) {
                if let Some(rec) = g.read(u, q.y) {
                    if let Some(&(_, len)) = rec.0.iter().find(|e| e.0 == u) {
                        added.push((u, q.y, len));
                    }
                }
            }
        }
        sim.close("inform", &g);
        added.sort_by_key(|e| (e.0, e.1));
        for &(x, y, len) in &added {
            nodes[x].add_kept(y, len);
            nodes[y].add_kept(x, len);
        }

        // redundancy: the larger endpoint of each addition looks for
        // mutually redundant partners
        let recs = (0..n)
            .map(|u| {
                let mine: Vec<LenEdge> = to_add[u].iter().map(|&(x, len)| (x, u, len)).collect();
                (!mine.is_empty() || !head_edges[u].is_empty()).then(|| RedundancyRec {
                    h: head_edges[u].clone(),
                    added: mine,
                })
            })
            .collect();
        let g = sim.gather("redundancy", radii.redundancy, recs)?;
        let mut jnodes = Vec::new();
        for u in 0..n {
            if to_add[u].is_empty() {
                continue;
            }
            let local = local_h(g.visible(u).map(|(a, _, r)| (a, r.h.as_slice())));
            let others: Vec<LenEdge> = g.visible(u).flat_map(|(_, _, r)| r.added.iter().copied()).collect();
            let longest = others.iter().map(|e| e.2).fold(0.0, f64::max);
            let budget = params.t1 * longest;
            let mut mine: Vec<LenEdge> = to_add[u].iter().map(|&(x, len)| (x, u, len)).collect();
            mine.sort_by_key(|e| (e.0, e.1));
            for e in mine {
                let mut from = BTreeMap::new();
                for s in [e.0, e.1] {
                    ball.run(s, budget, |x, out| {
                        if let Some(list) = local.get(&x) {
                            out.extend_from_slice(list);
                        }
                    });
                    for &v in ball.settled() {
                        from.insert((s, v), ball.dist(v));
                    }
                }
                let sp = |p: usize, q: usize| from.get(&(p, q)).copied().unwrap_or(f64::INFINITY);
                let claims = others
                    .iter()
                    .filter(|o| (o.0, o.1) != (e.0, e.1))
                    .filter(|o| mutually_redundant(pairing_distance(sp, (e.0, e.1), (o.0, o.1)), e.2, o.2, params.t1))
                    .map(|o| ((o.0, o.1), o.1))
                    .collect();
                jnodes.push(JNode {
                    host: u,
                    key: (e.0, e.1),
                    claims,
                });
            }
        }
        sim.close("redundancy", &g);
        jnodes.sort_by_key(|j| j.key);
        let redundancy_mis = mis_distributed(&mut sim, "redundancy_mis", radii.redundancy, &jnodes)?;

        // removal: hosts drop conflicted additions outside the MIS
        let mut drop_at: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (j, node) in jnodes.iter().enumerate() {
            if !redundancy_mis.inside[j] && !redundancy_mis.adjacency[j].is_empty() {
                drop_at[node.host].push((node.key.0, 0.0));
            }
        }
        let recs = drop_at
            .iter()
            .map(|d| (!d.is_empty()).then(|| Edges(d.clone())))
            .collect();
        let g = sim.gather("removal", 1, recs)?;
        let mut removed = Vec::new();
        for u in 0..n {
            for &(x, _) in &drop_at[u] {
                nodes[u].remove_kept(x);
                removed.push((x, u));
            }
            let dropped_by: Vec<usize> = nodes[u]
                .adj
                .iter()
                .map(|e| e.0)
                .filter(|&v| g.read(u, v).is_some_and(|rec| rec.0.iter().any(|e| e.0 == u)))
                .collect();
            for v in dropped_by {
                nodes[u].remove_kept(v);
            }
        }
        sim.close("removal", &g);
        removed.sort_unstable();

        let after = kept_graph(&nodes)?;
        let query_list: Vec<QueryEdge> = queries.values().copied().collect();
        phases.push(DistPhaseTrace {
            i,
            rounds: sim.acct.rounds_total - start,
            bin_size,
            clusters: cover.centers.len(),
            queries: query_list.len(),
            added: added.len(),
            removed: removed.len(),
            cover_mis_iterations: cover_mis.iterations,
            redundancy_mis_iterations: redundancy_mis.iterations,
            max_answer_hops: answers.iter().filter_map(|a| a.hops).max().unwrap_or(0),
        });
        observe(&DistPhaseSnapshot {
            i,
            params: &params,
            w_prev,
            radii,
            before: &before,
            bin: &bins[i],
            cover: &cover,
            cover_mis: &cover_mis,
            queries: &query_list,
            cluster_graph: &h,
            answers: &answers,
            added: &added,
            redundancy_mis: &redundancy_mis,
            removed: &removed,
            after: &after,
        });
    }

    let edges = kept_graph(&nodes)?.edges().into_iter().map(|(u, v, _)| (u, v)).collect();
    let total: u64 = sim.acct.rounds_by_step.values().sum();
    if total != sim.acct.rounds_total {
        return Err(Error::Invariant("step rounds do not add up to the total".into()));
    }
    Ok(SimTranscript::from_parts(sim.acct, edges, cfg.seed, phases))
}

/// Phase 0 at one node: the short-edge component holding it lies inside its
/// closed neighbourhood, so the node can run the greedy on it alone.
fn short_edge_greedy(s: &NodeState, params: &PhaseParams, t: f64) -> Result<Vec<(usize, f64)>> {
    let short = |list: &[(usize, f64)]| -> Vec<usize> {
        list.iter().filter(|e| params.bin_index(e.1) == 0).map(|e| e.0).collect()
    };
    if short(&s.adj).is_empty() {
        return Ok(Vec::new());
    }
    let adj_of = |x: usize| -> Option<&[(usize, f64)]> {
        if x == s.id {
            Some(&s.adj)
        } else {
            s.nbr_adj.get(&x).map(Vec::as_slice)
        }
    };
    let mut comp = BTreeSet::from([s.id]);
    let mut stack = vec![s.id];
    while let Some(x) = stack.pop() {
        let list = adj_of(x).ok_or_else(|| {
            Error::ModelViolation(format!("short-edge component of {} reaches {x}, which is not its neighbour", s.id))
        })?;
        for y in short(list) {
            if comp.insert(y) {
                stack.push(y);
            }
        }
    }
    let members: Vec<usize> = comp.into_iter().collect();
    let mut edges = Vec::new();
    for (k, &a) in members.iter().enumerate() {
        let list = adj_of(a).expect("members are neighbours");
        for &b in &members[k + 1..] {
            let Ok(p) = list.binary_search_by_key(&b, |e| e.0) else {
                return Err(Error::ModelViolation(format!(
                    "short-edge component of {} is not a clique: {a} and {b} are not adjacent",
                    s.id
                )));
            };
            let len = list[p].1;
            if params.bin_index(len) == 0 {
                edges.push((a, b, len));
            }
        }
    }
    let run = greedy_over_edges(edges, t);
    let mut mine: Vec<(usize, f64)> = run
        .edges
        .iter()
        .filter_map(|&(a, b)| {
            let other = if a == s.id {
                b
            } else if b == s.id {
                a
            } else {
                return None;
            };
            s.adj.binary_search_by_key(&other, |e| e.0).ok().map(|k| s.adj[k])
        })
        .collect();
    mine.sort_by_key(|e| e.0);
    Ok(mine)
}

/// The spanner as the union of what the nodes hold; both endpoints must
/// agree on every edge.
fn kept_graph(nodes: &[NodeState]) -> Result<WeightedGraph> {
    let mut g = WeightedGraph::new(nodes.len());
    for s in nodes {
        for &(v, len) in &s.kept {
            let back = nodes[v].kept.iter().find(|e| e.0 == s.id);
            if back.map(|e| e.1) != Some(len) {
                return Err(Error::Invariant(format!("endpoints disagree on spanner edge ({},{v})", s.id)));
            }
            if s.id < v {
                g.add_edge(s.id, v, len);
            }
        }
    }
    Ok(g)
}

fn cover_of(nodes: &[NodeState], radius: f64) -> ClusterCover {
    ClusterCover {
        centers: nodes.iter().filter(|s| s.is_center()).map(|s| s.id).collect(),
        member_of: nodes.iter().map(|s| s.center).collect(),
        dist_to_center: nodes.iter().map(|s| s.dist_to_center).collect(),
        radius,
    }
}
