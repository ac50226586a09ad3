//! Executable certificates for the properties the spanner is supposed to
//! have. Every checker recomputes what it needs from scratch with the dense
//! Dijkstra in [`crate::graph`], so it shares no search code with the
//! engines it audits.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{usage, Error, Result};
use crate::geometry::UbgInstance;
use crate::graph::{connected_components, dijkstra, edge_stretch, mst_weight, WeightedGraph};
use crate::relaxed::{
    mutually_redundant, pairing_distance, ClusterCover, ClusterGraph, LenEdge, PhaseParams,
    QueryAnswer,
};

/// Tolerance for every stretch and distance comparison made here.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub pass: bool,
    pub value: Value,
    pub witness: Value,
}

impl CheckResult {
    pub fn new(pass: bool, value: impl Into<Value>, witness: impl Into<Value>) -> Self {
        CheckResult {
            pass,
            value: value.into(),
            witness: witness.into(),
        }
    }
}

/// Named check results, serialised as `{name: {"pass", "value", "witness"}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct VerificationReport {
    pub checks: BTreeMap<String, CheckResult>,
}

impl VerificationReport {
    pub fn insert(&mut self, name: &str, result: CheckResult) {
        self.checks.insert(name.to_string(), result);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The instance subgraph formed by `edges`, weighted by Euclidean length.
pub fn spanner_graph(inst: &UbgInstance, edges: &[(usize, usize)]) -> Result<WeightedGraph> {
    let mut g = WeightedGraph::new(inst.n());
    for &(u, v) in edges {
        if u >= inst.n() || v >= inst.n() || !inst.has_edge(u, v) {
            return usage(format!("spanner edge ({u},{v}) is not an instance edge"));
        }
        g.add_edge(u, v, inst.dist(u, v));
    }
    Ok(g)
}

/// Passes iff every instance edge is stretched by at most `t` (+1e-9).
pub fn check_spanner(inst: &UbgInstance, edges: &[(usize, usize)], t: f64) -> Result<CheckResult> {
    let sub = spanner_graph(inst, edges)?;
    let s = edge_stretch(&inst.graph(), &sub)?;
    let value = if s.max.is_finite() { json!(s.max) } else { json!("inf") };
    Ok(CheckResult::new(s.max <= t + CHECK_TOL, value, json!(s.witness)))
}

pub fn check_degree(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut deg = vec![0usize; n];
    for &(u, v) in edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    deg.into_iter().max().unwrap_or(0)
}

/// `w(G') / w(MST(G))`. A spanner that does not connect a connected
/// instance is an error, since no t-spanner can do that.
pub fn weight_ratio(inst: &UbgInstance, edges: &[(usize, usize)]) -> Result<f64> {
    let sub = spanner_graph(inst, edges)?;
    let mst = mst_weight(&inst.graph())?;
    let comps = connected_components(&sub).len();
    if comps != 1 {
        return Err(Error::Invariant(format!("spanner has {comps} components")));
    }
    if mst == 0.0 {
        return Ok(1.0);
    }
    Ok(sub.total_weight() / mst)
}

/// Sum over nodes of the longest incident edge.
pub fn power_cost(spanner: &WeightedGraph) -> f64 {
    (0..spanner.n())
        .map(|u| spanner.neighbors(u).iter().map(|e| e.1).fold(0.0, f64::max))
        .sum()
}

/// Outcome of a leapfrog scan over one set of segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeapfrogResult {
    pub pass: bool,
    pub subsets_checked: u64,
    /// Segments in the cyclic order and orientation that broke the inequality.
    pub violation: Option<Vec<(usize, usize)>>,
}

/// Checks the `(t2, t)`-leapfrog inequality on every subset of `segments`
/// with 2 to `max_subset` members, every choice of longest first segment,
/// every order of the rest and every orientation.
pub fn check_leapfrog(
    inst: &UbgInstance,
    segments: &[(usize, usize)],
    t2: f64,
    t: f64,
    max_subset: usize,
) -> Result<LeapfrogResult> {
    if max_subset > 6 {
        return usage(format!("leapfrog subsets are capped at 6, got {max_subset}"));
    }
    let mut out = LeapfrogResult {
        pass: true,
        subsets_checked: 0,
        violation: None,
    };
    let mut chosen = Vec::new();
    for size in 2..=max_subset.min(segments.len()) {
        if !leapfrog_subsets(inst, segments, t2, t, size, 0, &mut chosen, &mut out) {
            break;
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn leapfrog_subsets(
    inst: &UbgInstance,
    segs: &[(usize, usize)],
    t2: f64,
    t: f64,
    size: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    out: &mut LeapfrogResult,
) -> bool {
    if chosen.len() == size {
        out.subsets_checked += 1;
        if let Some(bad) = leapfrog_violation(inst, segs, chosen, t2, t) {
            out.pass = false;
            out.violation = Some(bad);
            return false;
        }
        return true;
    }
    for k in start..segs.len() {
        chosen.push(k);
        let go_on = leapfrog_subsets(inst, segs, t2, t, size, k + 1, chosen, out);
        chosen.pop();
        if !go_on {
            return false;
        }
    }
    true
}

fn leapfrog_violation(
    inst: &UbgInstance,
    segs: &[(usize, usize)],
    subset: &[usize],
    t2: f64,
    t: f64,
) -> Option<Vec<(usize, usize)>> {
    let len = |k: usize| inst.dist(segs[k].0, segs[k].1);
    let longest = subset.iter().map(|&k| len(k)).fold(0.0, f64::max);
    for &first in subset.iter().filter(|&&k| len(k) == longest) {
        let rest: Vec<usize> = subset.iter().copied().filter(|&k| k != first).collect();
        let rest_len: f64 = rest.iter().map(|&k| len(k)).sum();
        let mut order = rest.clone();
        let mut found = None;
        permutations(&mut order, 0, &mut |perm| {
            if found.is_some() {
                return;
            }
            let seq: Vec<usize> = std::iter::once(first).chain(perm.iter().copied()).collect();
            for mask in 0u32..(1 << seq.len()) {
                let oriented: Vec<(usize, usize)> = seq
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| {
                        let (a, b) = segs[k];
                        if mask >> i & 1 == 1 {
                            (b, a)
                        } else {
                            (a, b)
                        }
                    })
                    .collect();
                let s = oriented.len();
                let connectors: f64 = (0..s)
                    .map(|i| inst.dist(oriented[i].1, oriented[(i + 1) % s].0))
                    .sum();
                if t2 * longest >= rest_len + t * connectors {
                    found = Some(oriented);
                    return;
                }
            }
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Band index of a spanner edge: 0 up to `alpha`, then `j` for
/// `(alpha beta^(j-1), alpha beta^j]`.
pub fn weight_band(len: f64, alpha: f64, beta: f64) -> usize {
    let mut j = 0;
    let mut upper = alpha;
    while len > upper {
        j += 1;
        upper *= beta;
    }
    j
}

/// Leapfrog check run separately on each weight band of the spanner, with
/// `t2` at the midpoint of its admissible window. Skipped (and reported as
/// such) if the window is empty.
pub fn check_leapfrog_banded(
    inst: &UbgInstance,
    edges: &[(usize, usize)],
    params: &PhaseParams,
    max_subset: usize,
) -> Result<CheckResult> {
    let upper = params.leapfrog_t2_upper();
    if !(upper > 1.0) {
        return Ok(CheckResult::new(true, json!({"skipped": true, "t2_upper": upper}), Value::Null));
    }
    let t2 = 0.5 * (1.0 + upper);
    let mut bands: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &(u, v) in edges {
        bands
            .entry(weight_band(inst.dist(u, v), params.alpha, params.beta))
            .or_default()
            .push((u, v));
    }
    let mut checked = 0;
    for (j, segs) in &bands {
        let r = check_leapfrog(inst, segs, t2, params.t, max_subset)?;
        checked += r.subsets_checked;
        if !r.pass {
            return Ok(CheckResult::new(
                false,
                json!({"t2": t2, "band": j, "subsets": checked}),
                json!(r.violation),
            ));
        }
    }
    Ok(CheckResult::new(
        true,
        json!({"t2": t2, "bands": bands.len(), "subsets": checked}),
        Value::Null,
    ))
}

/// Every component of the short-edge graph must be a clique of the instance.
pub fn check_short_edge_cliques(inst: &UbgInstance, e0: &[LenEdge]) -> Result<CheckResult> {
    let g0 = WeightedGraph::from_edges(inst.n(), e0.iter().copied())?;
    let mut largest = 0;
    for comp in connected_components(&g0) {
        largest = largest.max(comp.len());
        for (i, &u) in comp.iter().enumerate() {
            for &v in &comp[i + 1..] {
                if !inst.has_edge(u, v) {
                    return Ok(CheckResult::new(false, comp.len(), json!([u, v])));
                }
            }
        }
    }
    Ok(CheckResult::new(true, largest, Value::Null))
}

/// Membership radius, full assignment and center separation.
pub fn check_cluster_cover(cover: &ClusterCover, spanner: &WeightedGraph, radius: f64) -> CheckResult {
    let n = spanner.n();
    for v in 0..n {
        let c = cover.member_of[v];
        if c >= n || cover.member_of[c] != c {
            return CheckResult::new(false, "unassigned", json!({"node": v}));
        }
    }
    for &a in &cover.centers {
        let sp = dijkstra(spanner, a, None);
        for v in 0..n {
            if cover.member_of[v] == a && sp.dist[v] > radius + CHECK_TOL {
                return CheckResult::new(false, "membership", json!({"center": a, "member": v, "sp": sp.dist[v]}));
            }
            if v != a && cover.member_of[v] == v && sp.dist[v] <= radius {
                return CheckResult::new(false, "separation", json!({"centers": [a, v], "sp": sp.dist[v]}));
            }
        }
    }
    CheckResult::new(true, cover.centers.len(), Value::Null)
}

/// Lemma-style checks on one cluster graph: exact weights, the inter-edge
/// weight bound, completeness of inter edges, the inter-degree bound, and
/// the path-length sandwich on up to `samples` bin edges.
#[allow(clippy::too_many_arguments)]
pub fn check_cluster_graph(
    h: &ClusterGraph,
    spanner: &WeightedGraph,
    cover: &ClusterCover,
    params: &PhaseParams,
    d: usize,
    bin: &[LenEdge],
    samples: usize,
    seed: u64,
) -> BTreeMap<&'static str, CheckResult> {
    let mut out = BTreeMap::new();
    let w = h.w_prev;
    let bound = (2.0 * params.delta + 1.0) * w;
    let mut sp_from = BTreeMap::new();
    for &a in &cover.centers {
        sp_from.insert(a, dijkstra(spanner, a, None));
    }

    let mut weights = CheckResult::new(true, h.intra.len() + h.inter.len(), Value::Null);
    for &(a, x, wt) in h.intra.iter().chain(h.inter.iter()) {
        let exact = sp_from[&a].dist[x];
        if (exact - wt).abs() > CHECK_TOL {
            weights = CheckResult::new(false, wt, json!({"edge": [a, x], "sp": exact}));
            break;
        }
    }
    out.insert("exact_weights", weights);

    let worst = h.inter.iter().map(|e| e.2).fold(0.0, f64::max);
    let over = h.inter.iter().find(|e| e.2 > bound + CHECK_TOL);
    out.insert(
        "inter_weight_bound",
        CheckResult::new(over.is_none(), worst / bound, json!(over.map(|e| [e.0, e.1]))),
    );

    let mut crossing = std::collections::BTreeSet::new();
    for (u, v, _) in spanner.edges() {
        let (a, b) = (cover.member_of[u], cover.member_of[v]);
        if a != b {
            crossing.insert((a.min(b), a.max(b)));
        }
    }
    let present: std::collections::BTreeSet<(usize, usize)> = h.inter.iter().map(|e| (e.0, e.1)).collect();
    let mut complete = CheckResult::new(true, present.len(), Value::Null);
    'outer: for (i, &a) in cover.centers.iter().enumerate() {
        for &b in &cover.centers[i + 1..] {
            let needed = sp_from[&a].dist[b] <= w || crossing.contains(&(a, b));
            if needed != present.contains(&(a, b)) {
                complete = CheckResult::new(false, present.len(), json!({"pair": [a, b], "needed": needed}));
                break 'outer;
            }
        }
    }
    out.insert("inter_edges_complete", complete);

    let deg = h.max_inter_degree();
    let cap = params.inter_degree_bound(d);
    out.insert("inter_degree", CheckResult::new(deg as f64 <= cap, deg, json!({"bound": cap})));

    let ratio = params.cluster_graph_distortion();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if bin.len() <= samples {
        (0..bin.len()).collect()
    } else {
        let mut p = sample(&mut rng, bin.len(), samples).into_vec();
        p.sort_unstable();
        p
    };
    let mut sandwich = CheckResult::new(true, json!({"pairs": picks.len(), "max_ratio": 1.0}), Value::Null);
    let mut max_ratio: f64 = 1.0;
    for k in picks {
        let (x, y, _) = bin[k];
        let l1 = dijkstra(spanner, x, None).dist[y];
        let l2 = dijkstra(h.graph(), x, None).dist[y];
        let ok = if l1.is_infinite() {
            l2.is_infinite()
        } else {
            l1 <= l2 + CHECK_TOL && l2 <= ratio * l1 + CHECK_TOL
        };
        if l1.is_finite() && l1 > 0.0 {
            max_ratio = max_ratio.max(l2 / l1);
        }
        if !ok {
            sandwich = CheckResult::new(false, json!({"l1": l1, "l2": l2, "bound": ratio}), json!([x, y]));
            break;
        }
    }
    if sandwich.pass {
        sandwich.value["max_ratio"] = json!(max_ratio);
    }
    out.insert("path_sandwich", sandwich);
    out
}

/// Every answered query whose path qualified used at most `2 + ceil(t r / delta)` hops.
pub fn check_answer_hops(answers: &[QueryAnswer], params: &PhaseParams) -> CheckResult {
    let bound = params.h_hop_bound();
    let worst = answers.iter().filter_map(|a| a.hops).max().unwrap_or(0);
    let bad = answers.iter().find(|a| a.hops.is_some_and(|h| h > bound));
    CheckResult::new(bad.is_none(), worst, json!({"bound": bound, "query": bad.map(|a| [a.x, a.y])}))
}

/// Re-scans the edges that survived a phase for a mutually redundant pair,
/// with distances recomputed on the cluster graph.
pub fn check_no_redundant_pairs(survivors: &[LenEdge], h: &ClusterGraph, t1: f64) -> CheckResult {
    let mut cache: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for e in survivors {
        for s in [e.0, e.1] {
            cache.entry(s).or_insert_with(|| dijkstra(h.graph(), s, None).dist);
        }
    }
    let sp = |u: usize, v: usize| cache[&u][v];
    for (i, a) in survivors.iter().enumerate() {
        for b in &survivors[i + 1..] {
            let d = pairing_distance(sp, (a.0, a.1), (b.0, b.1));
            if mutually_redundant(d, a.2, b.2, t1) {
                return CheckResult::new(false, d, json!([[a.0, a.1], [b.0, b.1]]));
            }
        }
    }
    CheckResult::new(true, survivors.len(), Value::Null)
}

/// Independence and maximality of `inside` in the graph `adjacency`.
pub fn check_mis(adjacency: &[Vec<usize>], inside: &[bool]) -> CheckResult {
    for (v, nb) in adjacency.iter().enumerate() {
        if inside[v] {
            if let Some(&u) = nb.iter().find(|&&u| inside[u]) {
                return CheckResult::new(false, "not independent", json!([v, u]));
            }
        } else if !nb.iter().any(|&u| inside[u]) {
            return CheckResult::new(false, "not maximal", json!(v));
        }
    }
    CheckResult::new(true, inside.iter().filter(|&&b| b).count(), Value::Null)
}

/// Metric axioms of the pairing distance over `edges`: identity, symmetry
/// and the triangle inequality on all triples, or on `max_triples`
/// sampled ones when there are more.
pub fn check_dj_metric(edges: &[(usize, usize)], h: &WeightedGraph, max_triples: u64, seed: u64) -> CheckResult {
    let k = edges.len();
    let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(u, v) in edges {
        for s in [u, v] {
            rows.entry(s).or_insert_with(|| dijkstra(h, s, None).dist);
        }
    }
    let sp = |u: usize, v: usize| rows[&u][v];
    let dj: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| pairing_distance(sp, edges[i], edges[j])).collect())
        .collect();
    for i in 0..k {
        if dj[i][i] != 0.0 {
            return CheckResult::new(false, "identity", json!(i));
        }
        for j in 0..k {
            let (a, b) = (dj[i][j], dj[j][i]);
            if !(a == b || (a - b).abs() <= CHECK_TOL) {
                return CheckResult::new(false, "symmetry", json!([i, j]));
            }
        }
    }
    let total = (k as u64).pow(3);
    let triangle = |a: usize, b: usize, c: usize| -> bool {
        let lhs = dj[a][c];
        let rhs = dj[a][b] + dj[b][c];
        lhs <= rhs + CHECK_TOL || rhs.is_infinite()
    };
    let mut checked = 0u64;
    if total <= max_triples {
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    checked += 1;
                    if !triangle(a, b, c) {
                        return CheckResult::new(false, "triangle", json!([a, b, c]));
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..max_triples {
            let (a, b, c) = (rng.gen_range(0..k), rng.gen_range(0..k), rng.gen_range(0..k));
            checked += 1;
            if !triangle(a, b, c) {
                return CheckResult::new(false, "triangle", json!([a, b, c]));
            }
        }
    }
    CheckResult::new(true, checked, Value::Null)
}

/// Least-squares fit of `y = c1 ln n + c2 (ln n)^2` (no intercept).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolylogFit {
    pub c1: f64,
    pub c2: f64,
    /// `1 - SS_res / SS_tot`, with `SS_tot` taken about the mean of `y`.
    pub r2: f64,
}

pub fn fit_polylog(ns: &[f64], ys: &[f64]) -> Result<PolylogFit> {
    if ns.len() != ys.len() || ns.len() < 3 {
        return usage("polylog fit needs at least three (n, y) points");
    }
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&n, &y) in ns.iter().zip(ys) {
        let l = n.ln();
        let (x1, x2) = (l, l * l);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-12 {
        return usage("polylog fit is degenerate");
    }
    let c1 = (b1 * s22 - b2 * s12) / det;
    let c2 = (s11 * b2 - s12 * b1) / det;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&n, &y) in ns.iter().zip(ys) {
        let l = n.ln();
        let pred = c1 * l + c2 * l * l;
        ss_res += (y - pred).powi(2);
        ss_tot += (y - mean).powi(2);
    }
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 { 1.0 } else { 0.0 }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(PolylogFit { c1, c2, r2 })
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}
