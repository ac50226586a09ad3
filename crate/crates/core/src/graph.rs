//! Weighted undirected graphs and the shortest-path, component, MST and
//! stretch primitives every engine builds on.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{usage, Result};

/// Undirected graph with symmetric adjacency lists and positive weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph, rejecting self-loops, duplicates and non-positive or
    /// non-finite weights.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut g = WeightedGraph::new(n);
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return usage(format!("edge ({u},{v}) out of range for n={n}"));
            }
            if u == v {
                return usage(format!("self-loop at {u}"));
            }
            if !(w.is_finite() && w > 0.0) {
                return usage(format!("edge ({u},{v}) has invalid weight {w}"));
            }
            if !g.add_edge(u, v, w) {
                return usage(format!("duplicate edge ({u},{v})"));
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Inserts `{u, v}`; returns `false` if it was already present.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> bool {
        if self.has_edge(u, v) {
            return false;
        }
        self.adj[u].push((v, w));
        self.adj[v].push((u, w));
        true
    }

    /// Removes `{u, v}`; returns `false` if it was absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let Some(i) = self.adj[u].iter().position(|&(x, _)| x == v) else {
            return false;
        };
        self.adj[u].swap_remove(i);
        let j = self.adj[v]
            .iter()
            .position(|&(x, _)| x == u)
            .expect("adjacency is symmetric");
        self.adj[v].swap_remove(j);
        true
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].iter().any(|&(x, _)| x == v)
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adj[u].iter().find(|&&(x, _)| x == v).map(|&(_, w)| w)
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All edges as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| {
                nb.iter()
                    .filter(move |&&(v, _)| u < v)
                    .map(move |&(v, w)| (u, v, w))
            })
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().iter().map(|e| e.2).sum()
    }
}

/// Heap entry ordered so that `BinaryHeap` pops the smallest distance first,
/// breaking ties by smaller node id.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathResult {
    pub source: usize,
    /// `f64::INFINITY` for unreachable nodes and nodes beyond the cutoff.
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
}

impl ShortestPathResult {
    /// Number of edges on the recorded path to `target`.
    pub fn hops(&self, target: usize) -> Option<usize> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut hops = 0;
        let mut cur = target;
        while let Some(p) = self.parent[cur] {
            cur = p;
            hops += 1;
        }
        Some(hops)
    }
}

/// Single-source shortest paths. With a cutoff, nodes farther than it are
/// reported at infinity.
pub fn dijkstra(g: &WeightedGraph, source: usize, radius_cutoff: Option<f64>) -> ShortestPathResult {
    let n = g.n();
    let cutoff = radius_cutoff.unwrap_or(f64::INFINITY);
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.neighbors(u) {
            let nd = d + w;
            if nd <= cutoff && nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some(u);
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    ShortestPathResult {
        source,
        dist,
        parent,
    }
}

/// Result of a bounded search over an implicitly given graph.
#[derive(Debug, Clone, Default)]
pub struct SparsePaths {
    dist: HashMap<usize, f64>,
    parent: HashMap<usize, usize>,
}

impl SparsePaths {
    pub fn dist(&self, v: usize) -> Option<f64> {
        self.dist.get(&v).copied()
    }

    /// Distance to `v`, infinity when not reached.
    pub fn dist_or_inf(&self, v: usize) -> f64 {
        self.dist(v).unwrap_or(f64::INFINITY)
    }

    pub fn hops(&self, target: usize) -> Option<usize> {
        self.dist.get(&target)?;
        let mut hops = 0;
        let mut cur = target;
        while let Some(&p) = self.parent.get(&cur) {
            cur = p;
            hops += 1;
        }
        Some(hops)
    }

    /// Reached nodes with their distances, sorted by node id.
    pub fn settled(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<_> = self.dist.iter().map(|(&v, &d)| (v, d)).collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }
}

/// Dijkstra over a graph described by a neighbour callback. Only nodes within
/// `cutoff` of `source` are explored, so cost is proportional to the ball.
pub fn sparse_dijkstra<F>(source: usize, cutoff: f64, mut neighbors: F) -> SparsePaths
where
    F: FnMut(usize, &mut Vec<(usize, f64)>),
{
    let mut paths = SparsePaths::default();
    let mut done = std::collections::HashSet::new();
    let mut heap = BinaryHeap::new();
    let mut buf = Vec::new();
    paths.dist.insert(source, 0.0);
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if !done.insert(u) {
            continue;
        }
        buf.clear();
        neighbors(u, &mut buf);
        for &(v, w) in &buf {
            let nd = d + w;
            if nd <= cutoff && nd < paths.dist_or_inf(v) {
                paths.dist.insert(v, nd);
                paths.parent.insert(v, u);
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    paths
}

/// Reusable bounded Dijkstra over node ids `0..n`.
///
/// Same contract as [`sparse_dijkstra`], but the distance arrays are kept
/// between runs and only the touched entries are reset, which matters when
/// thousands of small balls are grown over one graph.
#[derive(Debug, Clone)]
pub struct BallSearch {
    dist: Vec<f64>,
    parent: Vec<usize>,
    hops: Vec<usize>,
    done: Vec<bool>,
    touched: Vec<usize>,
    settled: Vec<usize>,
    heap: BinaryHeap<Entry>,
    buf: Vec<(usize, f64)>,
}

impl BallSearch {
    pub fn new(n: usize) -> Self {
        BallSearch {
            dist: vec![f64::INFINITY; n],
            parent: vec![usize::MAX; n],
            hops: vec![0; n],
            done: vec![false; n],
            touched: Vec::new(),
            settled: Vec::new(),
            heap: BinaryHeap::new(),
            buf: Vec::new(),
        }
    }

    /// Grows the ball of radius `cutoff` around `source`.
    pub fn run<F>(&mut self, source: usize, cutoff: f64, mut neighbors: F)
    where
        F: FnMut(usize, &mut Vec<(usize, f64)>),
    {
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
            self.parent[v] = usize::MAX;
            self.done[v] = false;
        }
        self.touched.clear();
        self.settled.clear();
        self.heap.clear();
        self.dist[source] = 0.0;
        self.hops[source] = 0;
        self.touched.push(source);
        self.heap.push(Entry {
            dist: 0.0,
            node: source,
        });
        let mut buf = std::mem::take(&mut self.buf);
        while let Some(Entry { dist: d, node: u }) = self.heap.pop() {
            if self.done[u] {
                continue;
            }
            self.done[u] = true;
            self.settled.push(u);
            buf.clear();
            neighbors(u, &mut buf);
            for &(v, w) in &buf {
                let nd = d + w;
                if nd <= cutoff && nd < self.dist[v] {
                    if self.dist[v].is_infinite() {
                        self.touched.push(v);
                    }
                    self.dist[v] = nd;
                    self.parent[v] = u;
                    self.hops[v] = self.hops[u] + 1;
                    self.heap.push(Entry { dist: nd, node: v });
                }
            }
        }
        self.buf = buf;
    }

    /// Distance from the last source, infinity outside the ball.
    pub fn dist(&self, v: usize) -> f64 {
        self.dist[v]
    }

    /// Edges on the recorded shortest path to `v`.
    pub fn hops(&self, v: usize) -> Option<usize> {
        self.dist[v].is_finite().then(|| self.hops[v])
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.dist[v].is_finite() && self.parent[v] != usize::MAX).then(|| self.parent[v])
    }

    /// Nodes of the ball in the order they were settled.
    pub fn settled(&self) -> &[usize] {
        &self.settled
    }
}

/// Connected components, each sorted, listed by smallest member.
pub fn connected_components(g: &WeightedGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Minimum spanning tree edges by Kruskal, ordered by weight then endpoints.
pub fn mst_edges(g: &WeightedGraph) -> Result<Vec<(usize, usize, f64)>> {
    let mut edges = g.edges();
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut sets = DisjointSets::new(g.n());
    let mut tree = Vec::with_capacity(g.n().saturating_sub(1));
    for (u, v, w) in edges {
        if sets.union(u, v) {
            tree.push((u, v, w));
        }
    }
    if tree.len() + 1 < g.n() {
        return usage(format!(
            "graph is disconnected ({} of {} tree edges)",
            tree.len(),
            g.n() - 1
        ));
    }
    Ok(tree)
}

pub fn mst_weight(g: &WeightedGraph) -> Result<f64> {
    Ok(mst_edges(g)?.iter().map(|e| e.2).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stretch {
    pub max: f64,
    /// An edge of the base graph attaining `max`.
    pub witness: Option<(usize, usize)>,
}

/// Largest ratio `sp_sub(u, v) / w(u, v)` over the edges of `g`.
///
/// Bounding every edge bounds every pair: a shortest path in `g` decomposes
/// into edges, each of which is stretched by at most the maximum.
pub fn edge_stretch(g: &WeightedGraph, sub: &WeightedGraph) -> Result<Stretch> {
    if g.n() != sub.n() {
        return usage(format!(
            "subgraph has {} nodes, graph has {}",
            sub.n(),
            g.n()
        ));
    }
    for (u, v, _) in sub.edges() {
        if !g.has_edge(u, v) {
            return usage(format!("subgraph edge ({u},{v}) is not in the graph"));
        }
    }
    let mut best = Stretch {
        max: 1.0,
        witness: None,
    };
    for u in 0..g.n() {
        if !g.neighbors(u).iter().any(|&(v, _)| v > u) {
            continue;
        }
        let sp = dijkstra(sub, u, None);
        let mut out: Vec<_> = g.neighbors(u).iter().filter(|e| e.0 > u).copied().collect();
        out.sort_unstable_by_key(|e| e.0);
        for (v, w) in out {
            let ratio = sp.dist[v] / w;
            if best.witness.is_none() || ratio > best.max {
                best = Stretch {
                    max: ratio,
                    witness: Some((u, v)),
                };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path3() -> WeightedGraph {
        WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> WeightedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = WeightedGraph::new(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(p) {
                    g.add_edge(u, v, rng.gen_range(0.1..2.0));
                }
            }
        }
        g
    }

    fn floyd_warshall(g: &WeightedGraph) -> Vec<Vec<f64>> {
        let n = g.n();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (u, row) in d.iter_mut().enumerate() {
            row[u] = 0.0;
        }
        for (u, v, w) in g.edges() {
            d[u][v] = w;
            d[v][u] = w;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn dijkstra_on_a_path() {
        let sp = dijkstra(&path3(), 0, None);
        assert_eq!(sp.dist, vec![0.0, 1.0, 2.0]);
        assert_eq!(sp.hops(2), Some(2));
    }

    #[test]
    fn dijkstra_cutoff_hides_far_nodes() {
        let sp = dijkstra(&path3(), 0, Some(1.5));
        assert_eq!(sp.dist[1], 1.0);
        assert!(sp.dist[2].is_infinite());
        assert_eq!(sp.hops(2), None);
    }

    #[test]
    fn dijkstra_matches_floyd_warshall() {
        for seed in 0..5 {
            let g = random_graph(20, 0.2, seed);
            let all = floyd_warshall(&g);
            for s in 0..g.n() {
                let sp = dijkstra(&g, s, None);
                assert_eq!(sp.dist[s], 0.0);
                for v in 0..g.n() {
                    let (a, b) = (sp.dist[v], all[s][v]);
                    assert!(a == b || (a - b).abs() < 1e-12, "{s}->{v}: {a} vs {b}");
                }
                // relaxation inequality holds on every edge
                for (u, v, w) in g.edges() {
                    assert!(sp.dist[v] <= sp.dist[u] + w + 1e-12);
                    assert!(sp.dist[u] <= sp.dist[v] + w + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sparse_dijkstra_agrees_with_dense() {
        let g = random_graph(30, 0.15, 11);
        for s in 0..g.n() {
            let dense = dijkstra(&g, s, Some(2.5));
            let sparse = sparse_dijkstra(s, 2.5, |u, out| out.extend_from_slice(g.neighbors(u)));
            for v in 0..g.n() {
                assert_eq!(dense.dist[v], sparse.dist_or_inf(v));
            }
        }
    }

    #[test]
    fn ball_search_reuse_matches_dense() {
        let g = random_graph(30, 0.15, 13);
        let mut ball = BallSearch::new(g.n());
        for s in 0..g.n() {
            let dense = dijkstra(&g, s, Some(2.0));
            ball.run(s, 2.0, |u, out| out.extend_from_slice(g.neighbors(u)));
            for v in 0..g.n() {
                assert_eq!(dense.dist[v], ball.dist(v));
                assert_eq!(dense.hops(v), ball.hops(v));
            }
            assert_eq!(ball.settled().len(), dense.dist.iter().filter(|d| d.is_finite()).count());
        }
    }

    #[test]
    fn components_examples() {
        let g = WeightedGraph::new(3);
        assert_eq!(connected_components(&g), vec![vec![0], vec![1], vec![2]]);
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(connected_components(&g), vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn components_match_label_propagation() {
        for seed in 0..5 {
            let g = random_graph(40, 0.04, seed);
            // independent oracle: iterate min-label propagation to a fixpoint
            let mut label: Vec<usize> = (0..g.n()).collect();
            loop {
                let mut changed = false;
                for (u, v, _) in g.edges() {
                    let m = label[u].min(label[v]);
                    if label[u] != m || label[v] != m {
                        label[u] = m;
                        label[v] = m;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            let comps = connected_components(&g);
            for comp in &comps {
                assert!(comp.iter().all(|&v| label[v] == label[comp[0]]));
            }
            let mut labels: Vec<_> = label.clone();
            labels.sort_unstable();
            labels.dedup();
            assert_eq!(labels.len(), comps.len());
        }
    }

    #[test]
    fn mst_examples() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 0.4)]).unwrap();
        assert_eq!(mst_weight(&g).unwrap(), 0.4);
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)]).unwrap();
        assert_eq!(mst_weight(&g).unwrap(), 3.0);
        let g = WeightedGraph::new(2);
        assert!(mst_weight(&g).is_err());
    }

    fn prim(g: &WeightedGraph) -> f64 {
        let n = g.n();
        let mut best = vec![f64::INFINITY; n];
        let mut used = vec![false; n];
        best[0] = 0.0;
        let mut total = 0.0;
        for _ in 0..n {
            let u = (0..n)
                .filter(|&v| !used[v])
                .min_by(|&a, &b| best[a].total_cmp(&best[b]))
                .unwrap();
            used[u] = true;
            total += best[u];
            for &(v, w) in g.neighbors(u) {
                if !used[v] && w < best[v] {
                    best[v] = w;
                }
            }
        }
        total
    }

    #[test]
    fn mst_matches_prim() {
        for seed in 0..10 {
            let mut g = random_graph(15, 0.4, seed);
            for u in 1..15 {
                if connected_components(&g).len() == 1 {
                    break;
                }
                g.add_edge(u - 1, u, 5.0);
            }
            let kruskal = mst_weight(&g).unwrap();
            assert!((kruskal - prim(&g)).abs() < 1e-9);
        }
    }

    #[test]
    fn mst_is_no_heavier_than_random_spanning_trees() {
        let g = random_graph(12, 0.6, 3);
        assert_eq!(connected_components(&g).len(), 1);
        let best = mst_weight(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            // random spanning tree: Kruskal over shuffled edges
            let mut edges = g.edges();
            for i in (1..edges.len()).rev() {
                edges.swap(i, rng.gen_range(0..=i));
            }
            let mut sets = DisjointSets::new(g.n());
            let w: f64 = edges
                .into_iter()
                .filter(|&(u, v, _)| sets.union(u, v))
                .map(|e| e.2)
                .sum();
            assert!(best <= w + 1e-12);
        }
    }

    #[test]
    fn stretch_examples() {
        let g = WeightedGraph::from_edges(
            4,
            [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)],
        )
        .unwrap();
        let same = edge_stretch(&g, &g).unwrap();
        assert_eq!(same.max, 1.0);
        let mut sub = g.clone();
        sub.remove_edge(0, 3);
        let s = edge_stretch(&g, &sub).unwrap();
        assert_eq!(s.max, 3.0);
        assert_eq!(s.witness, Some((0, 3)));
    }

    #[test]
    fn stretch_rejects_foreign_edges() {
        let g = path3();
        let sub = WeightedGraph::from_edges(3, [(0, 2, 2.0)]).unwrap();
        assert!(edge_stretch(&g, &sub).is_err());
    }

    #[test]
    fn disconnected_subgraph_has_infinite_stretch() {
        let g = path3();
        let sub = WeightedGraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        let s = edge_stretch(&g, &sub).unwrap();
        assert!(s.max.is_infinite());
        assert_eq!(s.witness, Some((1, 2)));
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(WeightedGraph::from_edges(2, [(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::from_edges(2, [(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::from_edges(2, [(0, 1, f64::NAN)]).is_err());
        assert!(WeightedGraph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        assert!(WeightedGraph::from_edges(2, [(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn add_and_remove_keep_adjacency_symmetric() {
        let mut g = WeightedGraph::new(4);
        assert!(g.add_edge(0, 1, 1.0));
        assert!(!g.add_edge(1, 0, 1.0));
        assert!(g.add_edge(2, 1, 0.5));
        assert_eq!(g.weight(1, 2), Some(0.5));
        assert!(g.remove_edge(1, 0));
        assert!(!g.remove_edge(0, 1));
        assert!(!g.has_edge(1, 0));
        assert_eq!(g.edges(), vec![(1, 2, 0.5)]);
    }
}
