use crate::error::{Error, Result};
use crate::geometry::{UbgInstance, LENGTH_TOL};
use crate::graph::{connected_components, WeightedGraph};
use crate::greedy::greedy_over_edges;

use super::{LenEdge, PhaseParams};

/// Edges grouped by bin; `bins[i]` is `E_i`, sorted by endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedEdges {
    pub bins: Vec<Vec<LenEdge>>,
}

impl BinnedEdges {
    pub fn total(&self) -> usize {
        self.bins.iter().map(Vec::len).sum()
    }

    pub fn nonempty(&self) -> usize {
        self.bins.iter().filter(|b| !b.is_empty()).count()
    }
}

/// Splits the instance edges into `E_0, ..., E_m`.
pub fn bin_edges(inst: &UbgInstance, params: &PhaseParams) -> Result<BinnedEdges> {
    let mut bins = vec![Vec::new(); params.m + 1];
    for &(u, v) in &inst.edges {
        let len = inst.dist(u, v);
        if len > 1.0 + LENGTH_TOL {
            return Err(Error::ModelViolation(format!(
                "edge ({u},{v}) has length {len} > 1"
            )));
        }
        if len <= 0.0 {
            return Err(Error::ModelViolation(format!(
                "edge ({u},{v}) joins coincident points"
            )));
        }
        bins[params.bin_index(len)].push((u, v, len));
    }
    Ok(BinnedEdges { bins })
}

/// Spanner of the shortest bin: greedy on each connected component of
/// `G_0`, each of which must be a clique of the instance.
pub fn process_short_edges(inst: &UbgInstance, e0: &[LenEdge], t: f64) -> Result<WeightedGraph> {
    let n = inst.n();
    let mut spanner = WeightedGraph::new(n);
    if e0.is_empty() {
        return Ok(spanner);
    }
    let g0 = WeightedGraph::from_edges(n, e0.iter().copied())?;
    let mut comp_of = vec![usize::MAX; n];
    let comps: Vec<Vec<usize>> = connected_components(&g0)
        .into_iter()
        .filter(|c| c.len() > 1)
        .collect();
    for (k, comp) in comps.iter().enumerate() {
        for (i, &u) in comp.iter().enumerate() {
            comp_of[u] = k;
            if let Some(&v) = comp[i + 1..].iter().find(|&&v| !inst.has_edge(u, v)) {
                return Err(Error::ModelViolation(format!(
                    "short-edge component containing {u} and {v} is not a clique"
                )));
            }
        }
    }
    let mut per_comp = vec![Vec::new(); comps.len()];
    for &e in e0 {
        per_comp[comp_of[e.0]].push(e);
    }
    for edges in per_comp {
        for (u, v) in greedy_over_edges(edges.iter().copied(), t).edges {
            spanner.add_edge(u, v, inst.dist(u, v));
        }
    }
    Ok(spanner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_instance, EdgePolicy, Point};
    use crate::graph::dijkstra;
    use crate::relaxed::derive_params;

    #[test]
    fn tiny_edges_all_land_in_bin_zero() {
        let pts = vec![
            Point::new(vec![0.0, 0.0]),
            Point::new(vec![0.001, 0.0]),
            Point::new(vec![0.0, 0.001]),
        ];
        let inst = UbgInstance::from_parts(2, 0.7, EdgePolicy::All, 0, pts, [(0, 1), (0, 2), (1, 2)]);
        let p = derive_params(1.5, 0.7, 3).unwrap();
        let b = bin_edges(&inst, &p).unwrap();
        assert_eq!(b.bins[0].len(), 3);
        assert_eq!(b.total(), 3);
    }

    #[test]
    fn bin_index_matches_closed_form() {
        let inst = generate_instance(100, 2, 0.7, EdgePolicy::All, 3).unwrap();
        let p = derive_params(1.5, 0.7, 100).unwrap();
        let b = bin_edges(&inst, &p).unwrap();
        assert_eq!(b.total(), inst.edges.len());
        for (i, bin) in b.bins.iter().enumerate() {
            for &(_, _, len) in bin {
                let closed = ((100.0 * len / 0.7).ln() / p.r.ln()).ceil().max(0.0) as usize;
                // the closed form can land one off exactly on a boundary
                assert!(closed.abs_diff(i) <= 1, "len {len}: bin {i} vs {closed}");
                assert!(len <= p.w(i) && (i == 0 || len > p.w(i - 1)));
            }
        }
    }

    #[test]
    fn overlong_edge_is_rejected() {
        let pts = vec![Point::new(vec![0.0, 0.0]), Point::new(vec![1.5, 0.0])];
        let inst = UbgInstance::from_parts(2, 0.7, EdgePolicy::All, 0, pts, [(0, 1)]);
        let p = derive_params(1.5, 0.7, 2).unwrap();
        assert!(matches!(bin_edges(&inst, &p), Err(Error::ModelViolation(_))));
    }

    #[test]
    fn empty_short_bin_gives_empty_spanner() {
        let inst = generate_instance(10, 2, 0.7, EdgePolicy::All, 1).unwrap();
        let g = process_short_edges(&inst, &[], 1.5).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn single_clique_is_a_greedy_triangle() {
        let pts = vec![
            Point::new(vec![0.0, 0.0]),
            Point::new(vec![0.001, 0.0]),
            Point::new(vec![0.002, 0.000_1]),
        ];
        let inst = UbgInstance::from_parts(2, 0.7, EdgePolicy::All, 0, pts, [(0, 1), (0, 2), (1, 2)]);
        let e0: Vec<LenEdge> = inst.edges.iter().map(|&(u, v)| (u, v, inst.dist(u, v))).collect();
        let g = process_short_edges(&inst, &e0, 2.0).unwrap();
        assert_eq!(g.edges().len(), 2);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2));
    }

    #[test]
    fn non_clique_component_is_a_model_violation() {
        // a path 0-1-2 in the short bin whose ends are not adjacent
        let pts = vec![
            Point::new(vec![0.0, 0.0]),
            Point::new(vec![0.001, 0.0]),
            Point::new(vec![0.002, 0.0]),
        ];
        let inst = UbgInstance::from_parts(2, 0.7, EdgePolicy::All, 0, pts, [(0, 1), (1, 2)]);
        let e0: Vec<LenEdge> = inst.edges.iter().map(|&(u, v)| (u, v, inst.dist(u, v))).collect();
        assert!(matches!(
            process_short_edges(&inst, &e0, 1.5),
            Err(Error::ModelViolation(_))
        ));
    }

    #[test]
    fn dense_cluster_short_edges_get_t_paths() {
        // 60 nodes packed into a tiny square: many edges fall in bin 0
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(60);
        let pts: Vec<Point> = (0..60)
            .map(|_| Point::new(vec![rng.gen::<f64>() * 0.02, rng.gen::<f64>() * 0.02]))
            .collect();
        let n = pts.len();
        let inst = UbgInstance::from_parts(
            2,
            1.0,
            EdgePolicy::All,
            0,
            pts,
            (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))),
        );
        let p = derive_params(1.5, 1.0, n).unwrap();
        let b = bin_edges(&inst, &p).unwrap();
        assert!(b.bins[0].len() > 50);
        let g0 = process_short_edges(&inst, &b.bins[0], 1.5).unwrap();
        for &(u, v, len) in &b.bins[0] {
            let sp = dijkstra(&g0, u, None).dist[v];
            assert!(sp <= 1.5 * len + 1e-9);
        }
    }
}
