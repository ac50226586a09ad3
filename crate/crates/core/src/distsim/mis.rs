use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};

use super::sim::{Record, Simulator};

/// Ordering key of a J-node. Larger keys win.
pub type JKey = (usize, usize);

/// A node of a derived conflict graph, hosted by a network node.
#[derive(Debug, Clone, PartialEq)]
pub struct JNode {
    pub host: usize,
    pub key: JKey,
    /// J-neighbours this node found on its own, with their hosts.
    pub claims: Vec<(JKey, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MisOutcome {
    /// Indexed like the input nodes.
    pub inside: Vec<bool>,
    /// Symmetrized J adjacency as learned by the nodes, by input index.
    pub adjacency: Vec<Vec<usize>>,
    /// For each J-node, the neighbours it saw join.
    pub joined_neighbors: Vec<Vec<usize>>,
    pub iterations: usize,
}

/// Per host: `(key, claimed keys)` of every J-node it publishes.
struct HostList(Vec<(JKey, Vec<JKey>)>);

impl Record for HostList {
    fn words(&self) -> usize {
        self.0.iter().map(|(_, c)| 2 + 2 * c.len()).sum()
    }
}

fn by_host<'a>(
    n: usize,
    nodes: &[JNode],
    pick: impl Fn(usize) -> Option<Vec<JKey>> + 'a,
) -> Vec<Option<HostList>> {
    let mut out: Vec<Option<HostList>> = (0..n).map(|_| None).collect();
    for (j, node) in nodes.iter().enumerate() {
        if let Some(extra) = pick(j) {
            out[node.host].get_or_insert_with(|| HostList(Vec::new())).0.push((node.key, extra));
        }
    }
    for list in out.iter_mut().flatten() {
        list.0.sort_unstable_by_key(|e| e.0);
    }
    out
}

/// Maximal independent set of a conflict graph whose nodes live on network
/// hosts and whose edges span at most `radius` hops.
///
/// Each iteration is two waves of `radius` rounds. In the first, every
/// undecided J-node whose key beats all undecided neighbours joins. In the
/// second, the new members announce themselves and their neighbours
/// withdraw. The first wave also carries each node's claims, so an edge
/// known to either side is known to both.
pub fn mis_distributed(
    sim: &mut Simulator,
    step: &str,
    radius: usize,
    nodes: &[JNode],
) -> Result<MisOutcome> {
    let n = sim.n();
    let k = nodes.len();
    let mut index = std::collections::BTreeMap::new();
    for (j, node) in nodes.iter().enumerate() {
        if index.insert(node.key, j).is_some() {
            return Err(Error::Invariant(format!("duplicate J-node key {:?}", node.key)));
        }
    }
    let mut out = MisOutcome {
        inside: vec![false; k],
        adjacency: vec![Vec::new(); k],
        joined_neighbors: vec![Vec::new(); k],
        iterations: 0,
    };
    if k == 0 {
        return Ok(out);
    }
    let mut decided = vec![false; k];
    let host_of = |key: &JKey| nodes[index[key]].host;

    loop {
        out.iterations += 1;
        let first = out.iterations == 1;
        let wave = by_host(n, nodes, |j| {
            (!decided[j]).then(|| {
                if first {
                    nodes[j].claims.iter().map(|c| c.0).collect()
                } else {
                    Vec::new()
                }
            })
        });
        let g = sim.gather(step, radius, wave)?;
        let mut undecided_nbrs: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (j, node) in nodes.iter().enumerate() {
            if decided[j] {
                continue;
            }
            if first {
                let mut nbrs: BTreeSet<usize> = BTreeSet::new();
                for &(c, host) in &node.claims {
                    if g.read(node.host, host).is_none() {
                        return Err(Error::Invariant(format!(
                            "J-neighbour {c:?} of {:?} is hosted outside radius {radius}",
                            node.key
                        )));
                    }
                    nbrs.insert(index.get(&c).copied().ok_or_else(|| {
                        Error::Invariant(format!("claim {c:?} names no J-node"))
                    })?);
                }
                for (_, _, list) in g.visible(node.host) {
                    for (other, claims) in &list.0 {
                        if *other != node.key && claims.binary_search(&node.key).is_ok() {
                            nbrs.insert(index[other]);
                        }
                    }
                }
                nbrs.remove(&j);
                out.adjacency[j] = nbrs.into_iter().collect();
            }
            for &o in &out.adjacency[j] {
                let listed = g
                    .read(node.host, host_of(&nodes[o].key))
                    .is_some_and(|l| l.0.binary_search_by_key(&nodes[o].key, |e| e.0).is_ok());
                if listed {
                    undecided_nbrs[j].push(o);
                }
            }
        }
        sim.close(step, &g);
        let mut joined = Vec::new();
        for j in 0..k {
            if !decided[j] && undecided_nbrs[j].iter().all(|&o| nodes[o].key < nodes[j].key) {
                out.inside[j] = true;
                decided[j] = true;
                joined.push(j);
            }
        }

        let announce = by_host(n, nodes, |j| {
            (joined.binary_search(&j).is_ok() && !out.adjacency[j].is_empty()).then(Vec::new)
        });
        let g = sim.gather(step, radius, announce)?;
        for (j, node) in nodes.iter().enumerate() {
            for &o in &out.adjacency[j] {
                let o_key = nodes[o].key;
                let announced = g
                    .read(node.host, host_of(&o_key))
                    .is_some_and(|l| l.0.binary_search_by_key(&o_key, |e| e.0).is_ok());
                if announced {
                    out.joined_neighbors[j].push(o);
                    decided[j] = true;
                }
            }
        }
        sim.close(step, &g);
        if decided.iter().all(|&d| d) {
            break;
        }
    }
    Ok(out)
}
