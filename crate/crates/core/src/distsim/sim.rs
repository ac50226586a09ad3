use std::cell::Cell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Something a node can publish for neighbours to relay.
pub trait Record {
    /// Size in words of O(log n) bits.
    fn words(&self) -> usize;
}

/// One gather as it actually ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatherRecord {
    pub phase: usize,
    pub step: String,
    pub declared: usize,
    /// Largest hop distance of any record a node read.
    pub max_hop_seen: usize,
    pub max_view: usize,
}

/// Round and message bookkeeping for a whole run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    pub rounds_total: u64,
    pub rounds_by_step: BTreeMap<String, u64>,
    pub max_payload_words: usize,
    pub max_payload_records: usize,
    pub messages_total: u64,
    pub per_round_messages: Vec<u64>,
    pub gathers: Vec<GatherRecord>,
}

/// Records published by every node for one step, plus what each node
/// received. Reads go through [`Gathered::read`] so that a node can only see
/// records that reached it.
#[derive(Debug)]
pub struct Gathered<R> {
    pub radius: usize,
    records: Vec<Option<R>>,
    /// Per node, `(id, hop)` of every record received, sorted by id.
    views: Vec<Vec<(usize, usize)>>,
    max_hop_seen: Cell<usize>,
}

impl<R> Gathered<R> {
    /// Record of `v` as seen by `reader`, if it reached `reader`.
    pub fn read(&self, reader: usize, v: usize) -> Option<&R> {
        let view = &self.views[reader];
        let k = view.binary_search_by_key(&v, |e| e.0).ok()?;
        self.note_hop(view[k].1);
        self.records[v].as_ref()
    }

    /// Every record `reader` received, with its hop distance, by id.
    pub fn visible(&self, reader: usize) -> impl Iterator<Item = (usize, usize, &R)> + '_ {
        self.views[reader].iter().map(move |&(v, hop)| {
            self.note_hop(hop);
            (v, hop, self.records[v].as_ref().expect("views only list publishers"))
        })
    }

    pub fn hop(&self, reader: usize, v: usize) -> Option<usize> {
        let view = &self.views[reader];
        view.binary_search_by_key(&v, |e| e.0).ok().map(|k| view[k].1)
    }

    pub fn view_size(&self, reader: usize) -> usize {
        self.views[reader].len()
    }

    fn note_hop(&self, hop: usize) {
        if hop > self.max_hop_seen.get() {
            self.max_hop_seen.set(hop);
        }
    }
}

/// Lock-step message passing over the network graph.
#[derive(Debug)]
pub struct Simulator<'a> {
    net: &'a WeightedGraph,
    max_rounds: u64,
    /// `stamp[v * n + x] == epoch` iff `v` already holds `x`'s record.
    stamp: Vec<u32>,
    epoch: u32,
    pub phase: usize,
    pub acct: Accounting,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a WeightedGraph, max_rounds: u64) -> Self {
        let n = net.n();
        Simulator {
            net,
            max_rounds,
            stamp: vec![0; n * n],
            epoch: 0,
            phase: 0,
            acct: Accounting::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.net.n()
    }

    /// Adds `rounds` to `step` without traffic of its own.
    fn charge(&mut self, step: &str, rounds: u64) -> Result<()> {
        self.acct.rounds_total += rounds;
        *self.acct.rounds_by_step.entry(step.to_string()).or_default() += rounds;
        if self.acct.rounds_total > self.max_rounds {
            return Err(Error::Divergence {
                max_rounds: self.max_rounds,
                round: self.acct.rounds_total,
            });
        }
        Ok(())
    }

    /// Floods every published record `radius` hops. In each round a node
    /// forwards, to every neighbour, the records it first received in the
    /// previous round. Costs `radius` rounds, or nothing when no node
    /// publishes anything.
    pub fn gather<R: Record>(&mut self, step: &str, radius: usize, records: Vec<Option<R>>) -> Result<Gathered<R>> {
        let n = self.n();
        assert_eq!(records.len(), n, "one record slot per node");
        let active = records.iter().any(Option::is_some);
        let words: Vec<usize> = records.iter().map(|r| r.as_ref().map_or(0, Record::words)).collect();
        let mut views: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        if !active {
            return Ok(Gathered {
                radius,
                records,
                views,
                max_hop_seen: Cell::new(0),
            });
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new(); n];
        for u in 0..n {
            if records[u].is_some() {
                self.stamp[u * n + u] = epoch;
                frontier[u].push(u);
                views[u].push((u, 0));
            }
        }
        for round in 1..=radius {
            let mut next: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut messages = 0u64;
            for u in 0..n {
                if frontier[u].is_empty() {
                    continue;
                }
                let payload: usize = frontier[u].iter().map(|&x| words[x]).sum();
                for &(v, _) in self.net.neighbors(u) {
                    messages += 1;
                    self.acct.max_payload_words = self.acct.max_payload_words.max(payload);
                    self.acct.max_payload_records = self.acct.max_payload_records.max(frontier[u].len());
                    let row = v * n;
                    for &x in &frontier[u] {
                        if self.stamp[row + x] != epoch {
                            self.stamp[row + x] = epoch;
                            next[v].push(x);
                            views[v].push((x, round));
                        }
                    }
                }
            }
            frontier = next;
            self.acct.messages_total += messages;
            self.acct.per_round_messages.push(messages);
            self.charge(step, 1)?;
        }
        for v in &mut views {
            v.sort_unstable();
        }
        Ok(Gathered {
            radius,
            records,
            views,
            max_hop_seen: Cell::new(0),
        })
    }

    /// Logs a finished gather for the locality audit.
    pub fn close<R>(&mut self, step: &str, g: &Gathered<R>) {
        if g.views.iter().all(Vec::is_empty) {
            return;
        }
        self.acct.gathers.push(GatherRecord {
            phase: self.phase,
            step: step.to_string(),
            declared: g.radius,
            max_hop_seen: g.max_hop_seen.get(),
            max_view: g.views.iter().map(Vec::len).max().unwrap_or(0),
        });
    }
}

/// A node's view after `hops` rounds of flooding from a fresh start, every
/// node publishing its id: the ids it received with their hop distances.
pub fn gather_khop(net: &WeightedGraph, node: usize, hops: usize) -> Vec<(usize, usize)> {
    struct Id;
    impl Record for Id {
        fn words(&self) -> usize {
            1
        }
    }
    let mut sim = Simulator::new(net, u64::MAX);
    let g = sim
        .gather("probe", hops, (0..net.n()).map(|_| Some(Id)).collect())
        .expect("no round cap");
    g.views[node].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_instance, EdgePolicy};
    use std::collections::VecDeque;

    fn bfs_ball(g: &WeightedGraph, s: usize, k: usize) -> Vec<(usize, usize)> {
        let mut hop = vec![usize::MAX; g.n()];
        hop[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            if hop[u] == k {
                continue;
            }
            for &(v, _) in g.neighbors(u) {
                if hop[v] == usize::MAX {
                    hop[v] = hop[u] + 1;
                    q.push_back(v);
                }
            }
        }
        (0..g.n()).filter(|&v| hop[v] <= k).map(|v| (v, hop[v])).collect()
    }

    #[test]
    fn zero_hops_is_just_the_node() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
        assert_eq!(gather_khop(&g, 1, 0), vec![(1, 0)]);
    }

    #[test]
    fn two_hops_from_a_path_end() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5)]).unwrap();
        assert_eq!(gather_khop(&g, 0, 2), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn flooding_equals_bfs_ball() {
        let inst = generate_instance(80, 2, 0.7, EdgePolicy::Bernoulli(0.5), 21).unwrap();
        let g = inst.graph();
        for k in 0..4 {
            for s in (0..g.n()).step_by(9) {
                assert_eq!(gather_khop(&g, s, k), bfs_ball(&g, s, k), "node {s}, k {k}");
            }
        }
    }

    #[test]
    fn rounds_and_messages_are_counted() {
        struct W(usize);
        impl Record for W {
            fn words(&self) -> usize {
                self.0
            }
        }
        let g = WeightedGraph::from_edges(3, [(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
        let mut sim = Simulator::new(&g, 100);
        let got = sim.gather("x", 2, vec![Some(W(3)), None, Some(W(1))]).unwrap();
        assert_eq!(sim.acct.rounds_total, 2);
        // round 1: 0 and 2 each send to their single neighbour; round 2: 1 relays both ways
        assert_eq!(sim.acct.per_round_messages, vec![2, 2]);
        assert_eq!(sim.acct.max_payload_words, 4);
        assert!(got.read(0, 2).is_some());
        assert!(got.read(1, 1).is_none());
        sim.close("x", &got);
        assert_eq!(sim.acct.gathers[0].max_hop_seen, 2);

        let quiet: Gathered<W> = sim.gather("y", 5, vec![None, None, None]).unwrap();
        assert_eq!(sim.acct.rounds_total, 2);
        assert_eq!(quiet.view_size(0), 0);
    }

    #[test]
    fn round_cap_diverges() {
        #[derive(Debug)]
        struct W;
        impl Record for W {
            fn words(&self) -> usize {
                1
            }
        }
        let g = WeightedGraph::from_edges(2, [(0, 1, 0.5)]).unwrap();
        let mut sim = Simulator::new(&g, 3);
        let err = sim.gather("x", 4, vec![Some(W), Some(W)]).unwrap_err();
        assert!(matches!(err, Error::Divergence { max_rounds: 3, round: 4 }));
    }
}
