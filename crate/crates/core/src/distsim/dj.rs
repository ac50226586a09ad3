use crate::graph::{BallSearch, WeightedGraph};
use crate::relaxed::pairing_distance;

/// Distance between two same-phase additions in the redundancy conflict
/// graph: the cheaper way of pairing their endpoints through `h`.
pub fn dj_distance(a: (usize, usize), b: (usize, usize), h: &WeightedGraph) -> f64 {
    let mut ball = BallSearch::new(h.n());
    let mut from = |s: usize| {
        ball.run(s, f64::INFINITY, |u, out| out.extend_from_slice(h.neighbors(u)));
        [b.0, b.1].map(|v| ball.dist(v))
    };
    let [a0b0, a0b1] = from(a.0);
    let [a1b0, a1b1] = from(a.1);
    pairing_distance(
        |p, q| match (p == a.0, q == b.0) {
            (true, true) => a0b0,
            (true, false) => a0b1,
            (false, true) => a1b0,
            (false, false) => a1b1,
        },
        a,
        b,
    )
}
