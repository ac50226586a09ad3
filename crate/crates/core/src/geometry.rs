//! Points in `R^d`, distance-only geometry, and α-quasi unit ball graph instances.
//!
//! An α-UBG joins every pair at distance at most `alpha`, never joins a pair
//! farther apart than 1, and leaves the band `(alpha, 1]` to an explicit
//! [`EdgePolicy`]. Algorithms downstream only ever consult pairwise
//! distances, never coordinates; angles are recovered with the law of cosines
//! in [`angle_from_distances`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::graph::{connected_components, WeightedGraph};

/// Absolute slack for every length comparison in the crate.
pub const LENGTH_TOL: f64 = 1e-9;

/// Shrink factor applied to the sampling cube on each connectivity retry.
const SHRINK_PER_RETRY: f64 = 0.9;
const MAX_RETRIES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn euclid(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return usage(format!(
            "dimension mismatch: {} vs {}",
            p.dim(),
            q.dim()
        ));
    }
    Ok(dist_unchecked(p, q))
}

fn dist_unchecked(p: &Point, q: &Point) -> f64 {
    p.0.iter()
        .zip(&q.0)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// The angle at `u` between rays `u→v` and `u→z`, given only the three
/// pairwise distances of the triangle `u, v, z`.
pub fn angle_from_distances(d_uv: f64, d_uz: f64, d_vz: f64) -> Result<f64> {
    if !(d_uv.is_finite() && d_uz.is_finite() && d_vz.is_finite()) {
        return usage("non-finite side length");
    }
    if d_uv <= 0.0 || d_uz <= 0.0 {
        return usage(format!(
            "degenerate triangle: sides at the apex must be positive (d_uv={d_uv}, d_uz={d_uz})"
        ));
    }
    if d_vz < -LENGTH_TOL
        || d_vz > d_uv + d_uz + LENGTH_TOL
        || d_uv > d_uz + d_vz + LENGTH_TOL
        || d_uz > d_uv + d_vz + LENGTH_TOL
    {
        return usage(format!(
            "triangle inequality violated: ({d_uv}, {d_uz}, {d_vz})"
        ));
    }
    let cos = (d_uv * d_uv + d_uz * d_uz - d_vz * d_vz) / (2.0 * d_uv * d_uz);
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Rule for pairs whose distance falls in the unconstrained band `(alpha, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgePolicy {
    All,
    None,
    Bernoulli(f64),
}

impl fmt::Display for EdgePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgePolicy::All => f.write_str("all"),
            EdgePolicy::None => f.write_str("none"),
            EdgePolicy::Bernoulli(p) => write!(f, "bernoulli:{p}"),
        }
    }
}

impl FromStr for EdgePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(EdgePolicy::All),
            "none" => Ok(EdgePolicy::None),
            _ => {
                let Some(p) = s.strip_prefix("bernoulli:") else {
                    return usage(format!(
                        "unknown policy `{s}` (expected all, none or bernoulli:p)"
                    ));
                };
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad probability in `{s}`")))?;
                if !(0.0..=1.0).contains(&p) {
                    return usage(format!("probability {p} outside [0, 1]"));
                }
                Ok(EdgePolicy::Bernoulli(p))
            }
        }
    }
}

impl Serialize for EdgePolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EdgePolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A point set together with an α-UBG edge set over it.
///
/// Node ids are positions in `points`. Edges are stored once, as `(u, v)`
/// with `u < v`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UbgInstance {
    pub d: usize,
    pub alpha: f64,
    pub seed: u64,
    pub policy: EdgePolicy,
    pub points: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
}

impl UbgInstance {
    /// Builds an instance from explicit parts, normalising edge orientation
    /// and order. No UBG validation is done here; see [`validate_instance`].
    pub fn from_parts(
        d: usize,
        alpha: f64,
        policy: EdgePolicy,
        seed: u64,
        points: Vec<Point>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut edges: Vec<_> = edges
            .into_iter()
            .map(|(u, v)| if u <= v { (u, v) } else { (v, u) })
            .collect();
        edges.sort_unstable();
        UbgInstance {
            d,
            alpha,
            seed,
            policy,
            points,
            edges,
        }
    }

    /// Builds the instance with every mandatory edge and the band edges the
    /// policy selects, drawing Bernoulli choices from `rng` in pair order.
    pub fn from_points<R: Rng>(
        d: usize,
        alpha: f64,
        policy: EdgePolicy,
        seed: u64,
        points: Vec<Point>,
        rng: &mut R,
    ) -> Self {
        let n = points.len();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let len = dist_unchecked(&points[u], &points[v]);
                let keep = if len <= alpha {
                    true
                } else if len > 1.0 {
                    false
                } else {
                    match policy {
                        EdgePolicy::All => true,
                        EdgePolicy::None => false,
                        EdgePolicy::Bernoulli(p) => rng.gen_bool(p),
                    }
                };
                if keep {
                    edges.push((u, v));
                }
            }
        }
        UbgInstance {
            d,
            alpha,
            seed,
            policy,
            points,
            edges,
        }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Euclidean length `|uv|`.
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        dist_unchecked(&self.points[u], &self.points[v])
    }

    /// The instance as a weighted graph with Euclidean weights.
    pub fn graph(&self) -> WeightedGraph {
        let mut g = WeightedGraph::new(self.n());
        for &(u, v) in &self.edges {
            g.add_edge(u, v, self.dist(u, v));
        }
        g
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let key = if u <= v { (u, v) } else { (v, u) };
        self.edges.binary_search(&key).is_ok()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: UbgInstance = serde_json::from_str(s)?;
        Ok(UbgInstance::from_parts(
            inst.d,
            inst.alpha,
            inst.policy,
            inst.seed,
            inst.points,
            inst.edges,
        ))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Volume of the `d`-ball of radius `radius`.
fn ball_volume(d: usize, radius: f64) -> f64 {
    let mut unit = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        unit *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    unit * radius.powi(d as i32)
}

/// Side of the sampling cube: chosen so a node expects about `ln n + 3`
/// neighbours at distance at most `alpha`.
fn initial_side(n: usize, d: usize, alpha: f64) -> f64 {
    let target_degree = (n as f64).ln() + 3.0;
    (n as f64 * ball_volume(d, alpha) / target_degree).powf(1.0 / d as f64)
}

/// Samples `n` points uniformly in a cube and builds the α-UBG over them.
///
/// When the graph comes out disconnected the cube is shrunk by 10% and the
/// points are redrawn, up to 20 times. Everything is driven by one ChaCha8
/// stream seeded with `seed`, so equal arguments give bit-identical output.
pub fn generate_instance(
    n: usize,
    d: usize,
    alpha: f64,
    policy: EdgePolicy,
    seed: u64,
) -> Result<UbgInstance> {
    if n == 0 {
        return usage("n must be at least 1");
    }
    if d < 2 {
        return usage(format!("dimension must be at least 2, got {d}"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return usage(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut side = initial_side(n, d, alpha);
    for _ in 0..=MAX_RETRIES {
        let points: Vec<Point> = (0..n)
            .map(|_| Point((0..d).map(|_| rng.gen::<f64>() * side).collect()))
            .collect();
        let inst = UbgInstance::from_points(d, alpha, policy, seed, points, &mut rng);
        if connected_components(&inst.graph()).len() == 1 {
            return Ok(inst);
        }
        side *= SHRINK_PER_RETRY;
    }
    Err(Error::Generation {
        n,
        d,
        alpha,
        policy: policy.to_string(),
        seed,
        retries: MAX_RETRIES,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    BadParameters(String),
    BadPoint { node: usize, reason: String },
    EdgeOutOfRange { u: usize, v: usize },
    SelfLoop { node: usize },
    DuplicateEdge { u: usize, v: usize },
    LongEdge { u: usize, v: usize, len: f64 },
    MissingMandatoryEdge { u: usize, v: usize, len: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every way `inst` fails to be an α-UBG.
pub fn validate_instance(inst: &UbgInstance) -> ValidationReport {
    let mut violations = Vec::new();
    if inst.d < 2 {
        violations.push(Violation::BadParameters(format!("d = {} < 2", inst.d)));
    }
    if !(inst.alpha > 0.0 && inst.alpha <= 1.0) {
        violations.push(Violation::BadParameters(format!(
            "alpha = {} outside (0, 1]",
            inst.alpha
        )));
    }
    let mut points_ok = true;
    for (node, p) in inst.points.iter().enumerate() {
        if p.dim() != inst.d {
            points_ok = false;
            violations.push(Violation::BadPoint {
                node,
                reason: format!("dimension {} != {}", p.dim(), inst.d),
            });
        } else if p.0.iter().any(|c| !c.is_finite()) {
            points_ok = false;
            violations.push(Violation::BadPoint {
                node,
                reason: "non-finite coordinate".into(),
            });
        }
    }
    let n = inst.n();
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in &inst.edges {
        if a >= n || b >= n {
            violations.push(Violation::EdgeOutOfRange { u: a, v: b });
            continue;
        }
        if a == b {
            violations.push(Violation::SelfLoop { node: a });
            continue;
        }
        let (u, v) = (a.min(b), a.max(b));
        if !seen.insert((u, v)) {
            violations.push(Violation::DuplicateEdge { u, v });
            continue;
        }
        if points_ok {
            let len = inst.dist(u, v);
            if len > 1.0 + LENGTH_TOL {
                violations.push(Violation::LongEdge { u, v, len });
            }
        }
    }
    if points_ok {
        for u in 0..n {
            for v in (u + 1)..n {
                let len = inst.dist(u, v);
                if len <= inst.alpha - LENGTH_TOL && !seen.contains(&(u, v)) {
                    violations.push(Violation::MissingMandatoryEdge { u, v, len });
                }
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    #[test]
    fn euclid_examples() {
        assert_eq!(euclid(&p(&[0.0, 0.0]), &p(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(euclid(&p(&[0.0, 0.0]), &p(&[3.0, 4.0])).unwrap(), 5.0);
        let d = euclid(&p(&[1.0, 1.0, 1.0]), &p(&[2.0, 2.0, 2.0])).unwrap();
        assert!((d - 1.732_050_807_568_877_2).abs() < 1e-12);
        assert!(matches!(
            euclid(&p(&[0.0, 0.0]), &p(&[0.0, 0.0, 0.0])),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn angle_examples() {
        use std::f64::consts::PI;
        assert!(angle_from_distances(1.0, 1.0, 0.0).unwrap().abs() < 1e-12);
        let right = angle_from_distances(1.0, 1.0, 2f64.sqrt()).unwrap();
        assert!((right - PI / 2.0).abs() < 1e-12);
        let sixty = angle_from_distances(2.0, 1.0, 3f64.sqrt()).unwrap();
        assert!((sixty - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn angle_rejects_degenerate_and_impossible_triangles() {
        assert!(angle_from_distances(0.0, 1.0, 1.0).is_err());
        assert!(angle_from_distances(1.0, 0.0, 1.0).is_err());
        assert!(angle_from_distances(1.0, 1.0, 3.0).is_err());
        assert!(angle_from_distances(5.0, 1.0, 1.0).is_err());
        // within tolerance of a straight line is fine
        let flat = angle_from_distances(1.0, 1.0, 2.0 + 1e-12).unwrap();
        assert!((flat - std::f64::consts::PI).abs() < 1e-5);
    }

    #[test]
    fn policy_round_trips_through_strings() {
        for s in ["all", "none", "bernoulli:0.5", "bernoulli:0.25"] {
            let policy: EdgePolicy = s.parse().unwrap();
            assert_eq!(policy.to_string(), s);
        }
        assert!("bernoulli:1.5".parse::<EdgePolicy>().is_err());
        assert!("sometimes".parse::<EdgePolicy>().is_err());
    }

    #[test]
    fn single_node_has_no_edges() {
        let inst = generate_instance(1, 2, 0.5, EdgePolicy::All, 3).unwrap();
        assert_eq!(inst.n(), 1);
        assert!(inst.edges.is_empty());
    }

    #[test]
    fn two_close_points_get_the_mandatory_edge() {
        let alpha = 0.6;
        let points = vec![p(&[0.0, 0.0]), p(&[0.5 * alpha, 0.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inst = UbgInstance::from_points(2, alpha, EdgePolicy::None, 0, points, &mut rng);
        assert_eq!(inst.edges, vec![(0, 1)]);
    }

    #[test]
    fn generated_instance_respects_the_ubg_rules_pairwise() {
        let inst = generate_instance(50, 2, 0.7, EdgePolicy::Bernoulli(0.5), 42).unwrap();
        for u in 0..inst.n() {
            for v in (u + 1)..inst.n() {
                let (pu, pv) = (&inst.points[u].0, &inst.points[v].0);
                let len = ((pu[0] - pv[0]).powi(2) + (pu[1] - pv[1]).powi(2)).sqrt();
                if len <= 0.7 {
                    assert!(inst.has_edge(u, v), "missing ({u},{v}) at {len}");
                }
                if len > 1.0 {
                    assert!(!inst.has_edge(u, v), "long ({u},{v}) at {len}");
                }
            }
        }
        assert!(validate_instance(&inst).is_valid());
        assert_eq!(connected_components(&inst.graph()).len(), 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(40, 3, 0.8, EdgePolicy::Bernoulli(0.3), 9).unwrap();
        let b = generate_instance(40, 3, 0.8, EdgePolicy::Bernoulli(0.3), 9).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn generation_rejects_bad_arguments() {
        assert!(generate_instance(0, 2, 0.5, EdgePolicy::All, 1).is_err());
        assert!(generate_instance(5, 1, 0.5, EdgePolicy::All, 1).is_err());
        assert!(generate_instance(5, 2, 0.0, EdgePolicy::All, 1).is_err());
        assert!(generate_instance(5, 2, 1.5, EdgePolicy::All, 1).is_err());
    }

    #[test]
    fn validator_flags_long_and_missing_edges() {
        let points = vec![p(&[0.0, 0.0]), p(&[1.2, 0.0]), p(&[0.0, 0.3])];
        let inst = UbgInstance::from_parts(2, 0.5, EdgePolicy::None, 0, points.clone(), [(0, 1), (0, 2)]);
        assert_eq!(
            validate_instance(&inst).violations,
            vec![Violation::LongEdge { u: 0, v: 1, len: 1.2 }]
        );
        let inst = UbgInstance::from_parts(2, 0.5, EdgePolicy::None, 0, points, []);
        assert_eq!(
            validate_instance(&inst).violations,
            vec![Violation::MissingMandatoryEdge { u: 0, v: 2, len: 0.3 }]
        );
    }

    #[test]
    fn validator_flags_structural_problems() {
        let points = vec![p(&[0.0, 0.0]), p(&[0.9, 0.0])];
        let inst = UbgInstance {
            d: 2,
            alpha: 0.5,
            seed: 0,
            policy: EdgePolicy::All,
            points,
            edges: vec![(0, 1), (1, 0), (1, 1), (0, 7)],
        };
        let v = validate_instance(&inst).violations;
        assert!(v.contains(&Violation::DuplicateEdge { u: 0, v: 1 }));
        assert!(v.contains(&Violation::SelfLoop { node: 1 }));
        assert!(v.contains(&Violation::EdgeOutOfRange { u: 0, v: 7 }));
    }

    #[test]
    fn json_round_trip_preserves_the_instance() {
        let inst = generate_instance(20, 2, 0.6, EdgePolicy::Bernoulli(0.5), 5).unwrap();
        let back = UbgInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
        let v: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        assert_eq!(v["policy"], "bernoulli:0.5");
        assert!(v["edges"][0].is_array());
    }

    #[test]
    fn ball_volume_matches_closed_forms() {
        use std::f64::consts::PI;
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 / 3.0 * PI).abs() < 1e-12);
        assert!((ball_volume(4, 2.0) - PI * PI / 2.0 * 16.0).abs() < 1e-9);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn coord_angle(u: &[f64], v: &[f64], z: &[f64]) -> f64 {
        let a: Vec<f64> = v.iter().zip(u).map(|(x, y)| x - y).collect();
        let b: Vec<f64> = z.iter().zip(u).map(|(x, y)| x - y).collect();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        // atan2 form is well conditioned near 0 and pi
        let cross = (na * na * nb * nb - dot * dot).max(0.0).sqrt();
        cross.atan2(dot)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn angle_agrees_with_coordinates(
            u in prop::collection::vec(-1.0f64..1.0, 3),
            v in prop::collection::vec(-1.0f64..1.0, 3),
            z in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let (pu, pv, pz) = (Point(u.clone()), Point(v.clone()), Point(z.clone()));
            let d_uv = euclid(&pu, &pv).unwrap();
            let d_uz = euclid(&pu, &pz).unwrap();
            prop_assume!(d_uv > 1e-3 && d_uz > 1e-3);
            let d_vz = euclid(&pv, &pz).unwrap();
            let from_dist = angle_from_distances(d_uv, d_uz, d_vz).unwrap();
            let from_coords = coord_angle(&u, &v, &z);
            prop_assert!((from_dist - from_coords).abs() < 1e-9,
                "{} vs {}", from_dist, from_coords);
        }

        #[test]
        fn euclid_is_symmetric(
            u in prop::collection::vec(-5.0f64..5.0, 4),
            v in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let (pu, pv) = (Point(u), Point(v));
            prop_assert_eq!(euclid(&pu, &pv).unwrap(), euclid(&pv, &pu).unwrap());
        }
    }
}
