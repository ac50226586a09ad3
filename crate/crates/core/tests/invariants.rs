use proptest::prelude::*;
use ubg_spanner::distsim::{dj_distance, run_distributed, SimConfig};
use ubg_spanner::geometry::{generate_instance, validate_instance, EdgePolicy, UbgInstance, LENGTH_TOL};
use ubg_spanner::greedy::seq_greedy;
use ubg_spanner::relaxed::{derive_params, run_relaxed_greedy};
use ubg_spanner::verify::{check_spanner, weight_ratio};

fn policy() -> impl Strategy<Value = EdgePolicy> {
    prop_oneof![
        Just(EdgePolicy::All),
        Just(EdgePolicy::None),
        (0.05f64..0.95).prop_map(EdgePolicy::Bernoulli),
    ]
}

fn instance() -> impl Strategy<Value = UbgInstance> {
    (2usize..45, 2usize..4, 0.3f64..1.0, policy(), any::<u64>())
        .prop_map(|(n, d, alpha, p, seed)| generate_instance(n, d, alpha, p, seed).unwrap())
}

fn subset_of(inst: &UbgInstance, edges: &[(usize, usize)]) -> bool {
    edges.iter().all(|&(u, v)| u < v && inst.has_edge(u, v))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn generated_instances_obey_the_model(inst in instance()) {
        prop_assert!(validate_instance(&inst).is_valid());
        for u in 0..inst.n() {
            for v in u + 1..inst.n() {
                let d = inst.dist(u, v);
                if d <= inst.alpha - LENGTH_TOL {
                    prop_assert!(inst.has_edge(u, v));
                }
                if d > 1.0 + LENGTH_TOL {
                    prop_assert!(!inst.has_edge(u, v));
                }
            }
        }
    }

    #[test]
    fn greedy_is_a_spanner_subgraph(inst in instance(), t in 1.0f64..3.0) {
        let edges = seq_greedy(&inst.graph(), t);
        prop_assert!(subset_of(&inst, &edges));
        prop_assert!(check_spanner(&inst, &edges, t).unwrap().pass);
    }

    #[test]
    fn relaxed_is_a_spanner_subgraph(inst in instance(), t in 1.05f64..2.5) {
        let run = run_relaxed_greedy(&inst, t).unwrap();
        let edges = run.state.edges();
        prop_assert!(subset_of(&inst, &edges));
        prop_assert!(check_spanner(&inst, &edges, t).unwrap().pass);
        prop_assert!(weight_ratio(&inst, &edges).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn distributed_is_a_deterministic_spanner(inst in instance(), t in 1.05f64..2.5) {
        let cfg = SimConfig::new(&inst, t).unwrap();
        let a = run_distributed(&cfg).unwrap();
        prop_assert!(subset_of(&inst, &a.edges));
        prop_assert!(check_spanner(&inst, &a.edges, t).unwrap().pass);
        prop_assert_eq!(a.rounds_by_step.values().sum::<u64>(), a.rounds_total);
        prop_assert!(a.locality_violations().is_empty());
        let b = run_distributed(&cfg).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn derived_params_are_ordered(t in 1.001f64..4.0, alpha in 0.05f64..1.0, n in 1usize..5000) {
        let p = derive_params(t, alpha, n).unwrap();
        prop_assert!(1.0 < p.t1 && p.t1 < t);
        prop_assert!(p.delta > 0.0);
        prop_assert!(p.r > 1.0);
        prop_assert!(p.theta > 0.0);
    }

    #[test]
    fn dj_is_symmetric(inst in instance(), picks in prop::collection::vec(any::<prop::sample::Index>(), 4)) {
        let edges: Vec<(usize, usize, f64)> = inst.graph().edges();
        prop_assume!(!edges.is_empty());
        let h = inst.graph();
        let a = edges[picks[0].index(edges.len())];
        let b = edges[picks[1].index(edges.len())];
        let ab = dj_distance((a.0, a.1), (b.0, b.1), &h);
        let ba = dj_distance((b.0, b.1), (a.0, a.1), &h);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert_eq!(dj_distance((a.0, a.1), (a.0, a.1), &h), 0.0);
    }
}
