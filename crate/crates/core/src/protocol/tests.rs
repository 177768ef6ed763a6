use super::*;
use crate::graph::Family;
use proptest::prelude::*;

fn k2() -> Graph {
    Graph::build(Family::Complete { n: 2 }).unwrap()
}

fn uniform_k2(alpha: f64) -> (Graph, SpeedProfile, ProtocolParams) {
    let sp = SpeedProfile::uniform(2);
    let params = ProtocolParams::standard(&sp, Variant::Algorithm1, 1).with_alpha(alpha);
    (k2(), sp, params)
}

/// C4 with speeds (2, 1, 1, 1): nodes 0 and 1 both have degree 2.
fn c4_fast_node() -> (Graph, SpeedProfile) {
    let g = Graph::build(Family::Cycle { n: 4 }).unwrap();
    let sp = SpeedProfile::from_integers(&[2, 1, 1, 1]).unwrap();
    (g, sp)
}

#[test]
fn migration_probability_k2() {
    let (g, sp, params) = uniform_k2(4.0);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_counts(vec![4, 0]);
    assert_eq!(p.migration_probability(&state, 0, 1).unwrap(), 1.0 / 8.0);
    assert_eq!(p.migration_probability(&state, 1, 0).unwrap(), 0.0);
}

#[test]
fn migration_probability_at_threshold_is_zero() {
    let (g, sp, params) = uniform_k2(4.0);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_counts(vec![3, 2]);
    assert_eq!(p.migration_probability(&state, 0, 1).unwrap(), 0.0);
    assert_eq!(p.expected_flow(&state, 0, 1).unwrap(), 0.0);
}

#[test]
fn migration_probability_with_speeds() {
    let (g, sp) = c4_fast_node();
    let params = ProtocolParams::standard(&sp, Variant::Algorithm1, 1);
    assert_eq!(params.alpha, 8.0);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_counts(vec![6, 1, 3, 3]);
    let prob = p.migration_probability(&state, 0, 1).unwrap();
    assert!((prob - 1.0 / 36.0).abs() < 1e-15);
    let flow = p.expected_flow(&state, 0, 1).unwrap();
    assert!((flow - 1.0 / 12.0).abs() < 1e-15);
    assert!((flow - 6.0 * prob / 2.0).abs() < 1e-15);
}

#[test]
fn expected_flow_k2() {
    let (g, sp, params) = uniform_k2(4.0);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_counts(vec![2, 0]);
    assert_eq!(p.expected_flow(&state, 0, 1).unwrap(), 0.25);
    assert_eq!(p.expected_flow(&LoadState::from_counts(vec![1, 1]), 0, 1).unwrap(), 0.0);
    assert!(p.expected_flow(&state, 0, 0).is_err());
}

#[test]
fn non_nash_edge_examples() {
    let g = k2();
    let sp = SpeedProfile::uniform(2);
    assert!(non_nash_edges(&g, &sp, &LoadState::from_counts(vec![5, 5])).is_empty());
    assert!(non_nash_edges(&g, &sp, &LoadState::from_counts(vec![3, 2])).is_empty());
    assert_eq!(non_nash_edges(&g, &sp, &LoadState::from_counts(vec![4, 1])), vec![(0, 1)]);
}

#[test]
fn nash_examples() {
    let g = k2();
    let uniform = SpeedProfile::uniform(2);
    assert!(is_nash(&g, &uniform, &LoadState::from_counts(vec![3, 3])));
    let fast_slow = SpeedProfile::from_integers(&[2, 1]).unwrap();
    assert!(is_nash(&g, &fast_slow, &LoadState::from_counts(vec![4, 1])));
    assert!(!is_nash(&g, &uniform, &LoadState::from_counts(vec![4, 0])));
}

#[test]
fn approx_nash_examples() {
    let g = k2();
    let sp = SpeedProfile::uniform(2);
    for eps in [0.01, 0.5, 0.99] {
        assert!(is_approx_nash(&g, &sp, &LoadState::from_counts(vec![3, 2]), eps));
    }
    assert!(is_approx_nash(&g, &sp, &LoadState::from_counts(vec![4, 2]), 0.5));
    assert!(!is_approx_nash(&g, &sp, &LoadState::from_counts(vec![8, 0]), 0.1));
}

#[test]
fn weighted_threshold_ties_do_not_move() {
    let g = k2();
    let sp = SpeedProfile::uniform(2);
    let state = LoadState::from_tasks(vec![vec![1.0, 0.5, 0.5], vec![1.0]]).unwrap();
    assert!(is_nash(&g, &sp, &state));
}

#[test]
fn round_at_equilibrium_is_identity() {
    let (g, sp) = c4_fast_node();
    let params = ProtocolParams::standard(&sp, Variant::Algorithm1, 9);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_counts(vec![4, 2, 2, 2]);
    assert!(is_nash(&g, &sp, &state));
    let out = p.step_round(&state, 0, 0).unwrap();
    assert_eq!(out.state, state);
    assert!(out.moves.is_empty());
}

#[test]
fn round_mean_matches_binomial() {
    let (g, sp, params) = uniform_k2(4.0);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_counts(vec![2, 0]);
    let trials = 100_000u64;
    let total: u64 = (0..trials)
        .map(|t| p.step_round(&state, t, 0).unwrap().tasks_moved())
        .sum();
    let mean = total as f64 / trials as f64;
    let se = (2.0 * (1.0 / 8.0) * (7.0 / 8.0) / trials as f64).sqrt();
    assert!((mean - 0.25).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn round_is_deterministic() {
    let g = Graph::build(Family::Hypercube { dim: 3 }).unwrap();
    let sp = SpeedProfile::from_integers(&[1, 2, 1, 3, 1, 2, 1, 1]).unwrap();
    let p = Protocol::new(&g, &sp, ProtocolParams::standard(&sp, Variant::Algorithm1, 77)).unwrap();
    let state = LoadState::all_on_one(8, 500, 3);
    let a = p.step_round(&state, 4, 11).unwrap();
    let b = p.step_round(&state, 4, 11).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.state, p.step_round(&state, 4, 12).unwrap().state);

    let weighted = LoadState::weighted_random(8, 300, 5, Some(0));
    let params2 = ProtocolParams::standard(&sp, Variant::Algorithm2, 77);
    let p2 = Protocol::new(&g, &sp, params2).unwrap();
    assert_eq!(p2.step_round(&weighted, 0, 0).unwrap(), p2.step_round(&weighted, 0, 0).unwrap());
}

#[test]
fn algorithm1_rejects_weighted_tasks() {
    let (g, sp, params) = uniform_k2(4.0);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_tasks(vec![vec![0.5], vec![]]).unwrap();
    assert!(p.step_round(&state, 0, 0).is_err());
}

#[test]
fn alpha_checks() {
    let sp = SpeedProfile::from_integers(&[1, 3]).unwrap();
    let params = ProtocolParams::standard(&sp, Variant::Algorithm1, 0);
    assert!(params.check_alpha(&sp).is_ok());
    assert!(params.with_alpha(1.0).check_alpha(&sp).is_err());
    let exact = ProtocolParams::for_exact_nash(&SpeedProfile::parse_list("1 3/2").unwrap(), 0);
    assert_eq!(exact.alpha, 12.0);
}

#[test]
fn small_alpha_clamps_instead_of_failing() {
    let (g, sp, params) = uniform_k2(0.01);
    let p = Protocol::new(&g, &sp, params).unwrap();
    let state = LoadState::from_counts(vec![4, 0]);
    assert_eq!(p.migration_probability(&state, 0, 1).unwrap(), 1.0);
}

#[test]
fn weight_difference_rule_differs_only_with_speeds() {
    let g = k2();
    let uniform = SpeedProfile::uniform(2);
    let state = LoadState::from_tasks(vec![vec![1.0, 1.0, 0.5, 0.5], vec![0.25]]).unwrap();
    let base = ProtocolParams::standard(&uniform, Variant::Algorithm2, 0);
    let printed = ProtocolParams {
        weighted_rule: WeightedRule::WeightDifference,
        ..base
    };
    let a = Protocol::new(&g, &uniform, base).unwrap().migration_probability(&state, 0, 1).unwrap();
    let b = Protocol::new(&g, &uniform, printed).unwrap().migration_probability(&state, 0, 1).unwrap();
    assert!((a - b).abs() < 1e-15);

    let speeds = SpeedProfile::from_integers(&[2, 1]).unwrap();
    let state = LoadState::from_tasks(vec![vec![1.0; 6], vec![]]).unwrap();
    let base = ProtocolParams::standard(&speeds, Variant::Algorithm2, 0);
    let printed = ProtocolParams {
        weighted_rule: WeightedRule::WeightDifference,
        ..base
    };
    let a = Protocol::new(&g, &speeds, base).unwrap().migration_probability(&state, 0, 1).unwrap();
    let b = Protocol::new(&g, &speeds, printed).unwrap().migration_probability(&state, 0, 1).unwrap();
    assert!((a - 1.0 / 24.0).abs() < 1e-15);
    assert!((b - 1.0 / 16.0).abs() < 1e-15);
}

#[test]
fn settle_reaches_nash() {
    let g = Graph::build(Family::Path { n: 5 }).unwrap();
    let sp = SpeedProfile::from_integers(&[1, 3, 1, 3, 1]).unwrap();
    let settled = settle_to_nash(&g, &sp, &LoadState::all_on_one(5, 40, 0)).unwrap();
    assert!(is_nash(&g, &sp, &settled));
    assert_eq!(settled.total_weight(), 40.0);
}

fn arb_instance() -> impl Strategy<Value = (usize, Vec<i64>, Vec<i64>, Vec<u64>, u64)> {
    (0usize..5, 2usize..7).prop_flat_map(|(family, n)| {
        (
            Just(family),
            proptest::collection::vec(1i64..5, n),
            proptest::collection::vec(1i64..4, n),
            proptest::collection::vec(0u64..40, n),
            any::<u64>(),
        )
    })
    .prop_map(|(family, nums, dens, counts, seed)| (family, nums, dens, counts, seed))
}

fn family_graph(family: usize, n: usize) -> Graph {
    let f = match family {
        0 => Family::Complete { n },
        1 => Family::Cycle { n: n.max(3) },
        2 => Family::Path { n },
        3 => Family::Hypercube { dim: 2 },
        _ => Family::Torus2d { rows: 2, cols: 3 },
    };
    Graph::build(f).unwrap()
}

fn rational_speeds(nums: &[i64], dens: &[i64], n: usize) -> SpeedProfile {
    let raw = (0..n)
        .map(|i| num_rational::Rational64::new(nums[i % nums.len()], dens[i % dens.len()]))
        .collect();
    SpeedProfile::from_rationals(raw).unwrap()
}

proptest! {
    #[test]
    fn round_invariants((family, nums, dens, counts, seed) in arb_instance()) {
        let g = family_graph(family, counts.len());
        let n = g.node_count();
        let sp = rational_speeds(&nums, &dens, n);
        let counts: Vec<u64> = (0..n).map(|i| counts[i % counts.len()]).collect();
        let state = LoadState::from_counts(counts);
        let params = ProtocolParams::standard(&sp, Variant::Algorithm1, seed);
        let p = Protocol::new(&g, &sp, params).unwrap();
        let non_nash = non_nash_edges(&g, &sp, &state);
        for (i, j) in g.directed_edges() {
            let prob = p.migration_probability(&state, i, j).unwrap();
            let flow = p.expected_flow(&state, i, j).unwrap();
            let triggered = non_nash.contains(&(i, j));
            // Monotone trigger.
            prop_assert_eq!(prob > 0.0, triggered);
            prop_assert_eq!(flow > 0.0, triggered);
            // f_ij = W_i p_ij / deg(i).
            let w_i = state.node_weight(i);
            prop_assert!((flow - w_i * prob / g.degree(i) as f64).abs() <= 1e-12 * flow.max(1.0));
            prop_assert!(prob <= 0.125 + 1e-15);
            if triggered {
                prop_assert_eq!(granularity_gap_holds(&sp, &state, i, j), Some(true));
            }
        }
        let out = p.step_round(&state, 3, 5).unwrap();
        prop_assert_eq!(out.state.total_weight(), state.total_weight());
        prop_assert_eq!(out.tasks_moved(), out.moves.iter().map(|m| m.weight as u64).sum::<u64>());
        let again = p.step_round(&state, 3, 5).unwrap();
        prop_assert_eq!(out, again);
    }

    #[test]
    fn weighted_round_conserves_weight(seed in any::<u64>(), count in 1usize..200, node in 0usize..6) {
        let g = Graph::build(Family::Cycle { n: 6 }).unwrap();
        let sp = SpeedProfile::from_integers(&[1, 2, 1, 3, 1, 2]).unwrap();
        let state = LoadState::weighted_random(6, count, seed, Some(node));
        let p = Protocol::new(&g, &sp, ProtocolParams::standard(&sp, Variant::Algorithm2, seed)).unwrap();
        let out = p.step_round(&state, 0, 0).unwrap();
        let before = state.total_weight();
        prop_assert!((out.state.total_weight() - before).abs() <= 1e-12 * before);
        let tasks_before: usize = (0..6).map(|i| state.task_count(i)).sum();
        let tasks_after: usize = (0..6).map(|i| out.state.task_count(i)).sum();
        prop_assert_eq!(tasks_before, tasks_after);
    }
}
