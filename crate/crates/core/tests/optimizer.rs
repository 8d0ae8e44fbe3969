//! The optimizer against an exhaustive search written from the cost
//! formulas alone.

mod common;

use std::sync::Arc;

use proptest::prelude::*;

use rubicon_core::plan::{optimize, plan_with, CostModel, JoinStrategy, Step};

use common::planner::*;
use common::rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn optimizer_finds_exhaustive_minimum(seed in any::<u64>()) {
        prop_assert_eq!(optimizer_case(seed, 1..=5), Ok(()));
    }

    #[test]
    fn pushdown_never_raises_cost(seed in any::<u64>()) {
        prop_assert_eq!(monotone_case(seed), Ok(()));
    }
}

#[test]
fn large_graphs_fall_back_to_a_valid_plan() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let (graph, stats, pairs) = random_graph(&mut r, 9);
        let graph = Arc::new(graph);
        let plan = optimize(&graph, &CostModel::default(), true).unwrap();
        let mut leaves: Vec<usize> = plan.steps.iter().map(|s| s.leaf).collect();
        leaves.sort();
        assert_eq!(leaves, (0..9).collect::<Vec<_>>());
        let oracle = Oracle { stats, edges: pairs, pushdown: true };
        assert!(close(oracle.cost_of(&plan.steps), plan.estimate.cost));
    }
}

#[test]
fn first_step_cannot_probe() {
    let mut r = rng(1);
    let (graph, _, _) = random_graph(&mut r, 2);
    let graph = Arc::new(graph);
    let steps = vec![
        Step { leaf: 0, strategy: JoinStrategy::Probe(0) },
        Step { leaf: 1, strategy: JoinStrategy::Bulk },
    ];
    assert!(plan_with(&graph, &CostModel::default(), steps, true).is_err());
}
