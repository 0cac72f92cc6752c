use super::*;
use crate::fixtures;
use crate::oracle::{exact_welfare, OracleLimits, SpreadOracle};
use crate::utility::{Completion, Item};
use proptest::prelude::*;

fn cfg() -> AllocatorConfig {
    AllocatorConfig { mc_samples: 200, seed: 11, ..AllocatorConfig::default() }
}

fn exact(graph: &Graph, catalog: &ItemCatalog, a: &Allocation) -> f64 {
    exact_welfare(graph, catalog, a, &OracleLimits::default()).unwrap()
}

fn single_item(utility: f64) -> ItemCatalog {
    ItemCatalog::new(vec![Item::new("a", 1.0)], vec![(1, 1.0 + utility)], Completion::Strict).unwrap()
}

#[test]
fn worked_example_seq_max() {
    let g = fixtures::path_with_spur();
    let c = fixtures::two_item_competition();
    let budgets = [(0, 1), (1, 1)];
    let seq = seqgrd(&g, &c, &Allocation::new(), &budgets, &cfg()).unwrap();
    assert_eq!(seq.allocation, Allocation::from_pairs([(0, 0), (3, 1)]));
    assert_eq!(exact(&g, &c, &seq.allocation), 22.0);
    let max = maxgrd(&g, &c, &Allocation::new(), &budgets, &cfg()).unwrap();
    assert_eq!(max.allocation, Allocation::from_pairs([(0, 0)]));
    assert_eq!(exact(&g, &c, &max.allocation), 30.0);
    let best = max_seq(&g, &c, &budgets, &cfg()).unwrap();
    assert_eq!(best.allocation, max.allocation);
}

#[test]
fn one_item_is_influence_maximization() {
    let g = fixtures::certain_graph(7, &[(0, 1), (0, 2), (0, 3), (4, 5), (4, 6)]);
    let c = single_item(2.0);
    let out = seqgrd(&g, &c, &Allocation::new(), &[(0, 2)], &cfg()).unwrap();
    assert_eq!(out.allocation, Allocation::block(&[0, 4], 0));
    assert_eq!(exact(&g, &c, &out.allocation), 2.0 * 7.0);
    let nm = seqgrd_nm(&g, &c, &Allocation::new(), &[(0, 2)], &cfg()).unwrap();
    let mx = maxgrd(&g, &c, &Allocation::new(), &[(0, 2)], &cfg()).unwrap();
    assert_eq!(nm.allocation, out.allocation);
    assert_eq!(mx.allocation, out.allocation);
}

#[test]
fn blocking_item_is_deferred() {
    let g = fixtures::blocking_graph();
    let c = fixtures::table4();
    let budgets = [(0, 1), (1, 1), (2, 1)];
    let seq = seqgrd(&g, &c, &Allocation::new(), &budgets, &cfg()).unwrap();
    let nm = seqgrd_nm(&g, &c, &Allocation::new(), &budgets, &cfg()).unwrap();
    let lines = seq.trace_lines();
    assert!(lines.iter().any(|l| l.starts_with("phase=tentative item=1 seeds=10 ") && l.ends_with("decision=defer")));
    assert!(lines.iter().any(|l| l.starts_with("phase=append item=1 seeds=12 ")));
    assert_eq!(seq.allocation, Allocation::from_pairs([(0, 0), (10, 2), (12, 1)]));
    assert_eq!(nm.allocation, Allocation::from_pairs([(0, 0), (10, 1), (12, 2)]));
    // i on x1..x4, k then {i,k} on x5..x10, k on y and y2, j on z
    assert!((exact(&g, &c, &seq.allocation) - (8.0 + 12.6 + 0.2 + 0.11)).abs() < 1e-9);
    // j reaches x5 first and holds x5..x10, y, y2; k on z
    assert!((exact(&g, &c, &nm.allocation) - (8.0 + 0.88 + 0.1)).abs() < 1e-9);
}

#[test]
fn no_blocking_means_same_as_nm() {
    let mut edges = Vec::new();
    for hub in [0u32, 5, 10, 15] {
        for leaf in 1..5 {
            edges.push((hub, hub + leaf));
        }
    }
    let g = fixtures::certain_graph(20, &edges);
    let (c, _) = fixtures::table2(1);
    let config = AllocatorConfig { mc_samples: 2000, ..cfg() };
    let seq = seqgrd(&g, &c, &Allocation::new(), &[(0, 2), (1, 2)], &config).unwrap();
    let nm = seqgrd_nm(&g, &c, &Allocation::new(), &[(0, 2), (1, 2)], &config).unwrap();
    assert_eq!(seq.allocation, nm.allocation);
    assert!(seq.trace.iter().all(|e| e.decision == "keep"));
}

#[test]
fn trace_orders_items_by_truncated_utility() {
    let g = fixtures::blocking_graph();
    let c = fixtures::table4();
    let seq = seqgrd(&g, &c, &Allocation::new(), &[(2, 1), (1, 1), (0, 1)], &cfg()).unwrap();
    let eu = c.item_truncated_utilities(McSettings::default()).unwrap();
    let order: Vec<f64> = seq
        .trace
        .iter()
        .filter(|e| e.phase == "tentative")
        .map(|e| eu[e.item.unwrap()].mean)
        .collect();
    assert_eq!(order.len(), 3);
    assert!(order.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn rejects_budget_on_base_item() {
    let g = fixtures::path_with_spur();
    let c = fixtures::two_item_competition();
    let base = Allocation::from_pairs([(1, 1)]);
    assert!(seqgrd(&g, &c, &base, &[(1, 1)], &cfg()).is_err());
    assert!(seqgrd(&g, &c, &Allocation::new(), &[(0, 3), (1, 2)], &cfg()).is_err());
    assert!(max_seq(&g, &c, &[(0, 9)], &cfg()).is_err());
}

#[test]
fn round_robin_and_snake_examples() {
    let seeds = [1, 2, 3, 4];
    let budgets = [(0, 2), (1, 2)];
    assert_eq!(
        round_robin(&seeds, &budgets).unwrap(),
        Allocation::from_pairs([(1, 0), (2, 1), (3, 0), (4, 1)])
    );
    assert_eq!(snake(&seeds, &budgets).unwrap(), Allocation::from_pairs([(1, 0), (2, 1), (3, 1), (4, 0)]));
    assert_eq!(round_robin(&seeds, &[(0, 4)]).unwrap(), Allocation::block(&seeds, 0));
    assert_eq!(snake(&seeds, &[(0, 4)]).unwrap(), Allocation::block(&seeds, 0));
    assert!(round_robin(&seeds[..3], &budgets).is_err());
}

#[test]
fn snake_skips_exhausted_items() {
    let seeds = [0, 1, 2, 3, 4, 5];
    let got = snake(&seeds, &[(0, 1), (1, 3), (2, 2)]).unwrap();
    // pass 1: a b c, pass 2: c b, pass 3: b
    assert_eq!(got, Allocation::from_pairs([(0, 0), (1, 1), (2, 2), (3, 2), (4, 1), (5, 1)]));
}

#[test]
fn gm_matches_exact_greedy_im() {
    let g = fixtures::certain_graph(8, &[(0, 1), (1, 2), (2, 3), (4, 5), (4, 6), (7, 3)]);
    let c = single_item(1.0);
    let out = greedy_marginal(&g, &c, &[(0, 3)], &cfg()).unwrap();
    let table = SpreadOracle::new(&g, &OracleLimits::default()).unwrap();
    let mut picks: Vec<NodeId> = Vec::new();
    for _ in 0..3 {
        let mut best = (0, f64::NEG_INFINITY);
        for v in (0..8).filter(|v| !picks.contains(v)) {
            let m = table.marginal_spread(&[v], &picks);
            if m > best.1 {
                best = (v, m);
            }
        }
        picks.push(best.0);
    }
    let got: Vec<NodeId> = out.trace.iter().map(|e| e.seeds[0]).collect();
    assert_eq!(got, picks);
}

#[test]
fn gm_trace_sums_to_welfare() {
    let g = fixtures::two_node_graph();
    let c = fixtures::fig3a();
    let out = greedy_marginal(&g, &c, &[(0, 1), (1, 1), (2, 1)], &cfg()).unwrap();
    assert_eq!(out.allocation.len(), 3);
    let total: f64 = out.trace.iter().map(|e| e.marginal.unwrap().mean).sum();
    assert!((total - exact(&g, &c, &out.allocation)).abs() < 1e-9);
    assert!(greedy_marginal(&g, &c, &[(0, 0)], &cfg()).unwrap().allocation.is_empty());
    let capped = AllocatorConfig { gm_cap: 1, ..cfg() };
    assert!(matches!(greedy_marginal(&g, &c, &[(0, 1)], &capped), Err(Error::Limit(_))));
}

fn superior_catalog() -> ItemCatalog {
    // U(s) = 1, U(t) = 0.1, U({s,t}) = 0
    ItemCatalog::new(
        vec![Item::new("s", 2.0), Item::new("t", 1.0)],
        vec![(0b01, 3.0), (0b10, 1.1), (0b11, 3.0)],
        Completion::Strict,
    )
    .unwrap()
}

#[test]
fn supgrd_without_base_is_im() {
    let g = fixtures::certain_graph(7, &[(0, 1), (0, 2), (0, 3), (4, 5), (4, 6)]);
    let out = supgrd(&g, &superior_catalog(), &Allocation::new(), 0, 2, &cfg()).unwrap();
    assert_eq!(out.allocation, Allocation::block(&[0, 4], 0));
}

#[test]
fn supgrd_overrides_inferior_hub() {
    let g = fixtures::certain_graph(9, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (6, 7), (6, 8)]);
    let c = superior_catalog();
    let base = Allocation::from_pairs([(0, 1)]);
    let sup = supgrd(&g, &c, &base, 0, 1, &cfg()).unwrap();
    assert_eq!(sup.allocation, Allocation::from_pairs([(0, 0)]));
    let nm = seqgrd_nm(&g, &c, &base, &[(0, 1)], &cfg()).unwrap();
    let ws = exact(&g, &c, &sup.allocation.union(&base));
    let wn = exact(&g, &c, &nm.allocation.union(&base));
    assert_eq!(ws, 6.0);
    assert!(ws >= wn);
}

#[test]
fn supgrd_preconditions() {
    let g = fixtures::two_node_graph();
    let c = superior_catalog();
    let holds = Allocation::from_pairs([(0, 0)]);
    assert!(matches!(supgrd(&g, &c, &holds, 0, 1, &cfg()), Err(Error::Precondition(_))));
    assert!(matches!(supgrd(&g, &c, &Allocation::new(), 1, 1, &cfg()), Err(Error::Precondition(_))));
    assert!(matches!(
        supgrd(&g, &fixtures::fig3a(), &Allocation::new(), 1, 1, &cfg()),
        Err(Error::Precondition(_))
    ));
    let soft = ItemCatalog::new(
        vec![Item::new("s", 1.0), Item::new("t", 1.0)],
        vec![(0b01, 2.0), (0b10, 1.1), (0b11, 3.5)],
        Completion::Strict,
    )
    .unwrap();
    let err = supgrd(&g, &soft, &Allocation::new(), 0, 1, &cfg()).unwrap_err();
    assert!(err.to_string().contains("pure competition"), "{err}");
}

fn scaled(values: [f64; 3], prices: [f64; 2], c: f64) -> ItemCatalog {
    ItemCatalog::new(
        vec![Item::new("a", prices[0] * c), Item::new("b", prices[1] * c)],
        vec![(0b01, values[0] * c), (0b10, values[1] * c), (0b11, values[2] * c)],
        Completion::Strict,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn maxgrd_choice_is_scale_invariant(va in 1.0f64..5.0, vb in 1.0f64..5.0, extra in 0.0f64..3.0, c in 0.1f64..10.0) {
        let g = fixtures::path_with_spur();
        let prices = [0.5, 0.5];
        let values = [va, vb, va.max(vb) + extra];
        let config = AllocatorConfig { mc_samples: 20, ..cfg() };
        let a = maxgrd(&g, &scaled(values, prices, 1.0), &Allocation::new(), &[(0, 1), (1, 2)], &config).unwrap();
        let b = maxgrd(&g, &scaled(values, prices, c), &Allocation::new(), &[(0, 1), (1, 2)], &config).unwrap();
        prop_assert_eq!(a.allocation.items(), b.allocation.items());
    }

    #[test]
    fn sequential_outputs_respect_budgets(
        edges in proptest::collection::vec((0u32..8, 0u32..8), 0..14),
        ba in 0usize..3,
        bb in 0usize..3,
        seed in 0u64..1000,
    ) {
        let edges: Vec<(u32, u32)> = edges.into_iter().filter(|(a, b)| a != b).collect();
        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();
        let g = fixtures::certain_graph(8, &edges);
        let c = fixtures::two_item_competition();
        let budgets = [(0, ba), (1, bb)];
        let config = AllocatorConfig { mc_samples: 20, seed, ..cfg() };
        for out in [
            seqgrd(&g, &c, &Allocation::new(), &budgets, &config).unwrap(),
            seqgrd_nm(&g, &c, &Allocation::new(), &budgets, &config).unwrap(),
        ] {
            prop_assert!(out.allocation.check_budgets(&budgets).is_ok());
            prop_assert_eq!(out.allocation.len(), ba + bb);
            prop_assert_eq!(out.allocation.nodes().len(), ba + bb);
        }
        let mx = maxgrd(&g, &c, &Allocation::new(), &budgets, &config).unwrap();
        prop_assert!(mx.allocation.check_budgets(&budgets).is_ok());
    }
}
