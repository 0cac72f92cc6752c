use super::*;
use crate::fixtures;
use proptest::prelude::*;

fn zero(m: usize) -> NoiseWorld {
    NoiseWorld::zero(m)
}

#[test]
fn fig3a_utilities() {
    let c = fixtures::fig3a();
    let u = |s| c.utility(s, &zero(3)).unwrap();
    assert_eq!(u(0b001), 4.0);
    assert_eq!(u(0b010), 3.0);
    assert_eq!(u(0b101), 5.0);
    assert_eq!(u(0), 0.0);
}

#[test]
fn table1_utilities() {
    let c = fixtures::table1();
    let u = c.utility(0b1001, &zero(4)).unwrap();
    assert!((u - 105.1).abs() < 1e-12);
    let e = c.expected_truncated_utility(0b1000, McSettings::default()).unwrap();
    assert_eq!(e.mean, 100.0);
    assert_eq!(e.stderr, 0.0);
}

#[test]
fn unknown_item_rejected() {
    let c = fixtures::fig3a();
    assert!(matches!(c.utility(0b1000, &zero(3)), Err(Error::UnknownItem(_))));
    assert!(matches!(c.index_of("nope"), Err(Error::UnknownItem(_))));
}

#[test]
fn truncated_utility_examples() {
    let neg = ItemCatalog::new(vec![Item::new("a", 3.0)], vec![(1, 1.0)], Completion::Max).unwrap();
    assert_eq!(neg.expected_truncated_utility(1, McSettings::default()).unwrap().mean, 0.0);

    let two = ItemCatalog::new(
        vec![Item::new("a", 1.0).with_noise(NoiseSpec::TwoPoint { a: 3.0 })],
        vec![(1, 2.0)],
        Completion::Max,
    )
    .unwrap();
    // outcomes +3 and -3 around V - P = 1: (4 + 0) / 2
    assert_eq!(two.expected_truncated_utility(1, McSettings::default()).unwrap().mean, 2.0);
}

#[test]
fn gaussian_truncated_utility_monte_carlo() {
    // E[max(0, Z)] for standard normal Z is 1/sqrt(2 pi)
    let c = ItemCatalog::new(
        vec![Item::new("a", 1.0).with_noise(NoiseSpec::Gaussian { sigma: 1.0 })],
        vec![(1, 1.0)],
        Completion::Max,
    )
    .unwrap();
    let e = c
        .expected_truncated_utility(1, McSettings { samples: 200_000, seed: 3 })
        .unwrap();
    let want = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((e.mean - want).abs() < 4.0 * e.stderr, "{e:?}");
    assert!(e.stderr > 0.0);
}

#[test]
fn u_min_u_max_fig3a() {
    let c = fixtures::fig3a();
    assert_eq!(c.u_min(McSettings::default()).unwrap().mean, 3.0);
    assert_eq!(c.u_max(McSettings::default()).unwrap().mean, 5.0);
}

#[test]
fn u_min_u_max_single_item() {
    let c = ItemCatalog::new(vec![Item::new("a", 1.0)], vec![(1, 8.0)], Completion::Max).unwrap();
    assert_eq!(c.u_min(McSettings::default()).unwrap().mean, 7.0);
    assert_eq!(c.u_max(McSettings::default()).unwrap().mean, 7.0);
}

#[test]
fn u_max_two_point_matches_enumeration() {
    let c = ItemCatalog::new(
        vec![
            Item::new("a", 1.0).with_noise(NoiseSpec::TwoPoint { a: 2.0 }),
            Item::new("b", 1.0).with_noise(NoiseSpec::TwoPoint { a: 0.5 }),
        ],
        vec![(0b01, 2.0), (0b10, 2.5), (0b11, 3.0)],
        Completion::Strict,
    )
    .unwrap();
    // deterministic utilities: a = 1, b = 1.5, ab = 1
    let mut want = 0.0;
    for na in [-2.0, 2.0] {
        for nb in [-0.5, 0.5] {
            let best = [0.0, 1.0 + na, 1.5 + nb, 1.0 + na + nb]
                .into_iter()
                .fold(0.0f64, f64::max);
            want += 0.25 * best;
        }
    }
    assert_eq!(c.u_max(McSettings::default()).unwrap().mean, want);
}

#[test]
fn superior_item_examples() {
    assert_eq!(fixtures::table1().superior_item(), Some(3));

    let overlap = ItemCatalog::new(
        vec![
            Item::new("i", 0.0).with_noise(NoiseSpec::TwoPoint { a: 1.0 }),
            Item::new("j", 0.0).with_noise(NoiseSpec::TwoPoint { a: 1.0 }),
        ],
        vec![(0b01, 1.0), (0b10, 0.5), (0b11, 1.0)],
        Completion::Strict,
    )
    .unwrap();
    assert_eq!(overlap.superior_item(), None);

    let tg = NoiseSpec::TruncatedGaussian { sigma: 1.0, bound: 0.4 };
    let c2 = ItemCatalog::new(
        vec![Item::new("i", 3.0).with_noise(tg), Item::new("j", 4.0).with_noise(tg)],
        vec![(0b01, 4.0), (0b10, 4.1), (0b11, 4.1)],
        Completion::Strict,
    )
    .unwrap();
    assert_eq!(c2.superior_item(), Some(0));

    let (gauss, _) = fixtures::table2(2);
    assert_eq!(gauss.superior_item(), None);
}

#[test]
fn truncated_gaussian_stays_in_bounds() {
    let spec = NoiseSpec::TruncatedGaussian { sigma: 2.0, bound: 0.3 };
    let mut rng = crate::rng::stream(1, crate::rng::Domain::NoiseWorld, 0, 0);
    for _ in 0..10_000 {
        assert!(spec.sample(&mut rng).abs() <= 0.3);
    }
}

#[test]
fn validation_examples() {
    assert!(fixtures::fig3a().validate().passed());
    assert!(fixtures::table1().validate().passed());
    assert!(fixtures::table4().validate().passed());
    assert!(fixtures::table5().validate().passed());
    assert!(fixtures::two_item_competition().validate().passed());
    for k in 1..=4 {
        assert!(fixtures::table2(k).0.validate().passed());
    }

    let supermodular = ItemCatalog::new(
        vec![Item::new("a", 0.0), Item::new("b", 0.0)],
        vec![(0b01, 1.0), (0b10, 1.0), (0b11, 3.0)],
        Completion::Strict,
    )
    .unwrap();
    let report = supermodular.validate();
    assert!(matches!(report.violation, Some(Violation::NotSubmodular { .. })));

    let not_monotone = ItemCatalog::new(
        vec![Item::new("a", 0.0), Item::new("b", 0.0)],
        vec![(0b01, 2.0), (0b10, 1.0), (0b11, 1.5)],
        Completion::Strict,
    )
    .unwrap();
    assert!(matches!(
        not_monotone.validate().violation,
        Some(Violation::NotMonotone { .. })
    ));
}

#[test]
fn fixture_utilities_match_tables() {
    let t4 = fixtures::table4();
    let u = |s| t4.deterministic_utility(s);
    assert!((u(0b001) - 2.0).abs() < 1e-12);
    assert!((u(0b010) - 0.11).abs() < 1e-12);
    assert!((u(0b100) - 0.1).abs() < 1e-12);
    assert!((u(0b101) - 2.1).abs() < 1e-12);
    for s in [0b011, 0b110, 0b111] {
        assert!(u(s) < 0.0);
    }
    let t5 = fixtures::table5();
    for (i, want) in [7.0, 6.8, 5.0, 4.7].into_iter().enumerate() {
        assert!((t5.deterministic_utility(1 << i) - want).abs() < 1e-12);
    }
    assert!(t5.check_pure_competition().is_ok());
    let comp = fixtures::two_item_competition();
    assert_eq!(comp.deterministic_utility(0b01), 10.0);
    assert_eq!(comp.deterministic_utility(0b10), 1.0);
    assert_eq!(comp.deterministic_utility(0b11), 0.0);
}

#[test]
fn completion_modes() {
    let items = || vec![Item::new("a", 0.0), Item::new("b", 0.0)];
    let c = ItemCatalog::new(items(), vec![(0b01, 2.0), (0b10, 3.0)], Completion::Max).unwrap();
    assert_eq!(c.value(0b11), 3.0);
    assert!(ItemCatalog::new(items(), vec![(0b01, 2.0), (0b10, 3.0)], Completion::Strict).is_err());
    assert!(ItemCatalog::new(items(), vec![(0b01, 2.0)], Completion::Max).is_err());
}

#[test]
fn pure_competition_is_strict() {
    assert!(fixtures::two_item_competition().check_pure_competition().is_ok());
    assert!(fixtures::table4().check_pure_competition().is_err());
    // a bundle with exactly the utility of its better member is not pure
    let tie = ItemCatalog::new(
        vec![Item::new("a", 0.0), Item::new("b", 0.0)],
        vec![(0b01, 2.0), (0b10, 1.0), (0b11, 2.0)],
        Completion::Strict,
    )
    .unwrap();
    assert!(tie.check_pure_competition().is_err());
}

#[test]
fn probability_conversion() {
    let v = utilities_from_probabilities(&[0.107, 0.091, 0.015, 0.011, 1e-4], 10_000.0).unwrap();
    for (got, want) in v.iter().zip([7.0, 6.8, 5.0, 4.7]) {
        assert!((got - want).abs() < 0.05, "{got} vs {want}");
    }
    assert!(v[4].abs() < 1e-12);
    assert!(utilities_from_probabilities(&[0.0], 10_000.0).is_err());
    assert!(utilities_from_probabilities(&[-0.5], 10_000.0).is_err());
}

#[test]
fn config_round_trip_and_errors() {
    let text = r#"
[[items]]
id = "i1"
price = 1.0

[[items]]
id = "i2"
price = 4.0
noise = { kind = "two-point", a = 0.5 }

[valuation]
"i1" = 5.0
"i2" = 7.0
"i1, i2" = 7.0

[budgets]
i2 = 3
"#;
    let cfg = CatalogConfig::parse(text).unwrap();
    assert_eq!(cfg.catalog.item_count(), 2);
    assert_eq!(cfg.budgets, vec![(1, 3)]);
    assert_eq!(cfg.catalog.item(1).noise, NoiseSpec::TwoPoint { a: 0.5 });
    let again = CatalogConfig::parse(&cfg.to_toml()).unwrap();
    assert_eq!(again, cfg);

    for bad in [
        text.replace("price = 1.0", "price = 1.0\ncolour = 2"),
        text.replace("\"i1, i2\"", "\"i1, i9\""),
        text.replace("two-point", "cauchy"),
        text.replace("i2 = 3", "i2 = -3"),
        text.replace("a = 0.5", "a = 0.5, sigma = 1.0"),
    ] {
        assert!(CatalogConfig::parse(&bad).is_err(), "{bad}");
    }
}

#[test]
fn probability_list_parser() {
    let list = parse_probability_list("# genre p\nindie 0.107\nrock 0.091\n".as_bytes()).unwrap();
    assert_eq!(list, vec![("indie".to_string(), 0.107), ("rock".to_string(), 0.091)]);
    assert!(matches!(
        parse_probability_list("indie\n".as_bytes()),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(parse_probability_list("indie 0\n".as_bytes()).is_err());
}

fn arb_catalog() -> impl Strategy<Value = ItemCatalog> {
    (1usize..=4)
        .prop_flat_map(|m| {
            (
                proptest::collection::vec((0.0f64..5.0, 0.0f64..3.0, prop_oneof![Just(0.0), 0.1f64..2.0]), m),
                proptest::collection::vec(0.0f64..4.0, m),
            )
        })
        .prop_map(|(items, weights)| {
            // coverage-style valuation: sum of weights of distinct "topics",
            // each item covering its own topic plus a shared one
            let m = items.len();
            let shared = 1.0;
            let listed = (1..(1u32 << m))
                .map(|s| {
                    let own: f64 = members(s).map(|i| weights[i]).sum();
                    (s, own + shared)
                })
                .collect();
            let items = items
                .iter()
                .enumerate()
                .map(|(i, &(_, price, a))| {
                    Item::new(format!("t{i}"), price).with_noise(NoiseSpec::TwoPoint { a })
                })
                .collect();
            ItemCatalog::new(items, listed, Completion::Strict).unwrap()
        })
}

proptest! {
    #[test]
    fn utility_is_additive(c in arb_catalog(), raw in proptest::collection::vec(-3.0f64..3.0, 4)) {
        let m = c.item_count();
        let noise = NoiseWorld(raw[..m].to_vec());
        for s in 0..=c.full_set() {
            let want = c.value(s) - members(s).map(|i| c.item(i).price).sum::<f64>()
                + members(s).map(|i| noise.0[i]).sum::<f64>();
            prop_assert!((c.utility(s, &noise).unwrap() - want).abs() < 1e-12);
            prop_assert!((c.utility_table(&noise)[s as usize] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_utility_nonnegative_and_bounds(c in arb_catalog()) {
        let mc = McSettings::default();
        let umin = c.u_min(mc).unwrap().mean;
        let umax = c.u_max(mc).unwrap().mean;
        for s in 1..=c.full_set() {
            let e = c.expected_truncated_utility(s, mc).unwrap().mean;
            prop_assert!(e >= 0.0);
            prop_assert!(umax >= e - 1e-12);
        }
        for i in 0..c.item_count() {
            let e = c.expected_truncated_utility(1 << i, mc).unwrap().mean;
            prop_assert!(umin <= e + 1e-12);
        }
    }

    #[test]
    fn zero_noise_truncation_is_exact(v in -5.0f64..5.0, p in 0.0f64..5.0) {
        let c = ItemCatalog::new(vec![Item::new("a", p)], vec![(1, v.abs())], Completion::Max).unwrap();
        let e = c.expected_truncated_utility(1, McSettings::default()).unwrap();
        prop_assert_eq!(e.mean, (v.abs() - p).max(0.0));
    }

    #[test]
    fn superior_item_dominates_every_joint_outcome(c in arb_catalog()) {
        if let Some(best) = c.superior_item() {
            for (world, _) in c.noise_support().unwrap() {
                let ub = c.utility(1 << best, &world).unwrap();
                for j in (0..c.item_count()).filter(|&j| j != best) {
                    prop_assert!(ub > c.utility(1 << j, &world).unwrap());
                }
            }
        }
    }

    #[test]
    fn coverage_valuations_validate(c in arb_catalog()) {
        prop_assert!(c.validate().passed());
    }
}
