mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use siting_core::fucom::{
    chain_from_priorities, defuzzify_weights, solve_ffucom, solve_fucom_crisp, ComparativeChain,
};
use siting_core::weights::GlobalWeight;
use siting_core::wsm::{apply_overrides, group_scores, rank, score, whatif};
use siting_core::{Category, DecisionMatrix, GroupMode, Registry, SiteMeta, Tfn, WeightSet};

use common::*;

fn codes(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("C{i}")).collect()
}

fn tfn_at_least_one() -> impl Strategy<Value = Tfn> {
    (1.0f64..5.0, 0.0f64..1.0, 0.0f64..2.0).prop_map(|(m, down, up)| {
        let l = (m - down).max(0.0);
        Tfn::new(l, m, m + up).unwrap()
    })
    .prop_filter("gmir >= 1", |t| t.gmir() >= 1.0)
}

fn weight_set(registry: &Registry, w: &[f64]) -> WeightSet {
    WeightSet {
        weights: registry
            .criteria()
            .iter()
            .zip(w)
            .map(|(c, &weight)| GlobalWeight {
                code: c.code.clone(),
                category: c.category,
                weight,
            })
            .collect(),
        chi: None,
    }
}

fn matrix(rows: Vec<Vec<f64>>, registry: &Registry) -> DecisionMatrix {
    let sites = (0..rows.len())
        .map(|i| SiteMeta {
            site_id: format!("P{i:03}"),
            name: String::new(),
            state: String::new(),
            lat: 0.0,
            lon: 0.0,
        })
        .collect();
    DecisionMatrix::from_rows(sites, registry.codes().map(str::to_string).collect(), rows, true).unwrap()
}

fn unit_rows(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 22), n)
}

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
        let t: f64 = v.iter().sum();
        v.iter().map(|x| x / t).collect()
    })
}

proptest! {
    // each case runs two fuzzy solves
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fuzzy_solutions_are_valid_and_repeatable(phi in prop::collection::vec(tfn_at_least_one(), 1..9)) {
        let chain = ComparativeChain::fuzzy(codes(phi.len() + 1), phi).unwrap();
        let sol = solve_ffucom(&chain).unwrap();
        let w = sol.fuzzy_weights().unwrap();
        prop_assert!(w.iter().all(|t| t.l() >= 0.0 && t.l() <= t.m() && t.m() <= t.u()));
        prop_assert!((w.iter().map(Tfn::gmir).sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(sol.chi <= 1e-9);
        prop_assert_eq!(format!("{sol:?}"), format!("{:?}", solve_ffucom(&chain).unwrap()));
        let crisp = defuzzify_weights(&sol).unwrap();
        prop_assert!((crisp.crisp_weights().unwrap().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn crisp_chains_reach_full_consistency(phi in prop::collection::vec(1.0f64..9.0, 0..10)) {
        let sol = solve_fucom_crisp(&ComparativeChain::crisp(codes(phi.len() + 1), phi.clone()).unwrap()).unwrap();
        let w = sol.crisp_weights().unwrap();
        prop_assert!(sol.chi <= 1e-9);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let expected = chain_weights(&phi);
        for (a, b) in w.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn priority_chains_telescope(priorities in prop::collection::vec(1u8..=5, 1..8)) {
        let p: Vec<f64> = priorities.iter().map(|&x| x as f64).collect();
        let chain = chain_from_priorities(&codes(p.len()), &p).unwrap();
        let phi: Vec<f64> = match chain.significance() {
            siting_core::fucom::Significance::Crisp(v) => v.clone(),
            _ => unreachable!(),
        };
        prop_assert!(phi.iter().all(|&f| f >= 1.0));
        let max = p.iter().copied().fold(f64::MIN, f64::max);
        let min = p.iter().copied().fold(f64::MAX, f64::min);
        prop_assert!((phi.iter().product::<f64>() - max / min).abs() <= 1e-9);
    }

    #[test]
    fn scores_match_oracle_and_groups_add_up(rows in unit_rows(1..30), w in simplex(22)) {
        let registry = Registry::standard();
        let m = matrix(rows.clone(), &registry);
        let set = weight_set(&registry, &w);
        let s = score(&m, &set).unwrap();
        let expected = oracle_scores(&rows, &w);
        let mut total = vec![0.0; rows.len()];
        for cat in Category::ALL {
            for (t, g) in total.iter_mut().zip(group_scores(&m, &set, &registry, cat, GroupMode::Overall).unwrap()) {
                *t += g;
            }
        }
        for i in 0..rows.len() {
            prop_assert!((s[i] - expected[i]).abs() <= 1e-12);
            prop_assert!((total[i] - s[i]).abs() <= 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s[i]));
        }
    }

    #[test]
    fn ranks_are_competition_ranks(scores in prop::collection::vec(prop::sample::select(vec![0.1, 0.2, 0.3, 0.4]), 1..25)) {
        let ids: Vec<String> = (0..scores.len()).map(|i| format!("S{i:02}")).collect();
        let r = rank(&ids, &scores).unwrap();
        prop_assert_eq!(&r.ranks, &oracle_ranks(&scores));
        let mut order = r.order.clone();
        order.sort();
        prop_assert_eq!(order, (0..scores.len()).collect::<Vec<_>>());
    }

    #[test]
    fn overrides_fix_values_and_rescale_the_rest(
        w in simplex(22),
        picks in prop::collection::btree_map(0usize..22, 0.0f64..0.04, 0..5),
    ) {
        let registry = Registry::standard();
        let codes: Vec<String> = registry.codes().map(str::to_string).collect();
        let set = weight_set(&registry, &w);
        let overrides: BTreeMap<String, f64> = picks.iter().map(|(&j, &v)| (codes[j].clone(), v)).collect();
        let adjusted = apply_overrides(&set, &overrides).unwrap();
        let expected = oracle_override(&codes, &w, &overrides);
        for (g, e) in adjusted.weights.iter().zip(&expected) {
            prop_assert!((g.weight - e).abs() <= 1e-12);
        }
        for (code, v) in &overrides {
            prop_assert_eq!(adjusted.weight_of(code), Some(*v));
        }
        let total: f64 = adjusted.weights.iter().map(|g| g.weight).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn reversals_match_brute_force(rows in unit_rows(2..25), w in simplex(22), v in 0.0f64..0.9, j in 0usize..22) {
        let registry = Registry::standard();
        let m = matrix(rows.clone(), &registry);
        let set = weight_set(&registry, &w);
        let codes: Vec<String> = registry.codes().map(str::to_string).collect();
        let overrides = BTreeMap::from([(codes[j].clone(), v)]);
        let report = whatif(&set, &overrides, &m, &registry, GroupMode::Overall).unwrap();
        let after_w = oracle_override(&codes, &w, &overrides);
        let ids: Vec<String> = m.sites().iter().map(|s| s.site_id.clone()).collect();
        let expected = oracle_reversals(&ids, &oracle_scores(&rows, &w), &oracle_scores(&rows, &after_w), 1e-9);
        let got: Vec<(String, String)> = report.reversals.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
        // pairs separated by more than the oracle's margin must agree exactly
        for pair in &expected {
            prop_assert!(got.contains(pair), "missing {:?}", pair);
        }
        prop_assert_eq!(report.reversal_count, got.len());
    }
}
