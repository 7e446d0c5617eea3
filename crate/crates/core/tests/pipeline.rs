mod common;

use std::collections::BTreeMap;

use siting_core::commands::{compute_weights, parse_overrides, EXIT_INPUT};
use siting_core::data::{load_sites, load_sites_file, normalize};
use siting_core::fucom::{chain_from_priorities, solve_fucom_crisp, ConsistencyThresholds};
use siting_core::wsm::ORDER_EPS;
use siting_core::{
    AppError, Category, Dataset, GroupMode, LinguisticScale, NormalizationMethod, RankingDocument, Registry,
    WeightDocument,
};

use common::*;

fn fixture_dataset() -> Dataset {
    let registry = Registry::standard();
    let raw = load_sites_file(&fixtures().join("sites.csv"), &registry).unwrap();
    let doc = WeightDocument::from_json_str(&read_fixture("published_weights.json")).unwrap();
    Dataset::new(registry, raw, doc, NormalizationMethod::MinMax, GroupMode::Overall).unwrap()
}

fn weights_from_surveys(text: &str) -> siting_core::GlobalWeightTable {
    compute_weights(
        text,
        &LinguisticScale::default_scale(),
        &Registry::standard(),
        &ConsistencyThresholds::default(),
    )
    .unwrap()
}

#[test]
fn category_ratings_4_2_1_1_match_simplex_grid() {
    let codes: Vec<String> = ["SP", "FP", "RHM", "CSF"].map(String::from).to_vec();
    let chain = chain_from_priorities(&codes, &[4.0, 2.0, 1.0, 1.0]).unwrap();
    let sol = solve_fucom_crisp(&chain).unwrap();
    let (grid_chi, grid_w) = grid_min_chi(&[2.0, 2.0, 1.0], 1000);
    assert!((sol.chi - grid_chi).abs() <= 1e-3);
    for (got, want) in sol.crisp_weights().unwrap().iter().zip(&grid_w) {
        assert!((got - want).abs() <= 1e-3, "{got} vs {want}");
    }
}

#[test]
fn five_expert_fixture_gives_22_weights_summing_to_one() {
    let table = weights_from_surveys(&read_fixture("surveys.json"));
    assert_eq!(table.per_expert.len(), 5);
    assert_eq!(table.global.len(), 22);
    let total: f64 = table.global.iter().map(|g| g.weight).sum();
    assert!((total - 1.0).abs() <= 1e-12, "{total}");
    let doc = table.to_document();
    assert!(doc.chi.as_ref().unwrap().summary.all_consistent);
}

#[test]
fn fp3_ranked_first_gets_the_largest_fp_weight() {
    let table = weights_from_surveys(&read_fixture("surveys.json"));
    let mut fp3_top = 0;
    for expert in &table.per_expert {
        let fp = |c: &str| expert.local_weight(Category::FP, c).unwrap();
        if fp("FP3") > fp("FP1") && fp("FP3") > fp("FP2") {
            fp3_top += 1;
        }
    }
    assert_eq!(fp3_top, 4);
    let fp_codes = ["FP1", "FP2", "FP3"];
    let global = |c: &str| table.global.iter().find(|g| g.code == c).unwrap().weight;
    assert!(fp_codes.iter().all(|c| global("FP3") >= global(c)));
}

#[test]
fn single_expert_file_reproduces_that_experts_table() {
    let doc: serde_json::Value = serde_json::from_str(&read_fixture("surveys.json")).unwrap();
    let one = serde_json::json!({ "experts": [doc["experts"][1].clone()] });
    let table = weights_from_surveys(&one.to_string());
    let expert = &table.per_expert[0];
    for g in &table.global {
        let expected = expert.local_weight(g.category, &g.code).unwrap() * expert.category_weight(g.category).unwrap();
        assert!((g.weight - expected).abs() <= 1e-12, "{}: {} vs {expected}", g.code, g.weight);
    }
}

#[test]
fn malformed_survey_names_the_field() {
    let mut doc: serde_json::Value = serde_json::from_str(&read_fixture("surveys.json")).unwrap();
    doc["experts"][2]["sub_attributes"]["RHM"][0]["rating"] = serde_json::json!(9);
    let err = compute_weights(
        &doc.to_string(),
        &LinguisticScale::default_scale(),
        &Registry::standard(),
        &ConsistencyThresholds::default(),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), EXIT_INPUT);
    assert!(err.to_string().contains("experts[2].sub_attributes.RHM[0].rating"), "{err}");
}

#[test]
fn golden_ranking_agrees_with_oracle() {
    let registry = Registry::standard();
    let raw = load_sites_file(&fixtures().join("sites.csv"), &registry).unwrap();
    let normalized = normalize(&raw, &registry, NormalizationMethod::MinMax).unwrap();
    let text = std::fs::read_to_string(golden_dir().join("ranking.json")).unwrap();
    let doc: RankingDocument = serde_json::from_str(&text).unwrap();
    let w: Vec<f64> = registry
        .codes()
        .map(|c| doc.weights_used.iter().find(|g| g.code == c).unwrap().weight)
        .collect();
    let expected = oracle_scores(normalized.rows(), &w);
    let ranks = oracle_ranks(&expected);
    assert_eq!(doc.sites.len(), 220);
    for site in &doc.sites {
        let i = raw.sites().iter().position(|s| s.site_id == site.site_id).unwrap();
        assert!((site.score - expected[i]).abs() <= 1e-12);
        assert_eq!(site.rank, ranks[i], "{}", site.site_id);
    }
    let mut seen: Vec<usize> = doc.sites.iter().map(|s| s.rank).collect();
    seen.sort();
    assert_eq!(seen, (1..=220).collect::<Vec<_>>());
}

#[test]
fn group_table_restricts_to_one_category() {
    let ds = fixture_dataset();
    let doc = ds.ranking(Some(Category::CSF), None).unwrap();
    assert_eq!(doc.group, Some(Category::CSF));
    assert!(doc.weights_used.iter().all(|g| g.category == Category::CSF));
    let renorm = ds.ranking(Some(Category::CSF), Some(GroupMode::Renormalized)).unwrap();
    let total: f64 = renorm.weights_used.iter().map(|g| g.weight).sum();
    assert!((total - 1.0).abs() <= 1e-12);
    // rescaling a group's weights leaves its ordering alone
    let order = |d: &RankingDocument| d.sites.iter().map(|s| s.site_id.clone()).collect::<Vec<_>>();
    assert_eq!(order(&doc), order(&renorm));
}

#[test]
fn single_site_ranks_first() {
    let registry = Registry::standard();
    let text = std::fs::read_to_string(fixtures().join("sites.csv")).unwrap();
    let two_lines: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    let raw = load_sites(two_lines.as_bytes(), &registry).unwrap();
    let doc = WeightDocument::from_json_str(&read_fixture("published_weights.json")).unwrap();
    let ds = Dataset::new(registry, raw, doc, NormalizationMethod::MinMax, GroupMode::Overall).unwrap();
    let ranking = ds.ranking(None, None).unwrap();
    assert_eq!(ranking.sites.len(), 1);
    assert_eq!(ranking.sites[0].rank, 1);
}

#[test]
fn fp3_override_matches_brute_force() {
    let ds = fixture_dataset();
    let overrides = parse_overrides("FP3=0.20").unwrap();
    let report = ds.whatif(&overrides).unwrap();

    let codes: Vec<String> = ds.registry.codes().map(str::to_string).collect();
    let baseline: Vec<f64> = ds.weights.weights.iter().map(|g| g.weight).collect();
    let adjusted = oracle_override(&codes, &baseline, &overrides);
    for (g, want) in report.weights.iter().zip(&adjusted) {
        assert!((g.weight - want).abs() <= 1e-12, "{}", g.code);
    }
    let before = oracle_scores(ds.normalized.rows(), &baseline);
    let after = oracle_scores(ds.normalized.rows(), &adjusted);
    let ids: Vec<String> = ds.normalized.sites().iter().map(|s| s.site_id.clone()).collect();
    let expected = oracle_reversals(&ids, &before, &after, ORDER_EPS);
    let mut got: Vec<(String, String)> = report.reversals.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
    got.sort();
    assert_eq!(got, expected);
    assert_eq!(report.reversal_count, expected.len());
    assert!(report.reversal_count > 0);

    let new_ranks = oracle_ranks(&after);
    for s in &report.ranking.sites {
        let i = ids.iter().position(|id| *id == s.site_id).unwrap();
        assert_eq!(s.rank, new_ranks[i]);
    }
}

#[test]
fn empty_override_echoes_baseline() {
    let ds = fixture_dataset();
    let report = ds.whatif(&BTreeMap::new()).unwrap();
    assert_eq!(report.reversal_count, 0);
    assert!(report.rank_changes.is_empty());
    assert_eq!(report.ranking, ds.ranking(None, None).unwrap());
}

#[test]
fn unknown_override_code_is_an_input_error() {
    let ds = fixture_dataset();
    let err = ds.whatif(&parse_overrides("FP9=0.1").unwrap()).unwrap_err();
    assert!(matches!(err, AppError::Input(ref m) if m.contains("unknown code")), "{err}");
}

#[test]
fn vector_normalization_needs_nonnegative_columns() {
    let registry = Registry::standard();
    let raw = load_sites_file(&fixtures().join("sites.csv"), &registry).unwrap();
    // net imports go negative, which the vector norm cannot rank
    let err = normalize(&raw, &registry, NormalizationMethod::Vector).unwrap_err();
    assert!(err.to_string().contains("FP1"), "{err}");
    let fp1 = raw.column_index("FP1").unwrap();
    let shifted = raw.map_column(fp1, |x| x + 100.0);
    let m = normalize(&shifted, &registry, NormalizationMethod::Vector).unwrap();
    assert!(m.rows().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
}
