//! Per-expert weighting and aggregation into global sub-attribute weights.
//!
//! Category weights come from crisp FUCOM, sub-attribute weights from F-FUCOM
//! followed by GMIR defuzzification. A sub-attribute's global weight is its
//! local weight times its category weight, averaged over experts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fucom::{
    chain_from_priorities, defuzzify_weights, solve_ffucom_with, solve_fucom_crisp_with,
    ComparativeChain, ConsistencyThresholds, FucomError, WeightSolution,
};
use crate::fuzzy::{FuzzyError, LinguisticScale};
use crate::registry::{Category, Registry};
use crate::survey::{CategoryInput, ExpertSurvey, SubAttributeInput};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("expert {expert}, {level}: {source}")]
    Solve {
        expert: String,
        level: String,
        #[source]
        source: FucomError,
    },
    #[error("expert {expert}, {category} sub-attribute {code}: {source}")]
    Term {
        expert: String,
        category: Category,
        code: String,
        #[source]
        source: FuzzyError,
    },
    #[error("no expert weight sets to aggregate")]
    NoExperts,
    #[error("expert {expert} does not cover the registry: {detail}")]
    Coverage { expert: String, detail: String },
    #[error("weight document: {0}")]
    Document(String),
}

/// One expert's category and sub-attribute solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertWeights {
    pub expert_id: String,
    pub categories: WeightSolution,
    pub sub_attributes: BTreeMap<Category, SubAttributeWeights>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubAttributeWeights {
    pub fuzzy: WeightSolution,
    pub crisp: WeightSolution,
}

impl ExpertWeights {
    pub fn category_weight(&self, category: Category) -> Option<f64> {
        self.categories.weight_of(category.code())
    }

    pub fn local_weight(&self, category: Category, code: &str) -> Option<f64> {
        self.sub_attributes.get(&category)?.crisp.weight_of(code)
    }
}

fn category_chain(input: &CategoryInput) -> Result<ComparativeChain, FucomError> {
    match input {
        CategoryInput::Ratings(ratings) => {
            let codes: Vec<String> = ratings.keys().map(|c| c.code().to_string()).collect();
            let priorities: Vec<f64> = ratings.values().map(|&r| r as f64).collect();
            chain_from_priorities(&codes, &priorities)
        }
        CategoryInput::Chain {
            order,
            significance,
        } => ComparativeChain::crisp(
            order.iter().map(|c| c.code().to_string()).collect(),
            significance.clone(),
        ),
    }
}

fn sub_attribute_chain(
    expert: &str,
    category: Category,
    input: &SubAttributeInput,
    scale: &LinguisticScale,
) -> Result<ComparativeChain, WeightError> {
    let solve_err = |source| WeightError::Solve {
        expert: expert.to_string(),
        level: format!("{category} sub-attributes"),
        source,
    };
    match input {
        SubAttributeInput::Ratings(entries) => {
            let codes: Vec<String> = entries.iter().map(|e| e.code.clone()).collect();
            let priorities: Vec<f64> = entries.iter().map(|e| e.rating as f64).collect();
            Ok(chain_from_priorities(&codes, &priorities).map_err(solve_err)?.to_fuzzy())
        }
        SubAttributeInput::Linguistic(entries) => {
            let order = entries.iter().map(|e| e.code.clone()).collect();
            let phi = entries
                .iter()
                .filter_map(|e| e.term.as_ref().map(|t| (e, t)))
                .map(|(e, term)| {
                    scale.lookup(term).map_err(|source| WeightError::Term {
                        expert: expert.to_string(),
                        category,
                        code: e.code.clone(),
                        source,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            ComparativeChain::fuzzy(order, phi).map_err(solve_err)
        }
    }
}

pub fn per_expert_weights(
    survey: &ExpertSurvey,
    scale: &LinguisticScale,
    thresholds: &ConsistencyThresholds,
) -> Result<ExpertWeights, WeightError> {
    let categories = category_chain(&survey.categories)
        .and_then(|chain| solve_fucom_crisp_with(&chain, thresholds))
        .map_err(|source| WeightError::Solve {
            expert: survey.id.clone(),
            level: "categories".into(),
            source,
        })?;
    let mut sub_attributes = BTreeMap::new();
    for (&category, input) in &survey.sub_attributes {
        let chain = sub_attribute_chain(&survey.id, category, input, scale)?;
        let solved = solve_ffucom_with(&chain, thresholds)
            .and_then(|fuzzy| defuzzify_weights(&fuzzy).map(|crisp| (fuzzy, crisp)))
            .map_err(|source| WeightError::Solve {
                expert: survey.id.clone(),
                level: format!("{category} sub-attributes"),
                source,
            })?;
        sub_attributes.insert(
            category,
            SubAttributeWeights {
                fuzzy: solved.0,
                crisp: solved.1,
            },
        );
    }
    Ok(ExpertWeights {
        expert_id: survey.id.clone(),
        categories,
        sub_attributes,
    })
}

/// Solves every expert independently (in parallel); output keeps input order.
pub fn all_expert_weights(
    surveys: &[ExpertSurvey],
    scale: &LinguisticScale,
    thresholds: &ConsistencyThresholds,
) -> Result<Vec<ExpertWeights>, WeightError> {
    surveys
        .par_iter()
        .map(|s| per_expert_weights(s, scale, thresholds))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalWeight {
    pub code: String,
    pub category: Category,
    pub weight: f64,
}

/// Aggregated global weights; `global` follows registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalWeightTable {
    /// Sorted by expert id.
    pub per_expert: Vec<ExpertWeights>,
    pub global: Vec<GlobalWeight>,
    pub category_totals: BTreeMap<Category, f64>,
}

/// Mean that does not depend on input order and returns `x` exactly when
/// every value equals `x`.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let base = values[0];
    let offset: f64 = values.iter().map(|v| v - base).sum();
    base + offset / values.len() as f64
}

pub fn global_weights(
    sets: &[ExpertWeights],
    registry: &Registry,
) -> Result<GlobalWeightTable, WeightError> {
    if sets.is_empty() {
        return Err(WeightError::NoExperts);
    }
    let mut per_expert = sets.to_vec();
    per_expert.sort_by(|a, b| a.expert_id.cmp(&b.expert_id));

    let mut products: Vec<Vec<f64>> = vec![Vec::with_capacity(sets.len()); registry.len()];
    for set in &per_expert {
        for (j, spec) in registry.criteria().iter().enumerate() {
            let coverage = |detail: String| WeightError::Coverage {
                expert: set.expert_id.clone(),
                detail,
            };
            let cat_w = set
                .category_weight(spec.category)
                .ok_or_else(|| coverage(format!("no weight for category {}", spec.category)))?;
            let local = set
                .local_weight(spec.category, &spec.code)
                .ok_or_else(|| coverage(format!("no local weight for {}", spec.code)))?;
            products[j].push(local * cat_w);
        }
        let expected: usize = registry.len();
        let covered: usize = set.sub_attributes.values().map(|s| s.crisp.codes.len()).sum();
        if covered != expected {
            return Err(WeightError::Coverage {
                expert: set.expert_id.clone(),
                detail: format!("{covered} sub-attributes weighted, registry has {expected}"),
            });
        }
    }
    let means: Vec<f64> = products.iter_mut().map(|v| stable_mean(v)).collect();
    let total: f64 = means.iter().sum();
    if !(total > 0.0) {
        return Err(WeightError::Document("aggregated weights sum to zero".into()));
    }
    let global: Vec<GlobalWeight> = registry
        .criteria()
        .iter()
        .zip(&means)
        .map(|(spec, &m)| GlobalWeight {
            code: spec.code.clone(),
            category: spec.category,
            weight: m / total,
        })
        .collect();
    Ok(GlobalWeightTable {
        per_expert,
        category_totals: category_totals(&global),
        global,
    })
}

pub fn category_totals(global: &[GlobalWeight]) -> BTreeMap<Category, f64> {
    let mut totals = BTreeMap::new();
    for g in global {
        *totals.entry(g.category).or_insert(0.0) += g.weight;
    }
    totals
}

impl GlobalWeightTable {
    pub fn weight_of(&self, code: &str) -> Option<f64> {
        self.global.iter().find(|g| g.code == code).map(|g| g.weight)
    }

    /// Code to weight, in registry order.
    pub fn weight_vector(&self) -> Vec<(String, f64)> {
        self.global.iter().map(|g| (g.code.clone(), g.weight)).collect()
    }

    pub fn chi_report(&self) -> ChiReport {
        let mut by_expert = BTreeMap::new();
        let mut max_category_chi: f64 = 0.0;
        let mut max_sub_attribute_chi: f64 = 0.0;
        let mut all_consistent = true;
        for set in &self.per_expert {
            let mut entries = BTreeMap::new();
            entries.insert(
                "categories".to_string(),
                ChiEntry {
                    chi: set.categories.chi,
                    consistent: set.categories.consistent,
                },
            );
            max_category_chi = max_category_chi.max(set.categories.chi);
            all_consistent &= set.categories.consistent;
            for (cat, sub) in &set.sub_attributes {
                entries.insert(
                    cat.code().to_string(),
                    ChiEntry {
                        chi: sub.fuzzy.chi,
                        consistent: sub.fuzzy.consistent,
                    },
                );
                max_sub_attribute_chi = max_sub_attribute_chi.max(sub.fuzzy.chi);
                all_consistent &= sub.fuzzy.consistent;
            }
            by_expert.insert(set.expert_id.clone(), entries);
        }
        ChiReport {
            summary: ChiSummary {
                experts: self.per_expert.len(),
                max_category_chi,
                max_sub_attribute_chi,
                all_consistent,
            },
            by_expert,
        }
    }

    pub fn to_document(&self) -> WeightDocument {
        WeightDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            per_expert: self.per_expert.iter().map(ExpertDocument::from).collect(),
            global: self.global.clone(),
            category_totals: self.category_totals.clone(),
            chi: Some(self.chi_report()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiEntry {
    pub chi: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSummary {
    pub experts: usize,
    pub max_category_chi: f64,
    pub max_sub_attribute_chi: f64,
    pub all_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiReport {
    pub summary: ChiSummary,
    pub by_expert: BTreeMap<String, BTreeMap<String, ChiEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeWeight {
    pub code: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyCodeWeight {
    pub code: String,
    pub fuzzy: [f64; 3],
    pub crisp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryBlock {
    pub weights: Vec<CodeWeight>,
    pub chi: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubAttributeBlock {
    pub weights: Vec<FuzzyCodeWeight>,
    pub chi: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertDocument {
    pub id: String,
    pub categories: CategoryBlock,
    pub sub_attributes: BTreeMap<Category, SubAttributeBlock>,
}

impl From<&ExpertWeights> for ExpertDocument {
    fn from(e: &ExpertWeights) -> Self {
        let categories = CategoryBlock {
            weights: e
                .categories
                .codes
                .iter()
                .map(|code| CodeWeight {
                    code: code.clone(),
                    weight: e.categories.weight_of(code).unwrap_or(0.0),
                })
                .collect(),
            chi: e.categories.chi,
            consistent: e.categories.consistent,
        };
        let sub_attributes = e
            .sub_attributes
            .iter()
            .map(|(cat, sub)| {
                let fuzzy = sub.fuzzy.fuzzy_weights().unwrap_or(&[]);
                let weights = sub
                    .crisp
                    .codes
                    .iter()
                    .zip(fuzzy)
                    .map(|(code, t)| FuzzyCodeWeight {
                        code: code.clone(),
                        fuzzy: t.components(),
                        crisp: sub.crisp.weight_of(code).unwrap_or(0.0),
                    })
                    .collect();
                (
                    *cat,
                    SubAttributeBlock {
                        weights,
                        chi: sub.fuzzy.chi,
                        consistent: sub.fuzzy.consistent,
                    },
                )
            })
            .collect();
        ExpertDocument {
            id: e.expert_id.clone(),
            categories,
            sub_attributes,
        }
    }
}

/// On-disk weight document written by `weights` and read by `rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightDocument {
    pub schema_version: String,
    #[serde(default)]
    pub per_expert: Vec<ExpertDocument>,
    pub global: Vec<GlobalWeight>,
    #[serde(default)]
    pub category_totals: BTreeMap<Category, f64>,
    #[serde(default)]
    pub chi: Option<ChiReport>,
}

/// Global weights as consumed by scoring: registry order, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub weights: Vec<GlobalWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<ChiSummary>,
}

impl WeightSet {
    pub fn weight_of(&self, code: &str) -> Option<f64> {
        self.weights.iter().find(|g| g.code == code).map(|g| g.weight)
    }

    pub fn category_totals(&self) -> BTreeMap<Category, f64> {
        category_totals(&self.weights)
    }
}

impl WeightDocument {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("weight document serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, WeightError> {
        let doc: WeightDocument =
            serde_json::from_str(text).map_err(|e| WeightError::Document(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(WeightError::Document(format!(
                "unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    /// Validates the global table against `registry` and renormalizes it to
    /// sum exactly one. Stated category totals must match the table.
    pub fn weight_set(&self, registry: &Registry) -> Result<WeightSet, WeightError> {
        let err = |m: String| WeightError::Document(m);
        for (i, g) in self.global.iter().enumerate() {
            let spec = registry
                .get(&g.code)
                .ok_or_else(|| err(format!("unknown code {} in global weights", g.code)))?;
            if spec.category != g.category {
                return Err(err(format!(
                    "{} listed under {} but the registry files it under {}",
                    g.code, g.category, spec.category
                )));
            }
            if !(g.weight.is_finite() && g.weight >= 0.0) {
                return Err(err(format!("weight for {} must be nonnegative, got {}", g.code, g.weight)));
            }
            if self.global[..i].iter().any(|o| o.code == g.code) {
                return Err(err(format!("duplicate code {} in global weights", g.code)));
            }
        }
        if let Some(missing) = registry.codes().find(|c| !self.global.iter().any(|g| g.code == *c)) {
            return Err(err(format!("global weights missing {missing}")));
        }
        let raw_totals = category_totals(&self.global);
        for (cat, stated) in &self.category_totals {
            let actual = raw_totals.get(cat).copied().unwrap_or(0.0);
            if (stated - actual).abs() > 1e-6 {
                return Err(err(format!(
                    "category total for {cat} is {stated} but its sub-attributes sum to {actual}"
                )));
            }
        }
        let total: f64 = self.global.iter().map(|g| g.weight).sum();
        if !(total > 0.0) {
            return Err(err("global weights sum to zero".into()));
        }
        let weights = registry
            .codes()
            .map(|code| {
                let g = self.global.iter().find(|g| g.code == code).expect("checked");
                GlobalWeight {
                    code: g.code.clone(),
                    category: g.category,
                    weight: g.weight / total,
                }
            })
            .collect();
        Ok(WeightSet {
            weights,
            chi: self.chi.as_ref().map(|c| c.summary),
        })
    }
}
