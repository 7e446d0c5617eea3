//! Weighted-sum suitability scoring, rankings and what-if weight overrides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{min_max, DecisionMatrix};
use crate::registry::{Category, Direction, Registry};
use crate::weights::{ChiSummary, GlobalWeight, WeightSet};
use crate::SCHEMA_VERSION;

/// Score differences at or below this are treated as ties when looking for
/// rank reversals.
pub const ORDER_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("decision matrix is not normalized")]
    NotNormalized,
    #[error("weight codes do not match matrix columns: {0}")]
    CodeMismatch(String),
    #[error("unknown code {0}")]
    UnknownCode(String),
    #[error("non-finite score {score} for site {site}")]
    NonFinite { site: String, score: f64 },
    #[error("nothing to rank")]
    Empty,
    #[error("override for {code} must be a finite nonnegative weight, got {value}")]
    InvalidOverride { code: String, value: f64 },
    #[error("overrides sum to {total}, above 1, while {free} weights remain free")]
    OverridesExceedOne { total: f64, free: usize },
    #[error("overrides sum to {total} and the remaining weights are all zero; cannot renormalize")]
    CannotRenormalize { total: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupMode {
    /// Global weights as-is; the four group scores sum to the overall score.
    #[default]
    Overall,
    /// Weights rescaled to sum to one inside the group.
    Renormalized,
}

/// Weights aligned with the matrix columns.
fn aligned_weights(matrix: &DecisionMatrix, weights: &WeightSet) -> Result<Vec<f64>, RankError> {
    if weights.weights.len() != matrix.num_criteria() {
        return Err(RankError::CodeMismatch(format!(
            "{} weights for {} columns",
            weights.weights.len(),
            matrix.num_criteria()
        )));
    }
    matrix
        .codes()
        .iter()
        .map(|code| {
            weights
                .weight_of(code)
                .ok_or_else(|| RankError::CodeMismatch(format!("no weight for column {code}")))
        })
        .collect()
}

fn weighted_rows(matrix: &DecisionMatrix, w: &[f64]) -> Vec<f64> {
    matrix
        .rows()
        .iter()
        .map(|row| row.iter().zip(w).map(|(x, w)| x * w).sum())
        .collect()
}

/// Suitability `A_i = sum_j x_ij w_j` over a normalized matrix.
pub fn score(matrix: &DecisionMatrix, weights: &WeightSet) -> Result<Vec<f64>, RankError> {
    if !matrix.is_normalized() {
        return Err(RankError::NotNormalized);
    }
    let w = aligned_weights(matrix, weights)?;
    Ok(weighted_rows(matrix, &w))
}

/// Scores restricted to one category's columns.
pub fn group_scores(
    matrix: &DecisionMatrix,
    weights: &WeightSet,
    registry: &Registry,
    category: Category,
    mode: GroupMode,
) -> Result<Vec<f64>, RankError> {
    if !matrix.is_normalized() {
        return Err(RankError::NotNormalized);
    }
    let mut w = aligned_weights(matrix, weights)?;
    for (wj, code) in w.iter_mut().zip(matrix.codes()) {
        let in_group = registry
            .get(code)
            .map(|s| s.category == category)
            .ok_or_else(|| RankError::UnknownCode(code.clone()))?;
        if !in_group {
            *wj = 0.0;
        }
    }
    if mode == GroupMode::Renormalized {
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            for wj in &mut w {
                *wj /= total;
            }
        }
    }
    Ok(weighted_rows(matrix, &w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Standard competition rank per input position (1 = best).
    pub ranks: Vec<usize>,
    /// Whether the input position shares its rank with another.
    pub tied: Vec<bool>,
    /// Input positions in listing order: score descending, ties by site id.
    pub order: Vec<usize>,
}

pub fn rank(site_ids: &[String], scores: &[f64]) -> Result<Ranking, RankError> {
    if scores.is_empty() {
        return Err(RankError::Empty);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(RankError::NonFinite {
            site: site_ids.get(i).cloned().unwrap_or_default(),
            score: scores[i],
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| site_ids[a].cmp(&site_ids[b]))
    });
    let mut ranks = vec![0; scores.len()];
    let mut tied = vec![false; scores.len()];
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && scores[order[pos - 1]] == scores[i] {
            ranks[i] = ranks[order[pos - 1]];
            tied[i] = true;
            tied[order[pos - 1]] = true;
        } else {
            ranks[i] = pos + 1;
        }
    }
    Ok(Ranking { ranks, tied, order })
}

/// Min-max over sites: best 1, worst 0, all-equal 0.5.
pub fn display_normalize(scores: &[f64]) -> Vec<f64> {
    min_max(scores, Direction::Benefit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRanking {
    pub site_id: String,
    pub name: String,
    pub state: String,
    pub score: f64,
    pub score_display: f64,
    pub rank: usize,
    pub tie: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<Category, GroupEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDocument {
    pub schema_version: String,
    /// Set when the listing covers a single category; `weights_used` then
    /// holds that category's weights as applied.
    pub group: Option<Category>,
    pub mode: GroupMode,
    pub sites: Vec<SiteRanking>,
    pub weights_used: Vec<GlobalWeight>,
    pub chi_summary: Option<ChiSummary>,
}

impl RankingDocument {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ranking document serializes");
        s.push('\n');
        s
    }
}

/// Overall (or single-group) ranking listing for a normalized matrix.
pub fn ranking_document(
    matrix: &DecisionMatrix,
    weights: &WeightSet,
    registry: &Registry,
    mode: GroupMode,
    group: Option<Category>,
) -> Result<RankingDocument, RankError> {
    let ids: Vec<String> = matrix.sites().iter().map(|s| s.site_id.clone()).collect();
    let sites = match group {
        None => {
            let overall = score(matrix, weights)?;
            let ranking = rank(&ids, &overall)?;
            let display = display_normalize(&overall);
            let mut per_group = BTreeMap::new();
            for cat in Category::ALL {
                let s = group_scores(matrix, weights, registry, cat, mode)?;
                let r = rank(&ids, &s)?;
                per_group.insert(cat, (s, r));
            }
            ranking
                .order
                .iter()
                .map(|&i| {
                    let meta = &matrix.sites()[i];
                    SiteRanking {
                        site_id: meta.site_id.clone(),
                        name: meta.name.clone(),
                        state: meta.state.clone(),
                        score: overall[i],
                        score_display: display[i],
                        rank: ranking.ranks[i],
                        tie: ranking.tied[i],
                        groups: per_group
                            .iter()
                            .map(|(cat, (s, r))| {
                                (
                                    *cat,
                                    GroupEntry {
                                        score: s[i],
                                        rank: r.ranks[i],
                                    },
                                )
                            })
                            .collect(),
                    }
                })
                .collect()
        }
        Some(cat) => {
            let s = group_scores(matrix, weights, registry, cat, mode)?;
            let ranking = rank(&ids, &s)?;
            let display = display_normalize(&s);
            ranking
                .order
                .iter()
                .map(|&i| {
                    let meta = &matrix.sites()[i];
                    SiteRanking {
                        site_id: meta.site_id.clone(),
                        name: meta.name.clone(),
                        state: meta.state.clone(),
                        score: s[i],
                        score_display: display[i],
                        rank: ranking.ranks[i],
                        tie: ranking.tied[i],
                        groups: BTreeMap::new(),
                    }
                })
                .collect()
        }
    };
    let weights_used = match group {
        None => weights.weights.clone(),
        Some(cat) => {
            let members: Vec<GlobalWeight> = weights.weights.iter().filter(|g| g.category == cat).cloned().collect();
            let total: f64 = members.iter().map(|g| g.weight).sum();
            match mode {
                GroupMode::Renormalized if total > 0.0 => members
                    .into_iter()
                    .map(|g| GlobalWeight {
                        weight: g.weight / total,
                        ..g
                    })
                    .collect(),
                _ => members,
            }
        }
    };
    Ok(RankingDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        group,
        mode,
        sites,
        weights_used,
        chi_summary: weights.chi,
    })
}

/// Fixes the overridden weights and scales the remaining ones by a common
/// factor so the full set sums to one.
pub fn apply_overrides(
    baseline: &WeightSet,
    overrides: &BTreeMap<String, f64>,
) -> Result<WeightSet, RankError> {
    if overrides.is_empty() {
        return Ok(baseline.clone());
    }
    for (code, &value) in overrides {
        if baseline.weight_of(code).is_none() {
            return Err(RankError::UnknownCode(code.clone()));
        }
        if !(value.is_finite() && value >= 0.0) {
            return Err(RankError::InvalidOverride {
                code: code.clone(),
                value,
            });
        }
    }
    let fixed: f64 = overrides.values().sum();
    let free: Vec<&GlobalWeight> = baseline
        .weights
        .iter()
        .filter(|g| !overrides.contains_key(&g.code))
        .collect();
    let factor = if free.is_empty() {
        if !(fixed > 0.0) {
            return Err(RankError::CannotRenormalize { total: fixed });
        }
        None
    } else {
        if fixed > 1.0 + ORDER_EPS {
            return Err(RankError::OverridesExceedOne {
                total: fixed,
                free: free.len(),
            });
        }
        let free_total: f64 = free.iter().map(|g| g.weight).sum();
        let remaining = (1.0 - fixed).max(0.0);
        if free_total > 0.0 {
            Some(remaining / free_total)
        } else if remaining <= ORDER_EPS {
            Some(0.0)
        } else {
            return Err(RankError::CannotRenormalize { total: fixed });
        }
    };
    let weights = baseline
        .weights
        .iter()
        .map(|g| {
            let weight = match (overrides.get(&g.code), factor) {
                (Some(&v), Some(_)) => v,
                (Some(&v), None) => v / fixed,
                (None, Some(f)) => g.weight * f,
                (None, None) => unreachable!("every code overridden"),
            };
            GlobalWeight {
                weight,
                ..g.clone()
            }
        })
        .collect();
    Ok(WeightSet {
        weights,
        chi: baseline.chi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankChange {
    pub site_id: String,
    pub baseline_rank: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub schema_version: String,
    pub overrides: BTreeMap<String, f64>,
    /// The full renormalized weight set used for the new ranking.
    pub weights: Vec<GlobalWeight>,
    pub ranking: RankingDocument,
    pub rank_changes: Vec<RankChange>,
    /// Site pairs `[a, b]` with `a` ahead of `b` in the baseline and behind
    /// it now; each unordered pair appears once.
    pub reversals: Vec<[String; 2]>,
    pub reversal_count: usize,
}

impl WhatIfReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("what-if report serializes");
        s.push('\n');
        s
    }
}

/// Pairs whose relative order strictly flips between two score vectors.
pub fn reversed_pairs(site_ids: &[String], before: &[f64], after: &[f64]) -> Vec<[String; 2]> {
    let baseline = rank(site_ids, before).map(|r| r.order).unwrap_or_default();
    let mut out = Vec::new();
    for (p, &a) in baseline.iter().enumerate() {
        for &b in &baseline[p + 1..] {
            let d0 = before[a] - before[b];
            let d1 = after[a] - after[b];
            if d0 > ORDER_EPS && d1 < -ORDER_EPS {
                out.push([site_ids[a].clone(), site_ids[b].clone()]);
            }
        }
    }
    out
}

pub fn whatif(
    baseline: &WeightSet,
    overrides: &BTreeMap<String, f64>,
    matrix: &DecisionMatrix,
    registry: &Registry,
    mode: GroupMode,
) -> Result<WhatIfReport, RankError> {
    let adjusted = apply_overrides(baseline, overrides)?;
    let before = score(matrix, baseline)?;
    let after = score(matrix, &adjusted)?;
    let ids: Vec<String> = matrix.sites().iter().map(|s| s.site_id.clone()).collect();
    let before_rank = rank(&ids, &before)?;
    let after_rank = rank(&ids, &after)?;
    let ranking = ranking_document(matrix, &adjusted, registry, mode, None)?;
    let rank_changes = ranking
        .sites
        .iter()
        .filter_map(|s| {
            let i = ids.iter().position(|id| *id == s.site_id)?;
            (before_rank.ranks[i] != after_rank.ranks[i]).then(|| RankChange {
                site_id: s.site_id.clone(),
                baseline_rank: before_rank.ranks[i],
                rank: after_rank.ranks[i],
            })
        })
        .collect();
    let reversals = reversed_pairs(&ids, &before, &after);
    Ok(WhatIfReport {
        schema_version: SCHEMA_VERSION.to_string(),
        overrides: overrides.clone(),
        weights: adjusted.weights.clone(),
        ranking,
        rank_changes,
        reversal_count: reversals.len(),
        reversals,
    })
}
