//! Expert survey documents.
//!
//! ```json
//! { "experts": [ {
//!     "id": "E1",
//!     "categories": { "SP": 3, "FP": 5, "RHM": 4, "CSF": 5 },
//!     "sub_attributes": {
//!       "FP": [ { "code": "FP3", "rank": 1, "term": "Very Significant" },
//!               { "code": "FP1", "rank": 2, "term": "Weakly Significant" },
//!               { "code": "FP2", "rank": 3 } ],
//!       "SP": [ { "code": "SP1", "rating": 2 }, ... ],
//!       ...
//! } } ] }
//! ```
//!
//! Category priorities are 1-5 ratings or a direct chain
//! `{"order": [...], "significance": [...]}`. Sub-attributes are either ranked
//! with a linguistic term on every entry but the last (the term says how much
//! more significant that entry is than the next-ranked one), or rated 1-5.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::registry::{Category, Registry};

pub const RATING_MIN: u8 = 1;
pub const RATING_MAX: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurveyError {
    #[error("malformed survey document: {0}")]
    Syntax(String),
    #[error("no experts")]
    NoExperts,
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn field(path: impl Into<String>, message: impl Into<String>) -> SurveyError {
    SurveyError::Field {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CategoryInput {
    Ratings(BTreeMap<Category, u8>),
    Chain {
        order: Vec<Category>,
        significance: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub code: String,
    pub rank: u32,
    /// Significance over the next-ranked entry; `None` only for the last.
    pub term: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatedEntry {
    pub code: String,
    pub rating: u8,
    pub rank: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubAttributeInput {
    /// Sorted by rank, most significant first.
    Linguistic(Vec<RankedEntry>),
    /// Declared order: by rank when ranks are given, else registry order.
    Ratings(Vec<RatedEntry>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertSurvey {
    pub id: String,
    pub categories: CategoryInput,
    pub sub_attributes: BTreeMap<Category, SubAttributeInput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    experts: Vec<RawExpert>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpert {
    id: String,
    categories: Value,
    sub_attributes: BTreeMap<String, Vec<RawAssessment>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssessment {
    code: String,
    #[serde(default)]
    rank: Option<u32>,
    #[serde(default)]
    term: Option<String>,
    #[serde(default)]
    rating: Option<Value>,
}

fn parse_rating(value: &Value, path: &str) -> Result<u8, SurveyError> {
    let Some(x) = value.as_f64() else {
        return Err(field(path, format!("rating must be a number, got {value}")));
    };
    if x.fract() != 0.0 || x < RATING_MIN as f64 || x > RATING_MAX as f64 {
        return Err(field(
            path,
            format!("rating out of range ({x}; expected an integer {RATING_MIN}-{RATING_MAX})"),
        ));
    }
    Ok(x as u8)
}

fn parse_categories(value: &Value, path: &str) -> Result<CategoryInput, SurveyError> {
    let Some(obj) = value.as_object() else {
        return Err(field(path, "expected an object of ratings or a chain"));
    };
    if obj.contains_key("order") || obj.contains_key("significance") {
        for key in obj.keys() {
            if key != "order" && key != "significance" {
                return Err(field(format!("{path}.{key}"), "unknown field in category chain"));
            }
        }
        let order_val = obj
            .get("order")
            .and_then(Value::as_array)
            .ok_or_else(|| field(format!("{path}.order"), "expected an array of categories"))?;
        let mut order = Vec::new();
        for (i, v) in order_val.iter().enumerate() {
            let p = format!("{path}.order[{i}]");
            let name = v.as_str().ok_or_else(|| field(&p, "expected a category code"))?;
            let cat: Category = name.parse().map_err(|e: crate::registry::RegistryError| field(&p, e.to_string()))?;
            if order.contains(&cat) {
                return Err(field(p, format!("duplicate category {cat}")));
            }
            order.push(cat);
        }
        if order.len() != Category::ALL.len() {
            return Err(field(format!("{path}.order"), "must list SP, FP, RHM and CSF once each"));
        }
        let sig_val = obj
            .get("significance")
            .and_then(Value::as_array)
            .ok_or_else(|| field(format!("{path}.significance"), "expected an array of numbers"))?;
        let mut significance = Vec::new();
        for (i, v) in sig_val.iter().enumerate() {
            let p = format!("{path}.significance[{i}]");
            let x = v.as_f64().ok_or_else(|| field(&p, "expected a number"))?;
            if !(x >= 1.0 && x.is_finite()) {
                return Err(field(p, format!("significance must be >= 1, got {x}")));
            }
            significance.push(x);
        }
        if significance.len() != order.len() - 1 {
            return Err(field(
                format!("{path}.significance"),
                format!("expected {} values, got {}", order.len() - 1, significance.len()),
            ));
        }
        return Ok(CategoryInput::Chain {
            order,
            significance,
        });
    }
    let mut ratings = BTreeMap::new();
    for (key, v) in obj {
        let p = format!("{path}.{key}");
        let cat: Category = key.parse().map_err(|e: crate::registry::RegistryError| field(&p, e.to_string()))?;
        ratings.insert(cat, parse_rating(v, &p)?);
    }
    for cat in Category::ALL {
        if !ratings.contains_key(&cat) {
            return Err(field(format!("{path}.{cat}"), "missing category rating"));
        }
    }
    Ok(CategoryInput::Ratings(ratings))
}

fn parse_sub_attributes(
    category: Category,
    entries: &[RawAssessment],
    registry: &Registry,
    path: &str,
) -> Result<SubAttributeInput, SurveyError> {
    let members: Vec<&str> = registry.members(category).map(|c| c.code.as_str()).collect();
    for (i, e) in entries.iter().enumerate() {
        let p = format!("{path}[{i}].code");
        match registry.get(&e.code) {
            None => return Err(field(p, format!("unknown criterion code {}", e.code))),
            Some(spec) if spec.category != category => {
                return Err(field(p, format!("{} belongs to {}, not {category}", e.code, spec.category)))
            }
            _ => {}
        }
        if entries[..i].iter().any(|o| o.code == e.code) {
            return Err(field(p, format!("duplicate code {}", e.code)));
        }
    }
    if let Some(missing) = members.iter().find(|m| !entries.iter().any(|e| e.code == **m)) {
        return Err(field(path, format!("missing assessment for {missing}")));
    }

    let rated = entries.iter().filter(|e| e.rating.is_some()).count();
    let termed = entries.iter().filter(|e| e.term.is_some()).count();
    if rated > 0 && termed > 0 {
        return Err(field(path, "mixes ratings and linguistic terms; use one form per category"));
    }

    if rated > 0 {
        if rated != entries.len() {
            let i = entries.iter().position(|e| e.rating.is_none()).unwrap_or(0);
            return Err(field(format!("{path}[{i}].rating"), "missing rating"));
        }
        let ranked = entries.iter().filter(|e| e.rank.is_some()).count();
        if ranked != 0 && ranked != entries.len() {
            return Err(field(path, "give a rank on every entry or on none"));
        }
        let mut out = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            let rating = parse_rating(e.rating.as_ref().expect("checked"), &format!("{path}[{i}].rating"))?;
            out.push(RatedEntry {
                code: e.code.clone(),
                rating,
                rank: e.rank,
            });
        }
        if ranked > 0 {
            check_ranks(entries, path)?;
            out.sort_by_key(|e| e.rank);
            for pair in out.windows(2) {
                if pair[0].rating < pair[1].rating {
                    return Err(field(
                        path,
                        format!(
                            "{} is ranked above {} but rated lower ({} < {})",
                            pair[0].code, pair[1].code, pair[0].rating, pair[1].rating
                        ),
                    ));
                }
            }
        } else {
            out.sort_by_key(|e| registry.index_of(&e.code));
        }
        return Ok(SubAttributeInput::Ratings(out));
    }

    check_ranks(entries, path)?;
    let mut out: Vec<RankedEntry> = entries
        .iter()
        .map(|e| RankedEntry {
            code: e.code.clone(),
            rank: e.rank.expect("checked"),
            term: e.term.clone(),
        })
        .collect();
    out.sort_by_key(|e| e.rank);
    let last = out.len() - 1;
    for (k, e) in out.iter().enumerate() {
        let i = entries.iter().position(|r| r.code == e.code).expect("present");
        match (&e.term, k == last) {
            (None, false) => {
                return Err(field(
                    format!("{path}[{i}].term"),
                    format!("missing linguistic term for {} (rank {})", e.code, e.rank),
                ))
            }
            (Some(_), true) => {
                return Err(field(
                    format!("{path}[{i}].term"),
                    "the last-ranked entry has no successor and takes no term",
                ))
            }
            _ => {}
        }
    }
    Ok(SubAttributeInput::Linguistic(out))
}

fn check_ranks(entries: &[RawAssessment], path: &str) -> Result<(), SurveyError> {
    let n = entries.len() as u32;
    for (i, e) in entries.iter().enumerate() {
        let p = format!("{path}[{i}].rank");
        let Some(rank) = e.rank else {
            return Err(field(p, "missing rank"));
        };
        if rank < 1 || rank > n {
            return Err(field(p, format!("rank {rank} outside 1-{n}")));
        }
        if entries[..i].iter().any(|o| o.rank == Some(rank)) {
            return Err(field(p, format!("duplicate rank {rank}")));
        }
    }
    Ok(())
}

pub fn parse_surveys(text: &str, registry: &Registry) -> Result<Vec<ExpertSurvey>, SurveyError> {
    let raw: RawDocument =
        serde_json::from_str(text).map_err(|e| SurveyError::Syntax(e.to_string()))?;
    if raw.experts.is_empty() {
        return Err(SurveyError::NoExperts);
    }
    let mut surveys: Vec<ExpertSurvey> = Vec::with_capacity(raw.experts.len());
    for (x, expert) in raw.experts.iter().enumerate() {
        let base = format!("experts[{x}]");
        if expert.id.trim().is_empty() {
            return Err(field(format!("{base}.id"), "empty expert id"));
        }
        if surveys.iter().any(|s| s.id == expert.id) {
            return Err(field(format!("{base}.id"), format!("duplicate expert id {}", expert.id)));
        }
        let categories = parse_categories(&expert.categories, &format!("{base}.categories"))?;
        let mut sub_attributes = BTreeMap::new();
        for (key, entries) in &expert.sub_attributes {
            let p = format!("{base}.sub_attributes.{key}");
            let cat: Category = key.parse().map_err(|e: crate::registry::RegistryError| field(&p, e.to_string()))?;
            sub_attributes.insert(cat, parse_sub_attributes(cat, entries, registry, &p)?);
        }
        for cat in Category::ALL {
            if registry.members(cat).next().is_some() && !sub_attributes.contains_key(&cat) {
                return Err(field(format!("{base}.sub_attributes.{cat}"), "missing category"));
            }
        }
        surveys.push(ExpertSurvey {
            id: expert.id.clone(),
            categories,
            sub_attributes,
        });
    }
    Ok(surveys)
}

pub fn load_surveys(path: &Path, registry: &Registry) -> Result<Vec<ExpertSurvey>, SurveyError> {
    let text = std::fs::read_to_string(path).map_err(|e| SurveyError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_surveys(&text, registry)
}
