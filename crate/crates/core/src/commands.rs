//! The shared pipeline behind the `weights`, `rank` and `whatif` commands and
//! the HTTP service, so every front end emits identical documents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{load_sites_file, normalize, DataError, DecisionMatrix, NormalizationMethod, SiteMeta};
use crate::fucom::{ConsistencyThresholds, FucomError};
use crate::fuzzy::{FuzzyError, LinguisticScale};
use crate::registry::{Category, Registry, RegistryError};
use crate::survey::{parse_surveys, SurveyError};
use crate::weights::{all_expert_weights, global_weights, GlobalWeightTable, WeightDocument, WeightError, WeightSet};
use crate::wsm::{ranking_document, whatif, GroupMode, RankError, RankingDocument, WhatIfReport};
use crate::SCHEMA_VERSION;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AppError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Input(_) => EXIT_INPUT,
            AppError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn fucom_is_internal(e: &FucomError) -> bool {
    matches!(
        e,
        FucomError::Solver { .. }
            | FucomError::PostCheck { .. }
            | FucomError::NegativeChi(_)
            | FucomError::DegenerateWeights
            | FucomError::WrongKind(_)
    )
}

impl From<WeightError> for AppError {
    fn from(e: WeightError) -> Self {
        match &e {
            WeightError::Solve { source, .. } if fucom_is_internal(source) => {
                AppError::Internal(e.to_string())
            }
            _ => AppError::Input(e.to_string()),
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for AppError {
            fn from(e: $t) -> Self {
                AppError::Input(e.to_string())
            }
        }
    )*};
}

input_error!(SurveyError, RegistryError, DataError, FuzzyError, RankError);

/// Paths and options for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub surveys: Option<PathBuf>,
    /// Built-in default scale when unset.
    pub scale: Option<PathBuf>,
    /// Built-in standard registry when unset.
    pub registry: Option<PathBuf>,
    pub sites: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub normalization: NormalizationMethod,
    pub group_mode: GroupMode,
    pub thresholds: ConsistencyThresholds,
    pub port: u16,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            surveys: None,
            scale: None,
            registry: None,
            sites: None,
            weights: None,
            output: None,
            normalization: NormalizationMethod::MinMax,
            group_mode: GroupMode::Overall,
            thresholds: ConsistencyThresholds::default(),
            port: 8080,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), AppError> {
        let t = &self.thresholds;
        if !(t.crisp > 0.0 && t.fuzzy > 0.0) {
            return Err(AppError::Input("consistency thresholds must be positive".into()));
        }
        if self.port == 0 {
            return Err(AppError::Input("port must be in 1-65535".into()));
        }
        for p in [&self.surveys, &self.scale, &self.registry, &self.sites, &self.weights, &self.output]
            .into_iter()
            .flatten()
        {
            if p.as_os_str().is_empty() {
                return Err(AppError::Input("empty path".into()));
            }
        }
        Ok(())
    }

    fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, AppError> {
        path.as_deref()
            .ok_or_else(|| AppError::Input(format!("missing required --{flag}")))
    }

    pub fn load_registry(&self) -> Result<Registry, AppError> {
        Ok(match &self.registry {
            Some(p) => Registry::load(p)?,
            None => Registry::standard(),
        })
    }

    pub fn load_scale(&self) -> Result<LinguisticScale, AppError> {
        Ok(match &self.scale {
            Some(p) => LinguisticScale::load(p)?,
            None => LinguisticScale::default_scale(),
        })
    }
}

fn read(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path)
        .map_err(|e| AppError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Surveys to aggregated weights.
pub fn compute_weights(
    surveys_text: &str,
    scale: &LinguisticScale,
    registry: &Registry,
    thresholds: &ConsistencyThresholds,
) -> Result<GlobalWeightTable, AppError> {
    let surveys = parse_surveys(surveys_text, registry)?;
    let sets = all_expert_weights(&surveys, scale, thresholds)?;
    Ok(global_weights(&sets, registry)?)
}

/// `weights`: the serialized weight document.
pub fn cmd_weights(config: &RunConfig) -> Result<String, AppError> {
    config.validate()?;
    let registry = config.load_registry()?;
    let scale = config.load_scale()?;
    let text = read(config.require(&config.surveys, "surveys")?)?;
    let table = compute_weights(&text, &scale, &registry, &config.thresholds)?;
    Ok(table.to_document().to_json_string())
}

/// Immutable inputs for ranking and what-if evaluation.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub registry: Registry,
    pub raw: DecisionMatrix,
    pub normalized: DecisionMatrix,
    pub weight_document: WeightDocument,
    pub weights: WeightSet,
    pub group_mode: GroupMode,
}

impl Dataset {
    pub fn new(
        registry: Registry,
        raw: DecisionMatrix,
        weight_document: WeightDocument,
        normalization: NormalizationMethod,
        group_mode: GroupMode,
    ) -> Result<Self, AppError> {
        let weights = weight_document.weight_set(&registry)?;
        let normalized = normalize(&raw, &registry, normalization)?;
        Ok(Dataset {
            registry,
            raw,
            normalized,
            weight_document,
            weights,
            group_mode,
        })
    }

    pub fn load(config: &RunConfig) -> Result<Self, AppError> {
        config.validate()?;
        let registry = config.load_registry()?;
        let raw = load_sites_file(config.require(&config.sites, "sites")?, &registry)?;
        let doc = WeightDocument::from_json_str(&read(config.require(&config.weights, "weights")?)?)?;
        Dataset::new(registry, raw, doc, config.normalization, config.group_mode)
    }

    pub fn ranking(&self, group: Option<Category>, mode: Option<GroupMode>) -> Result<RankingDocument, AppError> {
        Ok(ranking_document(
            &self.normalized,
            &self.weights,
            &self.registry,
            mode.unwrap_or(self.group_mode),
            group,
        )?)
    }

    /// The weight document as used for scoring: the loaded document with
    /// its global table renormalized.
    pub fn weights_document(&self) -> WeightDocument {
        WeightDocument {
            schema_version: SCHEMA_VERSION.into(),
            per_expert: self.weight_document.per_expert.clone(),
            global: self.weights.weights.clone(),
            category_totals: self.weights.category_totals(),
            chi: self.weight_document.chi.clone(),
        }
    }

    pub fn sites_document(&self) -> SitesDocument {
        SitesDocument {
            schema_version: SCHEMA_VERSION.into(),
            sites: self.raw.sites().to_vec(),
        }
    }

    pub fn whatif(&self, overrides: &BTreeMap<String, f64>) -> Result<WhatIfReport, AppError> {
        Ok(whatif(&self.weights, overrides, &self.normalized, &self.registry, self.group_mode)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitesDocument {
    pub schema_version: String,
    pub sites: Vec<SiteMeta>,
}

impl SitesDocument {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("site document serializes");
        s.push('\n');
        s
    }
}

/// `rank`: the serialized ranking document (optionally one group).
pub fn cmd_rank(config: &RunConfig, group: Option<Category>) -> Result<String, AppError> {
    Ok(Dataset::load(config)?.ranking(group, None)?.to_json_string())
}

/// Parses `CODE=W[,CODE=W...]`; repeated codes are rejected.
pub fn parse_overrides(spec: &str) -> Result<BTreeMap<String, f64>, AppError> {
    let mut out = BTreeMap::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (code, value) = part
            .split_once('=')
            .ok_or_else(|| AppError::Input(format!("invalid override {part:?}; expected CODE=WEIGHT")))?;
        let code = code.trim();
        if code.is_empty() {
            return Err(AppError::Input(format!("invalid override {part:?}; empty code")));
        }
        let weight: f64 = value
            .trim()
            .parse()
            .map_err(|_| AppError::Input(format!("invalid weight in override {part:?}")))?;
        if out.insert(code.to_string(), weight).is_some() {
            return Err(AppError::Input(format!("override for {code} given twice")));
        }
    }
    Ok(out)
}

/// `whatif`: the serialized what-if report.
pub fn cmd_whatif(config: &RunConfig, overrides: &BTreeMap<String, f64>) -> Result<String, AppError> {
    Ok(Dataset::load(config)?.whatif(overrides)?.to_json_string())
}
