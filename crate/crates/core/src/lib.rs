//! Criteria weighting from expert surveys (crisp FUCOM for categories, fuzzy
//! F-FUCOM for sub-attributes) and weighted-sum suitability ranking of
//! candidate sites, with what-if weight overrides and rank-reversal reports.

pub mod commands;
pub mod data;
pub mod fucom;
pub mod fuzzy;
pub mod lp;
pub mod registry;
pub mod survey;
pub mod weights;
pub mod wsm;

/// Version tag carried by every emitted document.
pub const SCHEMA_VERSION: &str = "1";

pub use commands::{AppError, Dataset, RunConfig};
pub use data::{DecisionMatrix, NormalizationMethod, SiteMeta};
pub use fucom::{ComparativeChain, Mode, WeightSolution};
pub use fuzzy::{LinguisticScale, Tfn};
pub use registry::{Category, CriterionSpec, Registry};
pub use weights::{GlobalWeightTable, WeightDocument, WeightSet};
pub use wsm::{GroupMode, RankingDocument, WhatIfReport};
