//! The attribute taxonomy: four categories and their 22 sub-attributes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("duplicate criterion code {0}")]
    DuplicateCode(String),
    #[error("registry is empty")]
    Empty,
    #[error("category {category} must have {expected} sub-attributes, found {found}")]
    CategorySize {
        category: Category,
        expected: usize,
        found: usize,
    },
    #[error("unknown category {0:?} (expected SP, FP, RHM or CSF)")]
    UnknownCategory(String),
    #[error("unknown criterion code {0}")]
    UnknownCode(String),
    #[error("cannot read registry: {0}")]
    Io(String),
    #[error("malformed registry document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    SP,
    FP,
    RHM,
    CSF,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::SP, Category::FP, Category::RHM, Category::CSF];

    pub fn code(self) -> &'static str {
        match self {
            Category::SP => "SP",
            Category::FP => "FP",
            Category::RHM => "RHM",
            Category::CSF => "CSF",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Category::SP => "State Policies",
            Category::FP => "Federal Policies",
            Category::RHM => "Risk & Hazard Metric",
            Category::CSF => "Connectivity & Spatial Factors",
        }
    }

    /// Number of sub-attributes the standard taxonomy assigns.
    pub fn standard_size(self) -> usize {
        match self {
            Category::SP => 6,
            Category::FP => 3,
            Category::RHM => 8,
            Category::CSF => 5,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Category {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SP" => Ok(Category::SP),
            "FP" => Ok(Category::FP),
            "RHM" => Ok(Category::RHM),
            "CSF" => Ok(Category::CSF),
            other => Err(RegistryError::UnknownCategory(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Numeric,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Larger raw values are better.
    Benefit,
    /// Larger raw values are worse.
    Cost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub code: String,
    pub category: Category,
    pub name: String,
    pub kind: ValueKind,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    criteria: Vec<CriterionSpec>,
}

impl Registry {
    /// Any nonempty set of uniquely coded criteria. Use
    /// [`Registry::check_standard_taxonomy`] to require the 6/3/8/5 split.
    pub fn new(criteria: Vec<CriterionSpec>) -> Result<Self, RegistryError> {
        if criteria.is_empty() {
            return Err(RegistryError::Empty);
        }
        for (i, c) in criteria.iter().enumerate() {
            if criteria[..i].iter().any(|o| o.code == c.code) {
                return Err(RegistryError::DuplicateCode(c.code.clone()));
            }
        }
        Ok(Registry { criteria })
    }

    pub fn check_standard_taxonomy(&self) -> Result<(), RegistryError> {
        for cat in Category::ALL {
            let found = self.members(cat).count();
            if found != cat.standard_size() {
                return Err(RegistryError::CategorySize {
                    category: cat,
                    expected: cat.standard_size(),
                    found,
                });
            }
        }
        Ok(())
    }

    /// Loads a registry document and requires the standard taxonomy.
    pub fn from_json_str(text: &str) -> Result<Self, RegistryError> {
        let reg: Registry =
            serde_json::from_str(text).map_err(|e| RegistryError::Parse(e.to_string()))?;
        let reg = Registry::new(reg.criteria)?;
        reg.check_standard_taxonomy()?;
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RegistryError::Io(format!("{}: {e}", path.display())))?;
        Registry::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("registry serializes");
        s.push('\n');
        s
    }

    pub fn criteria(&self) -> &[CriterionSpec] {
        &self.criteria
    }

    pub fn len(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.criteria.iter().map(|c| c.code.as_str())
    }

    pub fn get(&self, code: &str) -> Option<&CriterionSpec> {
        self.criteria.iter().find(|c| c.code == code)
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.criteria.iter().position(|c| c.code == code)
    }

    pub fn members(&self, category: Category) -> impl Iterator<Item = &CriterionSpec> {
        self.criteria.iter().filter(move |c| c.category == category)
    }

    /// The shipped registry. Directions and the names of sub-attributes not
    /// named in the source taxonomy are editable defaults (see `note`).
    pub fn standard() -> Self {
        use Category::*;
        use Direction::*;
        use ValueKind::*;
        const PLACEHOLDER: &str = "placeholder display name; edit to match the source taxonomy";
        let rows: [(&str, Category, &str, ValueKind, Direction, Option<&str>); 22] = [
            ("SP1", SP, "Nuclear Restrictions", Binary, Cost, None),
            ("SP2", SP, "Nuclear Inclusive Policies", Binary, Benefit, None),
            ("SP3", SP, "Energy Price", Numeric, Benefit, None),
            ("SP4", SP, "Market Regulation", Binary, Benefit, None),
            ("SP5", SP, "Clean Energy Standard", Binary, Benefit, Some(PLACEHOLDER)),
            ("SP6", SP, "Coal Retirement", Binary, Benefit, None),
            ("FP1", FP, "Net Electricity Imports", Numeric, Benefit, None),
            ("FP2", FP, "Hydrogen Demand", Numeric, Benefit, None),
            ("FP3", FP, "Federal Incentives", Binary, Benefit, None),
            ("RHM1", RHM, "Protected Lands", Binary, Cost, None),
            ("RHM2", RHM, "Open Water", Binary, Cost, Some(PLACEHOLDER)),
            ("RHM3", RHM, "Fault Lines", Binary, Cost, None),
            ("RHM4", RHM, "Landslide Hazard", Numeric, Cost, None),
            ("RHM5", RHM, "Wetlands", Binary, Cost, Some(PLACEHOLDER)),
            ("RHM6", RHM, "100-Year Flood", Binary, Cost, None),
            ("RHM7", RHM, "Seismic Hazard", Numeric, Cost, Some(PLACEHOLDER)),
            ("RHM8", RHM, "Slope", Numeric, Cost, Some(PLACEHOLDER)),
            ("CSF1", CSF, "Population", Numeric, Cost, None),
            ("CSF2", CSF, "Transportation", Numeric, Benefit, None),
            ("CSF3", CSF, "Operating Nuclear Facilities", Numeric, Benefit, None),
            ("CSF4", CSF, "Nuclear R&D", Numeric, Benefit, None),
            ("CSF5", CSF, "Substation", Numeric, Benefit, None),
        ];
        let criteria = rows
            .iter()
            .map(|&(code, category, name, kind, direction, note)| CriterionSpec {
                code: code.into(),
                category,
                name: name.into(),
                kind,
                direction,
                note: note.map(str::to_string),
            })
            .collect();
        Registry::new(criteria).expect("standard registry is valid")
    }
}
