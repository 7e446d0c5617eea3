//! Site table ingestion, binary coercion and decision-matrix normalization.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{Direction, Registry, ValueKind};

const META_COLUMNS: [&str; 5] = ["site_id", "name", "state", "lat", "lon"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("site {site}, criterion {code}: binary criterion needs true/false, got {got}")]
    NotBoolean {
        site: String,
        code: String,
        got: String,
    },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("duplicate column {0}")]
    DuplicateColumn(String),
    #[error("row {row}: duplicate site id {site}")]
    DuplicateSite { row: usize, site: String },
    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("malformed site table: {0}")]
    Csv(String),
    #[error("decision matrix has no sites")]
    Empty,
    #[error("vector normalization needs nonnegative values; column {code} has {value}")]
    NegativeForVector { code: String, value: f64 },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// A raw cell value as read from the site table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawValue {
    Number(f64),
    Bool(bool),
}

pub fn coerce_binary(value: RawValue, site: &str, code: &str) -> Result<f64, DataError> {
    match value {
        RawValue::Bool(true) => Ok(1.0),
        RawValue::Bool(false) => Ok(0.0),
        RawValue::Number(x) => Err(DataError::NotBoolean {
            site: site.to_string(),
            code: code.to_string(),
            got: x.to_string(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteMeta {
    pub site_id: String,
    pub name: String,
    pub state: String,
    pub lat: f64,
    pub lon: f64,
}

/// Sites x criteria grid. Rows follow file order, columns registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix {
    sites: Vec<SiteMeta>,
    codes: Vec<String>,
    values: Vec<Vec<f64>>,
    normalized: bool,
}

impl DecisionMatrix {
    /// Builds a matrix from already-numeric rows. Marked normalized only if
    /// `normalized` is set and every value lies in `[0, 1]`.
    pub fn from_rows(
        sites: Vec<SiteMeta>,
        codes: Vec<String>,
        values: Vec<Vec<f64>>,
        normalized: bool,
    ) -> Result<Self, DataError> {
        if sites.len() != values.len() {
            return Err(DataError::Csv(format!(
                "{} sites but {} value rows",
                sites.len(),
                values.len()
            )));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != codes.len() {
                return Err(DataError::Cell {
                    row: i + 1,
                    column: "*".into(),
                    message: format!("expected {} values, got {}", codes.len(), row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                let bad = !v.is_finite() || (normalized && !(0.0..=1.0).contains(&v));
                if bad {
                    return Err(DataError::Cell {
                        row: i + 1,
                        column: codes[j].clone(),
                        message: format!("value {v} out of range"),
                    });
                }
            }
        }
        Ok(DecisionMatrix {
            sites,
            codes,
            values,
            normalized,
        })
    }

    pub fn sites(&self) -> &[SiteMeta] {
        &self.sites
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_criteria(&self) -> usize {
        self.codes.len()
    }

    /// Applies `f` to every value of column `j` (raw matrices only).
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> DecisionMatrix {
        let mut out = self.clone();
        for row in &mut out.values {
            row[j] = f(row[j]);
        }
        out
    }
}

fn parse_bool(text: &str) -> Option<bool> {
    if text.eq_ignore_ascii_case("true") {
        Some(true)
    } else if text.eq_ignore_ascii_case("false") {
        Some(false)
    } else {
        None
    }
}

fn parse_number(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a site table (`site_id,name,state,lat,lon,<criterion codes>`).
pub fn load_sites<R: Read>(reader: R, registry: &Registry) -> Result<DecisionMatrix, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let header: Vec<&str> = headers.iter().collect();
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(DataError::DuplicateColumn(h.to_string()));
        }
        if !META_COLUMNS.contains(h) && registry.get(h).is_none() {
            return Err(DataError::UnknownColumn(h.to_string()));
        }
    }
    let locate = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let meta_idx: Vec<usize> = META_COLUMNS.iter().map(|c| locate(c)).collect::<Result<_, _>>()?;
    let crit_idx: Vec<usize> = registry.codes().map(locate).collect::<Result<_, _>>()?;

    let mut sites: Vec<SiteMeta> = Vec::new();
    let mut values = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // header is line 1
        let row = r + 2;
        let record = record.map_err(|e| DataError::Csv(format!("row {row}: {e}")))?;
        let cell = |col: usize, name: &str| -> Result<&str, DataError> {
            match record.get(col) {
                Some(t) if !t.is_empty() => Ok(t),
                _ => Err(DataError::Cell {
                    row,
                    column: name.to_string(),
                    message: "missing value".into(),
                }),
            }
        };
        let coordinate = |col: usize, name: &str, limit: f64| -> Result<f64, DataError> {
            let text = cell(col, name)?;
            parse_number(text)
                .filter(|v| v.abs() <= limit)
                .ok_or_else(|| DataError::Cell {
                    row,
                    column: name.to_string(),
                    message: format!("invalid coordinate {text:?}"),
                })
        };
        let site_id = cell(meta_idx[0], "site_id")?.to_string();
        if sites.iter().any(|s| s.site_id == site_id) {
            return Err(DataError::DuplicateSite { row, site: site_id });
        }
        let meta = SiteMeta {
            name: cell(meta_idx[1], "name")?.to_string(),
            state: cell(meta_idx[2], "state")?.to_string(),
            lat: coordinate(meta_idx[3], "lat", 90.0)?,
            lon: coordinate(meta_idx[4], "lon", 180.0)?,
            site_id,
        };
        let mut row_values = Vec::with_capacity(crit_idx.len());
        for (spec, &col) in registry.criteria().iter().zip(&crit_idx) {
            let text = cell(col, &spec.code)?;
            let value = match spec.kind {
                ValueKind::Binary => {
                    let raw = match parse_bool(text) {
                        Some(b) => RawValue::Bool(b),
                        None => match parse_number(text) {
                            Some(x) => RawValue::Number(x),
                            None => {
                                return Err(DataError::Cell {
                                    row,
                                    column: spec.code.clone(),
                                    message: format!("expected true/false, got {text:?}"),
                                })
                            }
                        },
                    };
                    coerce_binary(raw, &meta.site_id, &spec.code).map_err(|e| DataError::Cell {
                        row,
                        column: spec.code.clone(),
                        message: e.to_string(),
                    })?
                }
                ValueKind::Numeric => parse_number(text).ok_or_else(|| DataError::Cell {
                    row,
                    column: spec.code.clone(),
                    message: format!("expected a number, got {text:?}"),
                })?,
            };
            row_values.push(value);
        }
        sites.push(meta);
        values.push(row_values);
    }
    let codes = registry.codes().map(str::to_string).collect();
    DecisionMatrix::from_rows(sites, codes, values, false)
}

pub fn load_sites_file(path: &Path, registry: &Registry) -> Result<DecisionMatrix, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    load_sites(file, registry)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    /// `(x - min) / (max - min)`, reversed for cost criteria.
    #[default]
    MinMax,
    /// `x / ||x||`, or `1 - x / ||x||` for cost criteria.
    Vector,
}

/// Degenerate (constant or all-zero) columns map to this value.
pub const DEGENERATE_VALUE: f64 = 0.5;

/// Min-max rescaling shared with display normalization of scores.
pub fn min_max(values: &[f64], direction: Direction) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return vec![DEGENERATE_VALUE; values.len()];
    }
    values
        .iter()
        .map(|&x| {
            let v = match direction {
                Direction::Benefit => (x - lo) / range,
                Direction::Cost => (hi - x) / range,
            };
            v.clamp(0.0, 1.0)
        })
        .collect()
}

fn vector_norm(values: &[f64], direction: Direction) -> Vec<f64> {
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return vec![DEGENERATE_VALUE; values.len()];
    }
    values
        .iter()
        .map(|&x| {
            let v = x / norm;
            match direction {
                Direction::Benefit => v,
                Direction::Cost => 1.0 - v,
            }
            .clamp(0.0, 1.0)
        })
        .collect()
}

pub fn normalize(
    matrix: &DecisionMatrix,
    registry: &Registry,
    method: NormalizationMethod,
) -> Result<DecisionMatrix, DataError> {
    if matrix.values.is_empty() {
        return Err(DataError::Empty);
    }
    let mut out = matrix.values.clone();
    for (j, code) in matrix.codes.iter().enumerate() {
        let spec = registry
            .get(code)
            .ok_or_else(|| DataError::UnknownColumn(code.clone()))?;
        let column = matrix.column(j);
        let normalized = match method {
            NormalizationMethod::MinMax => min_max(&column, spec.direction),
            NormalizationMethod::Vector => {
                if let Some(&v) = column.iter().find(|v| **v < 0.0) {
                    return Err(DataError::NegativeForVector {
                        code: code.clone(),
                        value: v,
                    });
                }
                vector_norm(&column, spec.direction)
            }
        };
        for (row, v) in out.iter_mut().zip(normalized) {
            row[j] = v;
        }
    }
    Ok(DecisionMatrix {
        sites: matrix.sites.clone(),
        codes: matrix.codes.clone(),
        values: out,
        normalized: true,
    })
}
