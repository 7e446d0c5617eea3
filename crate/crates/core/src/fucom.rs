//! Crisp FUCOM and fuzzy F-FUCOM weight models.
//!
//! A [`ComparativeChain`] lists criteria from most to least significant
//! together with the comparative significance of each criterion over the next
//! one. The models minimize the consistency deviation `chi` subject to
//!
//! * `|w_k - phi_k * w_{k+1}| <= chi` for adjacent criteria,
//! * `|w_k - phi_k * phi_{k+1} * w_{k+2}| <= chi` for the transitivity pairs,
//! * weights summing to one and nonnegative.
//!
//! In the fuzzy model every weight is a TFN, deviations are bounded
//! componentwise, `l <= m <= u` holds per weight, the GMIR values sum to one,
//! and ties in `chi` are broken by minimizing the total spread `sum(u - l)`.
//! Each absolute value is split into two linear rows and the program is solved
//! exactly with [`crate::lp`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::Tfn;
use crate::lp::{LinearProgram, LpError, Relation};

/// Post-hoc tolerance for re-checking every model row on a returned solution.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FucomError {
    #[error("no criteria given")]
    Empty,
    #[error("priority for {code} must be positive and finite, got {value}")]
    NonPositivePriority { code: String, value: f64 },
    #[error("duplicate criterion code {0}")]
    DuplicateCode(String),
    #[error("expected {expected} significance values for {criteria} criteria, got {got}")]
    ChainLength {
        criteria: usize,
        expected: usize,
        got: usize,
    },
    #[error("significance of {more} over {less} must be at least 1, got {value}")]
    SignificanceBelowOne {
        more: String,
        less: String,
        value: f64,
    },
    #[error("solver failed: {source}\n--- model ---\n{model}")]
    Solver {
        #[source]
        source: LpError,
        model: String,
    },
    #[error("solution violates model row {row} by {violation:e}\n--- model ---\n{model}")]
    PostCheck {
        row: String,
        violation: f64,
        model: String,
    },
    #[error("negative consistency deviation {0}")]
    NegativeChi(f64),
    #[error("weights defuzzify to an all-zero total")]
    DegenerateWeights,
    #[error("{0}")]
    WrongKind(&'static str),
}

/// Comparative significances along a chain, crisp or fuzzy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Crisp(Vec<f64>),
    Fuzzy(Vec<Tfn>),
}

impl Significance {
    pub fn len(&self) -> usize {
        match self {
            Significance::Crisp(v) => v.len(),
            Significance::Fuzzy(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Criteria ordered from most to least significant with the significance of
/// each over its successor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparativeChain {
    order: Vec<String>,
    significance: Significance,
    /// Raw priorities in chain order when the chain was built from them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    priorities: Vec<f64>,
}

fn check_codes(order: &[String]) -> Result<(), FucomError> {
    if order.is_empty() {
        return Err(FucomError::Empty);
    }
    for (i, code) in order.iter().enumerate() {
        if order[..i].contains(code) {
            return Err(FucomError::DuplicateCode(code.clone()));
        }
    }
    Ok(())
}

fn check_length(order: &[String], got: usize) -> Result<(), FucomError> {
    let expected = order.len() - 1;
    if got != expected {
        return Err(FucomError::ChainLength {
            criteria: order.len(),
            expected,
            got,
        });
    }
    Ok(())
}

impl ComparativeChain {
    pub fn crisp(order: Vec<String>, phi: Vec<f64>) -> Result<Self, FucomError> {
        check_codes(&order)?;
        check_length(&order, phi.len())?;
        for (k, &p) in phi.iter().enumerate() {
            if !(p.is_finite() && p >= 1.0) {
                return Err(FucomError::SignificanceBelowOne {
                    more: order[k].clone(),
                    less: order[k + 1].clone(),
                    value: p,
                });
            }
        }
        Ok(ComparativeChain {
            order,
            significance: Significance::Crisp(phi),
            priorities: Vec::new(),
        })
    }

    pub fn fuzzy(order: Vec<String>, phi: Vec<Tfn>) -> Result<Self, FucomError> {
        check_codes(&order)?;
        check_length(&order, phi.len())?;
        for (k, p) in phi.iter().enumerate() {
            if p.gmir() < 1.0 {
                return Err(FucomError::SignificanceBelowOne {
                    more: order[k].clone(),
                    less: order[k + 1].clone(),
                    value: p.gmir(),
                });
            }
        }
        Ok(ComparativeChain {
            order,
            significance: Significance::Fuzzy(phi),
            priorities: Vec::new(),
        })
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn significance(&self) -> &Significance {
        &self.significance
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Crisp significances lifted to degenerate fuzzy numbers.
    pub fn to_fuzzy(&self) -> ComparativeChain {
        match &self.significance {
            Significance::Fuzzy(_) => self.clone(),
            Significance::Crisp(phi) => ComparativeChain {
                order: self.order.clone(),
                significance: Significance::Fuzzy(
                    phi.iter()
                        .map(|&p| Tfn::crisp(p).expect("validated significance"))
                        .collect(),
                ),
                priorities: self.priorities.clone(),
            },
        }
    }
}

/// Sorts criteria by descending priority (declared order on ties) and sets
/// each significance to the ratio of consecutive priorities.
pub fn chain_from_priorities(
    codes: &[String],
    priorities: &[f64],
) -> Result<ComparativeChain, FucomError> {
    if codes.is_empty() {
        return Err(FucomError::Empty);
    }
    if codes.len() != priorities.len() {
        return Err(FucomError::ChainLength {
            criteria: codes.len(),
            expected: codes.len(),
            got: priorities.len(),
        });
    }
    for (code, &p) in codes.iter().zip(priorities) {
        if !(p.is_finite() && p > 0.0) {
            return Err(FucomError::NonPositivePriority {
                code: code.clone(),
                value: p,
            });
        }
    }
    let mut idx: Vec<usize> = (0..codes.len()).collect();
    idx.sort_by(|&a, &b| priorities[b].total_cmp(&priorities[a]));
    let order: Vec<String> = idx.iter().map(|&i| codes[i].clone()).collect();
    let sorted: Vec<f64> = idx.iter().map(|&i| priorities[i]).collect();
    let phi = sorted.windows(2).map(|w| w[0] / w[1]).collect();
    let mut chain = ComparativeChain::crisp(order, phi)?;
    chain.priorities = sorted;
    Ok(chain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Crisp,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyThresholds {
    /// Crisp models count as fully consistent when `chi <= crisp`.
    pub crisp: f64,
    /// Fuzzy models are acceptable when `chi < fuzzy`.
    pub fuzzy: f64,
}

impl Default for ConsistencyThresholds {
    fn default() -> Self {
        ConsistencyThresholds {
            crisp: 1e-6,
            fuzzy: 0.10,
        }
    }
}

pub fn check_consistency(chi: f64, mode: Mode) -> Result<bool, FucomError> {
    check_consistency_with(chi, mode, &ConsistencyThresholds::default())
}

pub fn check_consistency_with(
    chi: f64,
    mode: Mode,
    thresholds: &ConsistencyThresholds,
) -> Result<bool, FucomError> {
    if chi.is_nan() || chi < 0.0 {
        return Err(FucomError::NegativeChi(chi));
    }
    Ok(match mode {
        Mode::Crisp => chi <= thresholds.crisp,
        Mode::Fuzzy => chi < thresholds.fuzzy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    Crisp(Vec<f64>),
    Fuzzy(Vec<Tfn>),
}

/// Optimal weights for a chain, listed in chain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSolution {
    pub codes: Vec<String>,
    pub weights: Weights,
    pub chi: f64,
    /// Which model produced `chi`; selects the consistency threshold.
    pub mode: Mode,
    pub consistent: bool,
}

impl WeightSolution {
    pub fn crisp_weights(&self) -> Option<&[f64]> {
        match &self.weights {
            Weights::Crisp(w) => Some(w),
            Weights::Fuzzy(_) => None,
        }
    }

    pub fn fuzzy_weights(&self) -> Option<&[Tfn]> {
        match &self.weights {
            Weights::Fuzzy(w) => Some(w),
            Weights::Crisp(_) => None,
        }
    }

    /// Crisp weight of `code`, via GMIR for fuzzy solutions.
    pub fn weight_of(&self, code: &str) -> Option<f64> {
        let j = self.codes.iter().position(|c| c == code)?;
        Some(match &self.weights {
            Weights::Crisp(w) => w[j],
            Weights::Fuzzy(w) => w[j].gmir(),
        })
    }
}

/// Variable layout of a built model.
struct Model {
    lp: LinearProgram,
    /// `vars[j][c]`: LP column of component `c` of criterion `j`.
    vars: Vec<Vec<usize>>,
    chi: usize,
}

const COMPONENT_NAMES: [&str; 3] = ["l", "m", "u"];

fn build_model(chain: &ComparativeChain) -> Model {
    let (components, title) = match chain.significance {
        Significance::Crisp(_) => (1, "FUCOM"),
        Significance::Fuzzy(_) => (3, "F-FUCOM"),
    };
    let phi = |k: usize, c: usize| -> f64 {
        match &chain.significance {
            Significance::Crisp(v) => v[k],
            Significance::Fuzzy(v) => v[k].components()[c],
        }
    };
    let mut lp = LinearProgram::new(format!("{title} model over {}", chain.order.join(" > ")));
    let vars: Vec<Vec<usize>> = chain
        .order
        .iter()
        .map(|code| {
            (0..components)
                .map(|c| {
                    if components == 1 {
                        lp.add_var(format!("w_{code}"))
                    } else {
                        lp.add_var(format!("w_{code}_{}", COMPONENT_NAMES[c]))
                    }
                })
                .collect()
        })
        .collect();
    let chi = lp.add_var("chi");
    let n = chain.order.len();
    let suffix = |c: usize| {
        if components == 1 {
            String::new()
        } else {
            format!("_{}", COMPONENT_NAMES[c])
        }
    };

    let deviation = |lp: &mut LinearProgram, name: String, a: usize, b: usize, factor: f64| {
        lp.add_constraint(
            format!("{name}_pos"),
            vec![(a, 1.0), (b, -factor), (chi, -1.0)],
            Relation::Le,
            0.0,
        );
        lp.add_constraint(
            format!("{name}_neg"),
            vec![(a, -1.0), (b, factor), (chi, -1.0)],
            Relation::Le,
            0.0,
        );
    };
    for k in 0..n.saturating_sub(1) {
        for c in 0..components {
            deviation(
                &mut lp,
                format!("adj_{}_{}{}", chain.order[k], chain.order[k + 1], suffix(c)),
                vars[k][c],
                vars[k + 1][c],
                phi(k, c),
            );
        }
    }
    for k in 0..n.saturating_sub(2) {
        for c in 0..components {
            deviation(
                &mut lp,
                format!("trans_{}_{}{}", chain.order[k], chain.order[k + 2], suffix(c)),
                vars[k][c],
                vars[k + 2][c],
                phi(k, c) * phi(k + 1, c),
            );
        }
    }
    if components == 3 {
        for (j, v) in vars.iter().enumerate() {
            let code = &chain.order[j];
            lp.add_constraint(
                format!("order_{code}_lm"),
                vec![(v[0], 1.0), (v[1], -1.0)],
                Relation::Le,
                0.0,
            );
            lp.add_constraint(
                format!("order_{code}_mu"),
                vec![(v[1], 1.0), (v[2], -1.0)],
                Relation::Le,
                0.0,
            );
        }
        let gmir_terms = vars
            .iter()
            .flat_map(|v| [(v[0], 1.0 / 6.0), (v[1], 4.0 / 6.0), (v[2], 1.0 / 6.0)])
            .collect();
        lp.add_constraint("sum_gmir", gmir_terms, Relation::Eq, 1.0);
        lp.push_objective("chi", vec![(chi, 1.0)]);
        let spread = vars.iter().flat_map(|v| [(v[2], 1.0), (v[0], -1.0)]).collect();
        lp.push_objective("spread", spread);
    } else {
        let sum_terms = vars.iter().map(|v| (v[0], 1.0)).collect();
        lp.add_constraint("sum", sum_terms, Relation::Eq, 1.0);
        lp.push_objective("chi", vec![(chi, 1.0)]);
    }
    Model { lp, vars, chi }
}

/// Plain-text LP listing of the model a chain builds.
pub fn model_dump(chain: &ComparativeChain) -> String {
    build_model(chain).lp.dump()
}

fn solve_model(chain: &ComparativeChain) -> Result<(Model, Vec<f64>), FucomError> {
    let model = build_model(chain);
    let solution = model.lp.solve().map_err(|source| FucomError::Solver {
        source,
        model: model.lp.dump(),
    })?;
    Ok((model, solution.values))
}

/// Largest deviation of any adjacent or transitivity row at the given weights.
fn max_deviation(model: &Model, x: &[f64]) -> f64 {
    model
        .lp
        .constraints()
        .iter()
        .filter(|c| c.name.starts_with("adj_") || c.name.starts_with("trans_"))
        .map(|c| {
            // a - f b - chi: evaluate without the chi term
            c.terms
                .iter()
                .filter(|&&(j, _)| j != model.chi)
                .map(|&(j, a)| a * x[j])
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn post_check(model: &Model, x: &[f64]) -> Result<(), FucomError> {
    let worst = model
        .lp
        .constraints()
        .iter()
        .map(|c| (c, c.violation(x)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((row, violation)) = worst {
        if violation > CONSTRAINT_TOLERANCE {
            return Err(FucomError::PostCheck {
                row: row.name.clone(),
                violation,
                model: model.lp.dump(),
            });
        }
    }
    if let Some(v) = x.iter().find(|v| **v < 0.0) {
        return Err(FucomError::PostCheck {
            row: "nonnegativity".into(),
            violation: -v,
            model: model.lp.dump(),
        });
    }
    Ok(())
}

pub fn solve_fucom_crisp(chain: &ComparativeChain) -> Result<WeightSolution, FucomError> {
    solve_fucom_crisp_with(chain, &ConsistencyThresholds::default())
}

pub fn solve_fucom_crisp_with(
    chain: &ComparativeChain,
    thresholds: &ConsistencyThresholds,
) -> Result<WeightSolution, FucomError> {
    if !matches!(chain.significance, Significance::Crisp(_)) {
        return Err(FucomError::WrongKind("crisp FUCOM needs crisp significances"));
    }
    let (model, mut x) = solve_model(chain)?;
    let total: f64 = model.vars.iter().map(|v| x[v[0]]).sum();
    for v in &model.vars {
        x[v[0]] /= total;
    }
    let chi = max_deviation(&model, &x);
    x[model.chi] = chi;
    post_check(&model, &x)?;
    let weights = model.vars.iter().map(|v| x[v[0]]).collect();
    Ok(WeightSolution {
        codes: chain.order.clone(),
        weights: Weights::Crisp(weights),
        chi,
        mode: Mode::Crisp,
        consistent: check_consistency_with(chi, Mode::Crisp, thresholds)?,
    })
}

pub fn solve_ffucom(chain: &ComparativeChain) -> Result<WeightSolution, FucomError> {
    solve_ffucom_with(chain, &ConsistencyThresholds::default())
}

pub fn solve_ffucom_with(
    chain: &ComparativeChain,
    thresholds: &ConsistencyThresholds,
) -> Result<WeightSolution, FucomError> {
    let chain = chain.to_fuzzy();
    let (model, mut x) = solve_model(&chain)?;
    let total: f64 = model
        .vars
        .iter()
        .map(|v| (x[v[0]] + 4.0 * x[v[1]] + x[v[2]]) / 6.0)
        .sum();
    for v in &model.vars {
        for &j in v {
            x[j] /= total;
        }
        // absorb round-off so the ordering rows hold exactly
        x[v[1]] = x[v[1]].max(x[v[0]]);
        x[v[2]] = x[v[2]].max(x[v[1]]);
    }
    let chi = max_deviation(&model, &x);
    x[model.chi] = chi;
    post_check(&model, &x)?;
    let weights = model
        .vars
        .iter()
        .map(|v| {
            Tfn::new(x[v[0]], x[v[1]], x[v[2]]).map_err(|e| FucomError::PostCheck {
                row: format!("fuzzy weight validity: {e}"),
                violation: 0.0,
                model: model.lp.dump(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WeightSolution {
        codes: chain.order.clone(),
        weights: Weights::Fuzzy(weights),
        chi,
        mode: Mode::Fuzzy,
        consistent: check_consistency_with(chi, Mode::Fuzzy, thresholds)?,
    })
}

/// Replaces each fuzzy weight by its GMIR value and renormalizes to sum 1.
pub fn defuzzify_weights(sol: &WeightSolution) -> Result<WeightSolution, FucomError> {
    let fuzzy = match &sol.weights {
        Weights::Crisp(_) => return Ok(sol.clone()),
        Weights::Fuzzy(w) => w,
    };
    let crisp: Vec<f64> = fuzzy.iter().map(Tfn::gmir).collect();
    let total: f64 = crisp.iter().sum();
    if !(total > 0.0) {
        return Err(FucomError::DegenerateWeights);
    }
    Ok(WeightSolution {
        codes: sol.codes.clone(),
        weights: Weights::Crisp(crisp.into_iter().map(|w| w / total).collect()),
        chi: sol.chi,
        mode: sol.mode,
        consistent: sol.consistent,
    })
}
