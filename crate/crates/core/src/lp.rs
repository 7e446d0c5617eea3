//! Dense two-phase simplex for the small minimax programs built by the
//! weighting models.
//!
//! Every variable is nonnegative. Objectives are minimized lexicographically:
//! once an objective is optimal, every nonbasic column with a strictly
//! positive reduced cost is locked at zero, which confines later objectives
//! to the optimal face of the earlier ones.
//!
//! Pricing is Dantzig's (most negative reduced cost) and the ratio test
//! prefers the largest pivot among tied rows. After a long run of degenerate
//! pivots the solver falls back to Bland's rule, which cannot cycle. The
//! tableau is rebuilt from the original rows every few pivots to shed
//! round-off. All tie-breaks are by index, so solves are deterministic.

use std::fmt::Write as _;

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-11;
const LOCK_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-9;
/// Largest row or bound violation accepted in a returned solution.
const ACCEPT_EPS: f64 = 1e-7;
const MAX_ITERATIONS: usize = 100_000;
/// Pivots between rebuilds of the tableau from the original rows.
const REFACTOR_EVERY: usize = 25;
/// Ratios this close to the minimum count as tied in the ratio test.
const RATIO_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {residual:e})")]
    Infeasible { residual: f64 },
    #[error("objective {objective:?} is unbounded below")]
    Unbounded { objective: String },
    #[error("simplex did not converge within {limit} pivots")]
    IterationLimit { limit: usize },
    #[error("simplex lost accuracy: final point violates a row by {violation:e}")]
    Numerical { violation: f64 },
    #[error("basis became singular during refactorization")]
    SingularBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone)]
struct Objective {
    name: String,
    terms: Vec<(usize, f64)>,
}

/// A linear program over nonnegative variables with lexicographic objectives.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    title: String,
    vars: Vec<String>,
    objectives: Vec<Objective>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    /// Optimal value of each objective, in priority order.
    pub objective_values: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(title: impl Into<String>) -> Self {
        LinearProgram {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.vars.push(name.into());
        self.vars.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    /// Appends an objective with lower priority than those already present.
    pub fn push_objective(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>) {
        self.objectives.push(Objective {
            name: name.into(),
            terms,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_name(&self, j: usize) -> &str {
        &self.vars[j]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Largest violation of any row or nonnegativity bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let bounds = x.iter().map(|&v| (-v).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn objective_value(&self, index: usize, x: &[f64]) -> f64 {
        self.objectives[index].terms.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Plain-text listing in CPLEX LP syntax.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ {}", self.title);
        if self.objectives.len() > 1 {
            let _ = writeln!(out, "Minimize multi-objectives");
            let top = self.objectives.len();
            for (k, obj) in self.objectives.iter().enumerate() {
                let _ = writeln!(
                    out,
                    " {}: Priority={}{}",
                    obj.name,
                    top - k,
                    self.format_terms(&obj.terms)
                );
            }
        } else {
            let _ = writeln!(out, "Minimize");
            if let Some(obj) = self.objectives.first() {
                let _ = writeln!(out, " {}:{}", obj.name, self.format_terms(&obj.terms));
            }
        }
        let _ = writeln!(out, "Subject To");
        for c in &self.constraints {
            let _ = writeln!(
                out,
                " {}:{} {} {}",
                c.name,
                self.format_terms(&c.terms),
                c.relation.symbol(),
                c.rhs
            );
        }
        let _ = writeln!(out, "Bounds");
        for v in &self.vars {
            let _ = writeln!(out, " {v} >= 0");
        }
        let _ = writeln!(out, "End");
        out
    }

    fn format_terms(&self, terms: &[(usize, f64)]) -> String {
        let mut s = String::new();
        for &(j, a) in terms {
            let sign = if a < 0.0 { '-' } else { '+' };
            let _ = write!(s, " {sign} {} {}", a.abs(), self.vars[j]);
        }
        if terms.is_empty() {
            s.push_str(" 0");
        }
        s
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let mut tableau = Tableau::build(self);
        tableau.phase_one()?;
        for obj in &self.objectives {
            let mut cost = vec![0.0; tableau.cols];
            for &(j, c) in &obj.terms {
                cost[j] += c;
            }
            tableau.optimize(&cost).map_err(|e| match e {
                LpError::Unbounded { .. } => LpError::Unbounded {
                    objective: obj.name.clone(),
                },
                other => other,
            })?;
            tableau.lock_suboptimal_columns(&cost);
        }
        tableau.refactor()?;
        let values = tableau.primal(self.vars.len());
        let violation = self.max_violation(&values);
        if violation > ACCEPT_EPS {
            return Err(LpError::Numerical { violation });
        }
        let objective_values = (0..self.objectives.len())
            .map(|k| self.objective_value(k, &values))
            .collect();
        Ok(LpSolution {
            values,
            objective_values,
            pivots: tableau.pivots,
        })
    }
}

struct Tableau {
    /// Row-major `rows x (cols + 1)`; the last entry of each row is the rhs.
    a: Vec<Vec<f64>>,
    /// The rows as built, before any pivoting.
    original: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    artificial_start: usize,
    allowed: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.vars.len();
        let mut extra = 0;
        let mut artificials = 0;
        for c in &lp.constraints {
            let flipped = c.rhs < 0.0;
            match (c.relation, flipped) {
                (Relation::Eq, _) => artificials += 1,
                (Relation::Le, false) | (Relation::Ge, true) => extra += 1,
                (Relation::Ge, false) | (Relation::Le, true) => {
                    extra += 1;
                    artificials += 1;
                }
            }
        }
        let artificial_start = n + extra;
        let cols = artificial_start + artificials;
        let mut a = Vec::with_capacity(lp.constraints.len());
        let mut basis = Vec::with_capacity(lp.constraints.len());
        let mut next_extra = n;
        let mut next_art = artificial_start;
        for c in &lp.constraints {
            let mut row = vec![0.0; cols + 1];
            let sign = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            for &(j, coef) in &c.terms {
                row[j] += sign * coef;
            }
            row[cols] = sign * c.rhs;
            let relation = match (c.relation, sign < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            match relation {
                Relation::Le => {
                    row[next_extra] = 1.0;
                    basis.push(next_extra);
                    next_extra += 1;
                }
                Relation::Ge => {
                    row[next_extra] = -1.0;
                    next_extra += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            a.push(row);
        }
        Tableau {
            original: a.clone(),
            a,
            basis,
            cols,
            artificial_start,
            allowed: vec![true; cols],
            pivots: 0,
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i][self.cols]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, aij) in d.iter_mut().zip(&self.a[i][..self.cols]) {
                    *dj -= cb * aij;
                }
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rhs(i))
            .sum()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        self.a[row][col] = 1.0;
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<(), LpError> {
        let mut degenerate_run = 0;
        loop {
            if self.pivots >= MAX_ITERATIONS {
                return Err(LpError::IterationLimit {
                    limit: MAX_ITERATIONS,
                });
            }
            let bland = degenerate_run >= BLAND_AFTER;
            let d = self.reduced_costs(cost);
            let mut entering: Option<usize> = None;
            for j in 0..self.cols {
                if !self.allowed[j] || d[j] >= -COST_EPS || self.basis.contains(&j) {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if entering.is_none_or(|e| d[j] < d[e]) {
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            let ratio = |i: usize| self.rhs(i).max(0.0) / self.a[i][col];
            let candidates: Vec<usize> = (0..self.a.len()).filter(|&i| self.a[i][col] > PIVOT_EPS).collect();
            let Some(min_ratio) = candidates.iter().map(|&i| ratio(i)).min_by(f64::total_cmp) else {
                return Err(LpError::Unbounded {
                    objective: String::new(),
                });
            };
            let tol = RATIO_TOL * min_ratio.max(1.0);
            let tied = candidates.into_iter().filter(|&i| ratio(i) <= min_ratio + tol);
            // Bland keeps the smallest basic index; otherwise take the largest
            // pivot element among the tied rows for stability.
            let row = if bland {
                tied.min_by_key(|&i| self.basis[i])
            } else {
                tied.max_by(|&i, &k| {
                    self.a[i][col]
                        .total_cmp(&self.a[k][col])
                        .then_with(|| self.basis[k].cmp(&self.basis[i]))
                })
            }
            .expect("at least one candidate row");
            if min_ratio <= RATIO_TOL {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
            if self.pivots.is_multiple_of(REFACTOR_EVERY) {
                self.refactor()?;
            }
        }
    }

    /// Recomputes the tableau for the current basis directly from the
    /// original rows (Gauss-Jordan with partial pivoting), discarding the
    /// round-off accumulated by successive pivots.
    fn refactor(&mut self) -> Result<(), LpError> {
        let mut m = self.original.clone();
        let rows = m.len();
        let mut used = vec![false; rows];
        let mut basis = vec![usize::MAX; rows];
        let mut columns = self.basis.clone();
        columns.sort_unstable();
        for &col in &columns {
            let mut best: Option<(usize, f64)> = None;
            for (r, row) in m.iter().enumerate() {
                let v = row[col].abs();
                if !used[r] && best.is_none_or(|(_, b)| v > b) {
                    best = Some((r, v));
                }
            }
            let Some((r, _)) = best.filter(|&(_, v)| v > PIVOT_EPS) else {
                return Err(LpError::SingularBasis);
            };
            let p = m[r][col];
            for x in m[r].iter_mut() {
                *x /= p;
            }
            m[r][col] = 1.0;
            let pivot_row = m[r].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i != r && row[col] != 0.0 {
                    let f = row[col];
                    for (x, pv) in row.iter_mut().zip(&pivot_row) {
                        *x -= f * pv;
                    }
                    row[col] = 0.0;
                }
            }
            used[r] = true;
            basis[r] = col;
        }
        self.a = m;
        self.basis = basis;
        Ok(())
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        if self.artificial_start == self.cols {
            return Ok(());
        }
        let mut cost = vec![0.0; self.cols];
        for c in cost.iter_mut().skip(self.artificial_start) {
            *c = 1.0;
        }
        self.optimize(&cost)?;
        let residual = self.objective(&cost);
        if residual > FEAS_EPS {
            return Err(LpError::Infeasible { residual });
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are linearly dependent and get dropped.
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= self.artificial_start {
                let col = (0..self.artificial_start).find(|&j| self.a[i][j].abs() > 1e-9);
                match col {
                    Some(j) => self.pivot(i, j),
                    None => {
                        // The row's own artificial is the unit column of one
                        // original row, and that row takes part in the
                        // dependency, so it is the one to drop.
                        let art = self.basis[i];
                        let k = self
                            .original
                            .iter()
                            .position(|r| r[art] != 0.0)
                            .expect("artificial column belongs to a row");
                        self.original.remove(k);
                        self.a.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for allowed in self.allowed.iter_mut().skip(self.artificial_start) {
            *allowed = false;
        }
        Ok(())
    }

    fn lock_suboptimal_columns(&mut self, cost: &[f64]) {
        let d = self.reduced_costs(cost);
        for j in 0..self.cols {
            if !self.basis.contains(&j) && d[j] > LOCK_EPS {
                self.allowed[j] = false;
            }
        }
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        x
    }
}
