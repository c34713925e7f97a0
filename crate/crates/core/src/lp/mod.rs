//! Dense linear programming for small problems.
//!
//! Programs have the form `min/max c·x` subject to `A x = b`, `G x <= h` and
//! `x >= 0`. [`solve_min`] and [`solve_max`] run a two-phase tableau simplex
//! with Bland's rule; [`vertex_oracle`] enumerates basic feasible solutions
//! and serves as an independent check on the simplex.

mod simplex;
mod vertex;

pub use simplex::{solve_max, solve_min};
pub use vertex::{vertex_oracle, MAX_BASES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries smaller than this are never used as pivots.
pub const PIVOT_TOLERANCE: f64 = 1e-10;
/// Phase-one optimum above this value means the program is infeasible.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    le_rows: Vec<Vec<f64>>,
    le_rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Result<Self> {
        if objective.is_empty() {
            return Err(Error::MalformedProgram("objective has no variables".into()));
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedProgram("objective is not finite".into()));
        }
        Ok(Self {
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
        })
    }

    fn check_row(&self, row: &[f64], rhs: f64) -> Result<()> {
        if row.len() != self.num_vars() {
            return Err(Error::MalformedProgram(format!(
                "row has {} entries, objective has {}",
                row.len(),
                self.num_vars()
            )));
        }
        if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedProgram("row is not finite".into()));
        }
        Ok(())
    }

    /// Adds `row · x = rhs`.
    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(())
    }

    /// Adds `row · x <= rhs`.
    pub fn add_inequality(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn num_equalities(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.le_rows.len()
    }

    pub fn equalities(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.eq_rows
            .iter()
            .map(Vec::as_slice)
            .zip(self.eq_rhs.iter().copied())
    }

    pub fn inequalities(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.le_rows
            .iter()
            .map(Vec::as_slice)
            .zip(self.le_rhs.iter().copied())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest constraint violation at `x`, including negativity.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .equalities()
            .map(|(row, rhs)| (dot(row, x) - rhs).abs());
        let le = self
            .inequalities()
            .map(|(row, rhs)| (dot(row, x) - rhs).max(0.0));
        let neg = x.iter().map(|v| (-v).max(0.0));
        eq.chain(le).chain(neg).fold(0.0, f64::max)
    }

    /// Equality-form data with one slack column per inequality:
    /// `[A 0; G I] (x, s) = (b, h)`.
    pub(crate) fn standard_form(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.num_vars();
        let slacks = self.num_inequalities();
        let width = n + slacks;
        let mut rows = Vec::with_capacity(self.num_equalities() + slacks);
        let mut rhs = Vec::with_capacity(rows.capacity());
        for (row, b) in self.equalities() {
            let mut r = row.to_vec();
            r.resize(width, 0.0);
            rows.push(r);
            rhs.push(b);
        }
        for (k, (row, h)) in self.inequalities().enumerate() {
            let mut r = row.to_vec();
            r.resize(width, 0.0);
            r[n + k] = 1.0;
            rows.push(r);
            rhs.push(h);
        }
        (rows, rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { value: f64, witness: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&[f64]> {
        match self {
            LpSolution::Optimal { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
