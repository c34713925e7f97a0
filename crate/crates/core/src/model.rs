//! Observable data for a binary instrument Z, binary treatment X and binary
//! outcome Y.
//!
//! Every table in this module is indexed `[z][x][y]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eight cells indexed `[z][x][y]`.
pub type CellTable<T> = [[[T; 2]; 2]; 2];

/// Normalization tolerance for laws built by this crate.
pub const CONSTRUCTED_TOLERANCE: f64 = 1e-12;
/// Normalization tolerance for laws typed in by a user.
pub const USER_TOLERANCE: f64 = 1e-9;

/// Iterates the eight `(z, x, y)` cells in lexicographic order.
pub fn cells() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..2).flat_map(|z| (0..2).flat_map(move |x| (0..2).map(move |y| (z, x, y))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

/// Outcome of a validation pass. `ok` is true iff no finding is fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    ok: bool,
    findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn from_findings(findings: Vec<Finding>) -> Self {
        let ok = findings.iter().all(|f| f.severity != Severity::Fatal);
        Self { ok, findings }
    }

    pub fn is_ok(&self) -> bool {
        self.ok
    }

    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    pub fn messages(&self) -> impl Iterator<Item = &str> {
        self.findings.iter().map(|f| f.message.as_str())
    }

    fn summary(&self) -> String {
        self.messages().collect::<Vec<_>>().join("; ")
    }
}

/// Raw cell counts `n(z, x, y)`. Both instrument arms are non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CellTable<u64>", into = "CellTable<u64>")]
pub struct TrialCounts {
    cells: CellTable<u64>,
}

impl TryFrom<CellTable<u64>> for TrialCounts {
    type Error = Error;

    fn try_from(cells: CellTable<u64>) -> Result<Self> {
        Self::new(cells)
    }
}

impl From<TrialCounts> for CellTable<u64> {
    fn from(counts: TrialCounts) -> Self {
        counts.cells
    }
}

impl TrialCounts {
    pub fn new(cells: CellTable<u64>) -> Result<Self> {
        let counts = Self { cells };
        let empty: Vec<_> = (0..2).filter(|&z| counts.arm_total(z) == 0).collect();
        if !empty.is_empty() {
            let arms = empty
                .iter()
                .map(|z| format!("z={z}"))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::Validation(format!(
                "instrument arm {arms} has no observations"
            )));
        }
        Ok(counts)
    }

    /// Aggregates unit-level `(z, x, y)` records. Levels other than 0 and 1 are rejected.
    pub fn from_units<I>(units: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u8, u8, u8)>,
    {
        let mut cells: CellTable<u64> = Default::default();
        for (i, (z, x, y)) in units.into_iter().enumerate() {
            if z > 1 || x > 1 || y > 1 {
                return Err(Error::Validation(format!(
                    "record {}: levels must be 0 or 1, got ({z}, {x}, {y})",
                    i + 1
                )));
            }
            cells[z as usize][x as usize][y as usize] += 1;
        }
        Self::new(cells)
    }

    pub fn get(&self, z: usize, x: usize, y: usize) -> u64 {
        self.cells[z][x][y]
    }

    pub fn cells(&self) -> &CellTable<u64> {
        &self.cells
    }

    pub fn arm_total(&self, z: usize) -> u64 {
        self.cells[z].iter().flatten().sum()
    }

    pub fn total(&self) -> u64 {
        self.arm_total(0) + self.arm_total(1)
    }
}

/// Empirical conditional law `p(x, y | z) = n(z, x, y) / n(z, ., .)`.
pub fn law_from_counts(counts: &TrialCounts) -> ObservedLaw {
    let mut p: CellTable<f64> = Default::default();
    for (z, x, y) in cells() {
        p[z][x][y] = counts.get(z, x, y) as f64 / counts.arm_total(z) as f64;
    }
    ObservedLaw { p }
}

/// Checks that every entry lies in `[0, 1]` and each arm sums to one within
/// `tolerance`. Never fails; problems are returned as fatal findings.
pub fn validate_law(table: &CellTable<f64>, tolerance: f64) -> ValidationReport {
    let mut findings = Vec::new();
    for (z, x, y) in cells() {
        let v = table[z][x][y];
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            findings.push(Finding {
                severity: Severity::Fatal,
                message: format!("p(x={x}, y={y} | z={z}) = {v} lies outside [0, 1]"),
            });
        }
    }
    for (z, arm) in table.iter().enumerate() {
        let sum: f64 = arm.iter().flatten().sum();
        if sum.is_nan() || (sum - 1.0).abs() > tolerance {
            findings.push(Finding {
                severity: Severity::Fatal,
                message: format!("arm z={z} sums to {sum}, expected 1 within {tolerance:e}"),
            });
        }
    }
    ValidationReport::from_findings(findings)
}

/// The observed law `P(X = x, Y = y | Z = z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CellTable<f64>", into = "CellTable<f64>")]
pub struct ObservedLaw {
    p: CellTable<f64>,
}

impl TryFrom<CellTable<f64>> for ObservedLaw {
    type Error = Error;

    fn try_from(p: CellTable<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<ObservedLaw> for CellTable<f64> {
    fn from(law: ObservedLaw) -> Self {
        law.p
    }
}

impl ObservedLaw {
    /// Accepts a user-supplied law, normalizing each arm after validating it
    /// at [`USER_TOLERANCE`].
    pub fn new(p: CellTable<f64>) -> Result<Self> {
        Self::with_tolerance(p, USER_TOLERANCE)
    }

    pub fn with_tolerance(mut p: CellTable<f64>, tolerance: f64) -> Result<Self> {
        let report = validate_law(&p, tolerance);
        if !report.is_ok() {
            return Err(Error::Validation(report.summary()));
        }
        // Arms already normalized to rounding are left untouched so that a
        // serialized law reads back bit-for-bit.
        for arm in p.iter_mut() {
            let sum: f64 = arm.iter().flatten().sum();
            if (sum - 1.0).abs() > 8.0 * f64::EPSILON {
                arm.iter_mut().flatten().for_each(|v| *v /= sum);
            }
        }
        Ok(Self { p })
    }

    pub fn prob(&self, z: usize, x: usize, y: usize) -> f64 {
        self.p[z][x][y]
    }

    pub fn table(&self) -> &CellTable<f64> {
        &self.p
    }

    /// `P(X = 1 | Z = z)`
    pub fn treated(&self, z: usize) -> f64 {
        self.p[z][1][0] + self.p[z][1][1]
    }

    /// `P(Y = 1 | Z = z)`
    pub fn outcome(&self, z: usize) -> f64 {
        self.p[z][0][1] + self.p[z][1][1]
    }

    pub fn validate(&self) -> ValidationReport {
        validate_law(&self.p, CONSTRUCTED_TOLERANCE)
    }
}

/// Maximum-likelihood law under monotonicity (no defiers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneFit {
    pub law: ObservedLaw,
    /// `(x, y)` cells whose probabilities were pooled across the two arms.
    pub pooled: Vec<(usize, usize)>,
    pub log_likelihood: f64,
}

/// Projects counts onto the binary instrument model with monotonicity by
/// constrained maximum likelihood.
///
/// Without defiers the observable law must satisfy `p(1,y|1) >= p(1,y|0)` and
/// `p(0,y|0) >= p(0,y|1)` for both `y`. At the optimum every binding
/// constraint pools its two cells at `(n(0,x,y) + n(1,x,y)) / N`, and the
/// remaining cells of each arm share the leftover mass in proportion to their
/// counts. The 16 possible active sets are enumerated and the feasible
/// candidate with the highest likelihood wins; the empirical law is returned
/// unchanged when it already satisfies the constraints.
pub fn fit_monotone_law(counts: &TrialCounts) -> MonotoneFit {
    const PAIRS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let n_total = counts.total() as f64;
    // (log-likelihood, law, pooled cells)
    type Candidate = (f64, CellTable<f64>, Vec<(usize, usize)>);
    let mut best: Option<Candidate> = None;

    // Visit subsets by size so that ties go to the smallest active set.
    let mut subsets: Vec<u32> = (0..16).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    for mask in subsets {
        let pooled: Vec<(usize, usize)> = PAIRS
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &c)| c)
            .collect();
        let Some(p) = pooled_candidate(counts, &pooled, n_total) else {
            continue;
        };
        if !satisfies_monotone_constraints(&p, CONSTRUCTED_TOLERANCE) {
            continue;
        }
        let ll = log_likelihood(counts, &p);
        if best.as_ref().is_none_or(|(b, _, _)| ll > *b + 1e-12) {
            best = Some((ll, p, pooled));
        }
    }
    // The all-pooled candidate has identical arms and is always feasible.
    let (log_likelihood, p, pooled) = best.expect("all-pooled candidate is feasible");
    MonotoneFit {
        law: ObservedLaw { p },
        pooled,
        log_likelihood,
    }
}

fn pooled_candidate(
    counts: &TrialCounts,
    pooled: &[(usize, usize)],
    n_total: f64,
) -> Option<CellTable<f64>> {
    let mut p: CellTable<f64> = Default::default();
    let mut pooled_mass = 0.0;
    for &(x, y) in pooled {
        let s = (counts.get(0, x, y) + counts.get(1, x, y)) as f64 / n_total;
        p[0][x][y] = s;
        p[1][x][y] = s;
        pooled_mass += s;
    }
    let free = 1.0 - pooled_mass;
    for (z, arm) in p.iter_mut().enumerate() {
        let unpooled: u64 = (0..2)
            .flat_map(|x| (0..2).map(move |y| (x, y)))
            .filter(|c| !pooled.contains(c))
            .map(|(x, y)| counts.get(z, x, y))
            .sum();
        if unpooled == 0 {
            if free > CONSTRUCTED_TOLERANCE {
                return None;
            }
            continue;
        }
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            if !pooled.contains(&(x, y)) {
                arm[x][y] = counts.get(z, x, y) as f64 * free / unpooled as f64;
            }
        }
    }
    Some(p)
}

/// The observable implications of monotonicity for binary Z, X and Y.
pub fn satisfies_monotone_constraints(p: &CellTable<f64>, slack: f64) -> bool {
    (0..2).all(|y| p[1][1][y] + slack >= p[0][1][y] && p[0][0][y] + slack >= p[1][0][y])
}

fn log_likelihood(counts: &TrialCounts, p: &CellTable<f64>) -> f64 {
    cells()
        .map(|(z, x, y)| {
            let n = counts.get(z, x, y);
            if n == 0 {
                0.0
            } else {
                n as f64 * p[z][x][y].ln()
            }
        })
        .sum()
}
