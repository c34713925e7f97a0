//! Bounds on the average treatment effect over principal strata.
//!
//! Each unit has a compliance type (how treatment responds to the instrument)
//! and an outcome type (how the outcome responds to treatment). The sixteen
//! joint proportions are the variables of a linear program whose equality
//! constraints reproduce the observed law; minimizing and maximizing the ATE
//! over that polytope gives sharp bounds. Monotonicity and outcome-risk caps
//! add rows.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpSolution, Sense};
use crate::model::{cells, CellTable, Finding, ObservedLaw, Severity, ValidationReport};

/// Slack for treating a witness or inequality as satisfied.
pub const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceType {
    AlwaysTaker,
    NeverTaker,
    Complier,
    Defier,
}

impl ComplianceType {
    pub const ALL: [ComplianceType; 4] = [
        ComplianceType::AlwaysTaker,
        ComplianceType::NeverTaker,
        ComplianceType::Complier,
        ComplianceType::Defier,
    ];

    /// Treatment taken under instrument level `z`.
    pub fn treatment(self, z: usize) -> usize {
        match self {
            ComplianceType::AlwaysTaker => 1,
            ComplianceType::NeverTaker => 0,
            ComplianceType::Complier => z,
            ComplianceType::Defier => 1 - z,
        }
    }

    /// Inverse of [`ComplianceType::treatment`]: the type with the given
    /// treatments under `z = 0` and `z = 1`.
    pub fn from_treatments(under_z0: usize, under_z1: usize) -> Self {
        match (under_z0, under_z1) {
            (1, 1) => ComplianceType::AlwaysTaker,
            (0, 0) => ComplianceType::NeverTaker,
            (0, 1) => ComplianceType::Complier,
            _ => ComplianceType::Defier,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeType {
    /// Y = 1 under both treatments.
    Doomed,
    /// Y = 1 only when treated.
    Helped,
    /// Y = 1 only when untreated.
    Hurt,
    /// Y = 0 under both treatments.
    Immune,
}

impl OutcomeType {
    pub const ALL: [OutcomeType; 4] = [
        OutcomeType::Doomed,
        OutcomeType::Helped,
        OutcomeType::Hurt,
        OutcomeType::Immune,
    ];

    /// Outcome realized under treatment `x`.
    pub fn outcome(self, x: usize) -> usize {
        match self {
            OutcomeType::Doomed => 1,
            OutcomeType::Helped => x,
            OutcomeType::Hurt => 1 - x,
            OutcomeType::Immune => 0,
        }
    }

    /// Individual effect `Y(1) - Y(0)`.
    pub fn effect(self) -> f64 {
        self.outcome(1) as f64 - self.outcome(0) as f64
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// LP column of `q(c, r)`.
pub fn variable_index(c: ComplianceType, r: OutcomeType) -> usize {
    4 * c.index() + r.index()
}

fn response_types() -> impl Iterator<Item = (ComplianceType, OutcomeType)> {
    ComplianceType::ALL
        .into_iter()
        .flat_map(|c| OutcomeType::ALL.into_iter().map(move |r| (c, r)))
}

/// Joint distribution over compliance type and outcome type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTypeDistribution {
    q: [[f64; 4]; 4],
}

impl ResponseTypeDistribution {
    /// `q[c][r]` in the order of [`ComplianceType::ALL`] and [`OutcomeType::ALL`].
    pub fn new(q: [[f64; 4]; 4]) -> Result<Self> {
        if q.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "response-type proportions must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = q.iter().flatten().sum();
        if (sum - 1.0).abs() > SLACK {
            return Err(Error::InvalidArgument(format!(
                "response-type proportions sum to {sum}"
            )));
        }
        Ok(Self { q })
    }

    /// Reads an LP solution vector (16 entries, column order of
    /// [`variable_index`]).
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        if v.len() != 16 {
            return Err(Error::InvalidArgument(format!(
                "expected 16 proportions, got {}",
                v.len()
            )));
        }
        let mut q = [[0.0; 4]; 4];
        for (c, r) in response_types() {
            q[c.index()][r.index()] = v[variable_index(c, r)].max(0.0);
        }
        Self::new(q)
    }

    /// Draws from the flat Dirichlet over the 16 types, or over the 12
    /// non-defier types when `monotone` is set.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, monotone: bool) -> Self {
        let mut q = [[0.0; 4]; 4];
        for (c, r) in response_types() {
            if monotone && c == ComplianceType::Defier {
                continue;
            }
            let u: f64 = rng.random();
            q[c.index()][r.index()] = -(1.0 - u).ln();
        }
        let total: f64 = q.iter().flatten().sum();
        q.iter_mut().flatten().for_each(|v| *v /= total);
        Self { q }
    }

    pub fn get(&self, c: ComplianceType, r: OutcomeType) -> f64 {
        self.q[c.index()][r.index()]
    }

    pub fn as_vector(&self) -> Vec<f64> {
        self.q.iter().flatten().copied().collect()
    }

    pub fn mass(&self, c: ComplianceType) -> f64 {
        self.q[c.index()].iter().sum()
    }

    /// `P(Y(1) = 1) - P(Y(0) = 1)`
    pub fn ate(&self) -> f64 {
        response_types()
            .map(|(c, r)| self.get(c, r) * r.effect())
            .sum()
    }

    /// Average effect within a compliance stratum, if it has mass.
    pub fn stratum_effect(&self, c: ComplianceType) -> Option<f64> {
        let mass = self.mass(c);
        (mass > 0.0).then(|| {
            OutcomeType::ALL
                .iter()
                .map(|&r| self.get(c, r) * r.effect())
                .sum::<f64>()
                / mass
        })
    }

    /// `P(Y(x) = 1 | stratum c)`, if the stratum has mass.
    pub fn stratum_risk(&self, c: ComplianceType, x: usize) -> Option<f64> {
        let mass = self.mass(c);
        (mass > 0.0).then(|| {
            OutcomeType::ALL
                .iter()
                .filter(|r| r.outcome(x) == 1)
                .map(|&r| self.get(c, r))
                .sum::<f64>()
                / mass
        })
    }

    /// Observable law generated by this distribution, before normalization.
    pub fn implied_table(&self) -> CellTable<f64> {
        let mut p: CellTable<f64> = Default::default();
        for (z, x, y) in cells() {
            p[z][x][y] = response_types()
                .filter(|&(c, r)| consistent(c, r, z, x, y))
                .map(|(c, r)| self.get(c, r))
                .sum();
        }
        p
    }

    pub fn implied_law(&self) -> ObservedLaw {
        ObservedLaw::new(self.implied_table()).expect("a distribution implies a valid law")
    }

    /// Whether this distribution meets every restriction in `assumptions`.
    pub fn satisfies(&self, assumptions: &AssumptionSet) -> bool {
        let mono = !assumptions.monotonicity || self.mass(ComplianceType::Defier) <= SLACK;
        let cap_ok = |cap: Option<f64>, c: ComplianceType, x: usize| match cap {
            None => true,
            Some(eps) => {
                let at_risk: f64 = OutcomeType::ALL
                    .iter()
                    .filter(|r| r.outcome(x) == 1)
                    .map(|&r| self.get(c, r))
                    .sum();
                at_risk <= eps * self.mass(c) + SLACK
            }
        };
        mono && cap_ok(
            assumptions.cap_never_taker_treated,
            ComplianceType::NeverTaker,
            1,
        ) && cap_ok(
            assumptions.cap_always_taker_untreated,
            ComplianceType::AlwaysTaker,
            0,
        )
    }
}

/// True when type `(c, r)` produces `X = x, Y = y` under `Z = z`.
fn consistent(c: ComplianceType, r: OutcomeType, z: usize, x: usize, y: usize) -> bool {
    let taken = c.treatment(z);
    taken == x && r.outcome(taken) == y
}

/// Which outcome-risk cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cap {
    /// `P(Y = 1 | never-taker, treatment forced on)`
    NeverTakerTreated,
    /// `P(Y = 1 | always-taker, treatment forced off)`
    AlwaysTakerUntreated,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AssumptionSet {
    pub monotonicity: bool,
    pub cap_never_taker_treated: Option<f64>,
    pub cap_always_taker_untreated: Option<f64>,
}

impl AssumptionSet {
    /// Instrumental conditions only.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn monotone() -> Self {
        Self {
            monotonicity: true,
            ..Self::default()
        }
    }

    pub fn with_cap(mut self, cap: Cap, value: Option<f64>) -> Self {
        match cap {
            Cap::NeverTakerTreated => self.cap_never_taker_treated = value,
            Cap::AlwaysTakerUntreated => self.cap_always_taker_untreated = value,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, cap) in [
            ("never-taker treated", self.cap_never_taker_treated),
            ("always-taker untreated", self.cap_always_taker_untreated),
        ] {
            if let Some(v) = cap {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "{name} cap {v} lies outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the response-type program whose objective is the ATE.
///
/// Rows, in order: normalization, the eight observed cells in `(z, x, y)`
/// order, one zero row per defier type under monotonicity. Each cap is a
/// single homogeneous inequality `risk mass <= eps * stratum mass`, which is
/// vacuous when the stratum is empty.
pub fn build_bounds_lp(law: &ObservedLaw, assumptions: &AssumptionSet) -> Result<LinearProgram> {
    assumptions.validate()?;
    let objective = response_types().map(|(_, r)| r.effect()).collect();
    let mut lp = LinearProgram::new(objective)?;

    lp.add_equality(vec![1.0; 16], 1.0)?;
    for (z, x, y) in cells() {
        let row = response_types()
            .map(|(c, r)| if consistent(c, r, z, x, y) { 1.0 } else { 0.0 })
            .collect();
        lp.add_equality(row, law.prob(z, x, y))?;
    }
    if assumptions.monotonicity {
        for r in OutcomeType::ALL {
            let mut row = vec![0.0; 16];
            row[variable_index(ComplianceType::Defier, r)] = 1.0;
            lp.add_equality(row, 0.0)?;
        }
    }
    let caps = [
        (
            assumptions.cap_never_taker_treated,
            ComplianceType::NeverTaker,
            1,
        ),
        (
            assumptions.cap_always_taker_untreated,
            ComplianceType::AlwaysTaker,
            0,
        ),
    ];
    for (cap, stratum, x) in caps {
        if let Some(eps) = cap {
            let mut row = vec![0.0; 16];
            for r in OutcomeType::ALL {
                let at_risk = if r.outcome(x) == 1 { 1.0 } else { 0.0 };
                row[variable_index(stratum, r)] = at_risk - eps;
            }
            lp.add_inequality(row, 0.0)?;
        }
    }
    Ok(lp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: ResponseTypeDistribution,
    pub upper_witness: ResponseTypeDistribution,
}

impl AteBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }
}

/// Either an interval or a finding that no distribution satisfying the
/// assumptions reproduces the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)] // built once per solve; boxing buys nothing
pub enum BoundsResult {
    Bounded(AteBounds),
    Infeasible,
}

impl BoundsResult {
    pub fn bounds(&self) -> Option<&AteBounds> {
        match self {
            BoundsResult::Bounded(b) => Some(b),
            BoundsResult::Infeasible => None,
        }
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        self.bounds().map(|b| (b.lower, b.upper))
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, BoundsResult::Bounded(_))
    }
}

/// Sharp bounds on the ATE given the law and assumptions.
pub fn ate_bounds(law: &ObservedLaw, assumptions: &AssumptionSet) -> Result<BoundsResult> {
    let program = build_bounds_lp(law, assumptions)?;
    let lower = lp::solve_min(&program);
    let upper = lp::solve_max(&program);
    assemble(lower, upper)
}

/// Same bounds computed by vertex enumeration instead of the simplex.
pub fn ate_bounds_by_enumeration(
    law: &ObservedLaw,
    assumptions: &AssumptionSet,
) -> Result<BoundsResult> {
    let program = build_bounds_lp(law, assumptions)?;
    let lower = lp::vertex_oracle(&program, Sense::Min)?;
    let upper = lp::vertex_oracle(&program, Sense::Max)?;
    assemble(lower, upper)
}

fn assemble(lower: LpSolution, upper: LpSolution) -> Result<BoundsResult> {
    match (lower, upper) {
        (
            LpSolution::Optimal {
                value: lo,
                witness: lo_w,
            },
            LpSolution::Optimal {
                value: hi,
                witness: hi_w,
            },
        ) => Ok(BoundsResult::Bounded(AteBounds {
            lower: lo,
            upper: hi,
            lower_witness: ResponseTypeDistribution::from_vector(&lo_w)?,
            upper_witness: ResponseTypeDistribution::from_vector(&hi_w)?,
        })),
        (LpSolution::Unbounded, _) | (_, LpSolution::Unbounded) => {
            unreachable!("response-type programs live in the unit simplex")
        }
        _ => Ok(BoundsResult::Infeasible),
    }
}

/// Checks `sum_y max_z p(x, y | z) <= 1` for both treatment levels.
///
/// For binary instrument, treatment and outcome these inequalities hold
/// exactly when some response-type distribution reproduces the law.
pub fn check_instrumental_inequalities(law: &ObservedLaw) -> ValidationReport {
    let findings = (0..2)
        .filter_map(|x| {
            let total: f64 = (0..2)
                .map(|y| law.prob(0, x, y).max(law.prob(1, x, y)))
                .sum();
            (total > 1.0 + SLACK).then(|| Finding {
                severity: Severity::Fatal,
                message: format!(
                    "instrumental inequality for x={x} violated: \
                     sum over y of max over z of p(x,y|z) = {total:.6} exceeds 1 by {:.6}",
                    total - 1.0
                ),
            })
        })
        .collect();
    ValidationReport::from_findings(findings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub cap: f64,
    pub result: BoundsResult,
}

/// Bounds at each value of one cap, holding the rest of `base` fixed.
///
/// `grid` must be non-empty, within `[0, 1]` and strictly increasing. Points
/// are solved in parallel and returned in grid order.
pub fn bounds_curve(
    law: &ObservedLaw,
    base: &AssumptionSet,
    cap: Cap,
    grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("cap grid is empty".into()));
    }
    if let Some(v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!(
            "cap grid value {v} lies outside [0, 1]"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "cap grid must be strictly increasing".into(),
        ));
    }
    grid.par_iter()
        .map(|&eps| {
            let assumptions = base.with_cap(cap, Some(eps));
            Ok(CurvePoint {
                cap: eps,
                result: ate_bounds(law, &assumptions)?,
            })
        })
        .collect()
}
