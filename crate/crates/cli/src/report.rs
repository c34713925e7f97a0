//! Serialized report shapes. Every computed number is a [`Num`]: the full
//! precision value plus its rounded display string.

use ivpi_core::bounds::{AssumptionSet, BoundsResult, CurvePoint};
use ivpi_core::estimators::{DecompositionTerm, IvEstimates, Sensitivity};
use ivpi_core::model::{CellTable, Finding, MonotoneFit};
use ivpi_core::simulate::{ComplianceShares, ProxyReport, ScenarioReport};
use serde::{Deserialize, Serialize};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rounds numbers for display.
#[derive(Debug, Clone, Copy)]
pub struct Precision(pub usize);

impl Default for Precision {
    fn default() -> Self {
        Precision(2)
    }
}

impl Precision {
    pub fn num(self, value: f64) -> Num {
        Num {
            value,
            display: self.render(value),
        }
    }

    pub fn opt(self, value: Option<f64>) -> Option<Num> {
        value.map(|v| self.num(v))
    }

    pub fn render(self, value: f64) -> String {
        let s = format!("{value:.*}", self.0);
        // "-0.00" reads as a sign that is not there.
        match s.strip_prefix('-') {
            Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
            _ => s,
        }
    }

    pub fn interval(self, lo: f64, hi: f64) -> IntervalView {
        IntervalView {
            lower: self.num(lo),
            upper: self.num(hi),
            display: format!("[{}, {}]", self.render(lo), self.render(hi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Num {
    pub value: f64,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalView {
    pub lower: Num,
    pub upper: Num,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Inputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<EstimatesView>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundsView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityView>,
    pub validation: Vec<Finding>,
}

impl AnalysisReport {
    pub fn new(command: &str, inputs: Inputs) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            inputs,
            estimates: None,
            bounds: Vec::new(),
            sweep: None,
            sensitivity: None,
            validation: Vec::new(),
        }
    }
}

/// What the numbers were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub source: String,
    /// Cell counts, when the input was counts or unit records.
    pub counts: Option<CellTable<u64>>,
    /// The observed law `P(X = x, Y = y | Z = z)`, indexed `[z][x][y]`.
    pub law: CellTable<f64>,
    /// Maximum-likelihood law under monotonicity, used for monotone bounds
    /// when the empirical law violates the constraints monotonicity implies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone_fit: Option<MonotoneFitView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata_effect_ranges: Option<RangesView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneFitView {
    pub fitted_law: CellTable<f64>,
    pub pooled_cells: Vec<(usize, usize)>,
    pub log_likelihood: f64,
}

impl From<&MonotoneFit> for MonotoneFitView {
    fn from(fit: &MonotoneFit) -> Self {
        Self {
            fitted_law: *fit.law.table(),
            pooled_cells: fit.pooled.clone(),
            log_likelihood: fit.log_likelihood,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangesView {
    pub always_taker: [f64; 2],
    pub never_taker: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesView {
    pub itt_y: Num,
    pub itt_x: Num,
    pub wald: Option<Num>,
    pub weak_instrument: bool,
    pub complier_share: Num,
    pub always_taker_share: Num,
    pub never_taker_share: Num,
}

impl EstimatesView {
    pub fn new(e: &IvEstimates, p: Precision) -> Self {
        Self {
            itt_y: p.num(e.itt_y),
            itt_x: p.num(e.itt_x),
            wald: p.opt(e.wald),
            weak_instrument: e.weak_instrument,
            complier_share: p.num(e.complier_share),
            always_taker_share: p.num(e.always_taker_share),
            never_taker_share: p.num(e.never_taker_share),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawUsed {
    Empirical,
    MonotoneFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Bounded,
    /// No response-type distribution satisfying the assumptions reproduces
    /// the law: the assumptions are falsified by the data.
    Falsified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsView {
    pub assumptions: AssumptionSet,
    pub law: LawUsed,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ate: Option<IntervalView>,
}

impl BoundsView {
    pub fn new(
        assumptions: AssumptionSet,
        law: LawUsed,
        result: &BoundsResult,
        p: Precision,
    ) -> Self {
        let (status, ate) = match result.interval() {
            Some((lo, hi)) => (Status::Bounded, Some(p.interval(lo, hi))),
            None => (Status::Falsified, None),
        };
        Self {
            assumptions,
            law,
            status,
            ate,
        }
    }

    pub fn is_falsified(&self) -> bool {
        self.status == Status::Falsified
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepView {
    /// Assumptions held fixed while the never-taker cap varies.
    pub base: AssumptionSet,
    pub law: LawUsed,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub cap_nt: Num,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ate: Option<IntervalView>,
}

impl SweepView {
    pub fn new(base: AssumptionSet, law: LawUsed, curve: &[CurvePoint], p: Precision) -> Self {
        let points = curve
            .iter()
            .map(|c| {
                let view = BoundsView::new(base, law, &c.result, p);
                SweepPoint {
                    cap_nt: p.num(c.cap),
                    status: view.status,
                    ate: view.ate,
                }
            })
            .collect();
        Self { base, law, points }
    }

    /// `cap_nt  status  lower  upper`, full precision, one row per point.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("cap_nt\tstatus\tlower\tupper\n");
        for pt in &self.points {
            let (status, lo, hi) = match &pt.ate {
                Some(i) => (
                    "bounded",
                    i.lower.value.to_string(),
                    i.upper.value.to_string(),
                ),
                None => ("falsified", "NA".into(), "NA".into()),
            };
            out.push_str(&format!("{}\t{status}\t{lo}\t{hi}\n", pt.cap_nt.value));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermView {
    pub share: Num,
    pub effect: IntervalView,
    pub contribution: IntervalView,
}

impl TermView {
    fn new(t: &DecompositionTerm, p: Precision) -> Self {
        Self {
            share: p.num(t.share),
            effect: p.interval(t.effect.lo, t.effect.hi),
            contribution: p.interval(t.contribution.lo, t.contribution.hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityView {
    pub ate: IntervalView,
    pub width: Num,
    pub compliers: TermView,
    pub always_takers: TermView,
    pub never_takers: TermView,
}

impl SensitivityView {
    pub fn new(s: &Sensitivity, p: Precision) -> Self {
        Self {
            ate: p.interval(s.ate.lo, s.ate.hi),
            width: p.num(s.ate.width()),
            compliers: TermView::new(&s.compliers, p),
            always_takers: TermView::new(&s.always_takers, p),
            never_takers: TermView::new(&s.never_takers, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharesView {
    pub always_taker: Num,
    pub never_taker: Num,
    pub complier: Num,
    pub defier: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioView {
    pub shares: SharesView,
    pub true_ate: Num,
    pub true_late: Option<Num>,
    pub iv_estimand: Option<Num>,
    pub defier_share: Num,
    pub bias_vs_late: Option<Num>,
    pub bias_vs_ate: Option<Num>,
    pub instrument_split: Num,
}

impl ScenarioView {
    pub fn new(r: &ScenarioReport, p: Precision) -> Self {
        let ComplianceShares {
            always_taker,
            never_taker,
            complier,
            defier,
        } = r.shares;
        Self {
            shares: SharesView {
                always_taker: p.num(always_taker),
                never_taker: p.num(never_taker),
                complier: p.num(complier),
                defier: p.num(defier),
            },
            true_ate: p.num(r.true_ate),
            true_late: p.opt(r.true_late),
            iv_estimand: p.opt(r.iv_estimand),
            defier_share: p.num(r.defier_share),
            bias_vs_late: p.opt(r.bias_vs_late),
            bias_vs_ate: p.opt(r.bias_vs_ate),
            instrument_split: p.num(r.instrument_split),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyView {
    pub level_weights: Vec<Num>,
    pub weighted_average: Option<Num>,
    pub weighted_average_matches: bool,
    pub weight_above_threshold: Option<Num>,
}

impl ProxyView {
    pub fn new(r: &ProxyReport, p: Precision) -> Self {
        Self {
            level_weights: r.level_weights.iter().map(|&w| p.num(w)).collect(),
            weighted_average: p.opt(r.weighted_average),
            weighted_average_matches: r.weighted_average_matches,
            weight_above_threshold: p.opt(r.weight_above_threshold),
        }
    }
}

/// Output of `simulate --mode exact`. The top-level `law` makes the document
/// directly usable as input to the analysis commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub scenario: serde_json::Value,
    pub report: ScenarioView,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proxy: Option<ProxyView>,
    pub law: CellTable<f64>,
}

/// Output of `simulate --mode mc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub scenario: serde_json::Value,
    pub seed: u64,
    pub n: u64,
    pub instrument_split: f64,
    /// Counts of the first replicate, so the document can be analysed
    /// directly.
    pub counts: CellTable<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replicates: Vec<CellTable<u64>>,
}
