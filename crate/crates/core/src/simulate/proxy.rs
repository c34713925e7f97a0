use serde::{Deserialize, Serialize};

use super::{check_probability, ComplianceShares, ScenarioReport};
use crate::bounds::ComplianceType;
use crate::error::{Error, Result};
use crate::model::{CellTable, ObservedLaw};

/// A subgroup of patients that responds to the dichotomized preference proxy
/// in its own way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceLevel {
    /// Underlying preference score of the subgroup.
    pub preference: f64,
    /// Population share.
    pub weight: f64,
    /// `P(X = 1)` in proxy arm `Z = 0` and `Z = 1`.
    pub uptake: [f64; 2],
    /// `P(Y = 1)` when untreated.
    #[serde(default)]
    pub baseline_risk: f64,
    /// Additive treatment effect, common to the subgroup.
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyScenario {
    pub levels: Vec<PreferenceLevel>,
    /// Cut on the preference scale that defines the high-preference proxy arm.
    pub threshold: f64,
}

impl ProxyScenario {
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::Scenario(
                "a proxy scenario needs at least two preference levels".into(),
            ));
        }
        for (k, l) in self.levels.iter().enumerate() {
            check_probability(&format!("levels[{k}].weight"), l.weight)?;
            check_probability(&format!("levels[{k}].uptake[0]"), l.uptake[0])?;
            check_probability(&format!("levels[{k}].uptake[1]"), l.uptake[1])?;
            check_probability(&format!("levels[{k}].baseline_risk"), l.baseline_risk)?;
            check_probability(
                &format!("levels[{k}].baseline_risk + effect"),
                l.baseline_risk + l.effect,
            )?;
        }
        let total: f64 = self.levels.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Scenario(format!(
                "level weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyReport {
    pub report: ScenarioReport,
    /// Weight of each level in the Wald ratio,
    /// `w_k (t1_k - t0_k) / sum_j w_j (t1_j - t0_j)`. Negative where uptake
    /// moves against the proxy. Empty when the first stage is zero.
    pub level_weights: Vec<f64>,
    /// `sum_k level_weight_k * effect_k`
    pub weighted_average: Option<f64>,
    /// Whether the Wald ratio of the induced law equals `weighted_average`
    /// within 1e-9.
    pub weighted_average_matches: bool,
    /// Part of the Wald weight carried by levels at or above the threshold.
    pub weight_above_threshold: Option<f64>,
}

/// Exact population quantities for a dichotomized preference proxy.
///
/// Within a level, the proxy moves `|t1 - t0|` of the patients (compliers,
/// or defiers when uptake falls), and everyone shares the level's effect.
pub fn run_proxy(s: &ProxyScenario) -> Result<ProxyReport> {
    s.validate()?;

    let mut shares = ComplianceShares::default();
    let mut ate = 0.0;
    let mut complier_effect = 0.0;
    let mut p: CellTable<f64> = Default::default();
    for l in &s.levels {
        let [t0, t1] = l.uptake;
        let shift = t1 - t0;
        if shift >= 0.0 {
            shares.add(ComplianceType::Complier, l.weight * shift);
            shares.add(ComplianceType::AlwaysTaker, l.weight * t0);
            shares.add(ComplianceType::NeverTaker, l.weight * (1.0 - t1));
            complier_effect += l.weight * shift * l.effect;
        } else {
            shares.add(ComplianceType::Defier, -l.weight * shift);
            shares.add(ComplianceType::AlwaysTaker, l.weight * t1);
            shares.add(ComplianceType::NeverTaker, l.weight * (1.0 - t0));
        }
        ate += l.weight * l.effect;
        let treated_risk = l.baseline_risk + l.effect;
        for (z, t) in [(0, t0), (1, t1)] {
            p[z][1][1] += l.weight * t * treated_risk;
            p[z][1][0] += l.weight * t * (1.0 - treated_risk);
            p[z][0][1] += l.weight * (1.0 - t) * l.baseline_risk;
            p[z][0][0] += l.weight * (1.0 - t) * (1.0 - l.baseline_risk);
        }
    }
    let law = ObservedLaw::new(p)?;
    let report = ScenarioReport::assemble(shares, ate, complier_effect, 0.5, law);

    let first_stage: f64 = s
        .levels
        .iter()
        .map(|l| l.weight * (l.uptake[1] - l.uptake[0]))
        .sum();
    let (level_weights, weighted_average, weight_above_threshold) = if report.iv_estimand.is_some()
    {
        let weights: Vec<f64> = s
            .levels
            .iter()
            .map(|l| l.weight * (l.uptake[1] - l.uptake[0]) / first_stage)
            .collect();
        let avg: f64 = weights
            .iter()
            .zip(&s.levels)
            .map(|(w, l)| w * l.effect)
            .sum();
        let above: f64 = weights
            .iter()
            .zip(&s.levels)
            .filter(|(_, l)| l.preference >= s.threshold)
            .map(|(w, _)| w)
            .sum();
        (weights, Some(avg), Some(above))
    } else {
        (Vec::new(), None, None)
    };
    let weighted_average_matches = match (report.iv_estimand, weighted_average) {
        (Some(iv), Some(avg)) => (iv - avg).abs() < 1e-9,
        (None, None) => true,
        _ => false,
    };
    Ok(ProxyReport {
        report,
        level_weights,
        weighted_average,
        weighted_average_matches,
        weight_above_threshold,
    })
}
