//! Population-level scenarios where the instrument is a prescriber's
//! preference, evaluated by exact enumeration.

mod monte_carlo;
mod proxy;
mod two_physician;

pub use monte_carlo::{sample_counts, sample_replicates};
pub use proxy::{run_proxy, PreferenceLevel, ProxyReport, ProxyScenario};
pub use two_physician::{run_two_physician, TwoPhysicianScenario};

use serde::{Deserialize, Serialize};

use crate::bounds::ComplianceType;
use crate::estimators::iv_estimates;
use crate::model::ObservedLaw;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplianceShares {
    pub always_taker: f64,
    pub never_taker: f64,
    pub complier: f64,
    pub defier: f64,
}

impl ComplianceShares {
    pub fn add(&mut self, c: ComplianceType, mass: f64) {
        match c {
            ComplianceType::AlwaysTaker => self.always_taker += mass,
            ComplianceType::NeverTaker => self.never_taker += mass,
            ComplianceType::Complier => self.complier += mass,
            ComplianceType::Defier => self.defier += mass,
        }
    }

    pub fn total(&self) -> f64 {
        self.always_taker + self.never_taker + self.complier + self.defier
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub shares: ComplianceShares,
    pub true_ate: f64,
    /// Average effect among compliers; `None` when there are none.
    pub true_late: Option<f64>,
    /// Population Wald ratio; `None` when the instrument has no first stage.
    pub iv_estimand: Option<f64>,
    pub defier_share: f64,
    pub bias_vs_late: Option<f64>,
    pub bias_vs_ate: Option<f64>,
    /// `P(Z = 1)`, used when drawing finite samples.
    pub instrument_split: f64,
    /// Observable law induced by the scenario.
    pub law: ObservedLaw,
}

impl ScenarioReport {
    fn assemble(
        shares: ComplianceShares,
        true_ate: f64,
        complier_effect_mass: f64,
        instrument_split: f64,
        law: ObservedLaw,
    ) -> Self {
        let true_late = (shares.complier > 0.0).then(|| complier_effect_mass / shares.complier);
        let iv_estimand = iv_estimates(&law).wald;
        Self {
            shares,
            true_ate,
            true_late,
            iv_estimand,
            defier_share: shares.defier,
            bias_vs_late: iv_estimand.zip(true_late).map(|(iv, late)| iv - late),
            bias_vs_ate: iv_estimand.map(|iv| iv - true_ate),
            instrument_split,
            law,
        }
    }
}

fn check_probability(name: &str, v: f64) -> crate::Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(crate::Error::Scenario(format!(
            "{name} = {v} lies outside [0, 1]"
        )))
    }
}
