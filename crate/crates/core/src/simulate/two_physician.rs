use serde::{Deserialize, Serialize};

use super::{check_probability, ComplianceShares, ScenarioReport};
use crate::bounds::ComplianceType;
use crate::error::{Error, Result};
use crate::model::{CellTable, ObservedLaw};

/// Two prescribers with opposite defaults and one exception each.
///
/// The treatment-preferring prescriber (`Z = 1`) treats everyone except
/// diabetic patients. The other (`Z = 0`) treats only physically active
/// patients. Diabetic, active patients are therefore treated against both
/// defaults: they are defiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPhysicianScenario {
    pub p_diabetic: f64,
    pub p_active: f64,
    /// Correlation between the diabetic and active indicators.
    #[serde(default)]
    pub correlation: f64,
    /// `P(Y = 1)` indexed `[diabetic][active][treated]`.
    pub outcome_risk: [[[f64; 2]; 2]; 2],
    /// Probability of seeing the treatment-preferring prescriber.
    #[serde(default = "half")]
    pub instrument_split: f64,
}

fn half() -> f64 {
    0.5
}

impl TwoPhysicianScenario {
    /// Joint `P(D = d, A = a)` indexed `[d][a]`.
    ///
    /// Uses the linear family `P(D=1, A=1) = pd·pa + ρ·sqrt(pd(1-pd)pa(1-pa))`,
    /// which must stay inside the Fréchet bounds
    /// `max(0, pd + pa - 1) <= P(D=1, A=1) <= min(pd, pa)`.
    pub fn covariate_joint(&self) -> Result<[[f64; 2]; 2]> {
        let (pd, pa, rho) = (self.p_diabetic, self.p_active, self.correlation);
        check_probability("p_diabetic", pd)?;
        check_probability("p_active", pa)?;
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Scenario(format!(
                "correlation = {rho} lies outside [-1, 1]"
            )));
        }
        let both = pd * pa + rho * (pd * (1.0 - pd) * pa * (1.0 - pa)).sqrt();
        let lower = (pd + pa - 1.0).max(0.0);
        let upper = pd.min(pa);
        const EPS: f64 = 1e-12;
        if both < lower - EPS || both > upper + EPS {
            return Err(Error::Scenario(format!(
                "correlation {rho} with p_diabetic = {pd} and p_active = {pa} gives \
                 P(diabetic and active) = {both:.6}, outside the Fréchet bounds \
                 [{lower:.6}, {upper:.6}]"
            )));
        }
        let both = both.clamp(lower, upper);
        let mut joint = [[0.0; 2]; 2];
        joint[1][1] = both;
        joint[1][0] = (pd - both).max(0.0);
        joint[0][1] = (pa - both).max(0.0);
        joint[0][0] = (1.0 - pd - pa + both).max(0.0);
        Ok(joint)
    }

    pub fn validate(&self) -> Result<()> {
        self.covariate_joint()?;
        check_probability("instrument_split", self.instrument_split)?;
        for d in 0..2 {
            for a in 0..2 {
                for t in 0..2 {
                    check_probability(
                        &format!("outcome_risk[{d}][{a}][{t}]"),
                        self.outcome_risk[d][a][t],
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Treatment received by covariate cell `(d, a)` from prescriber `z`.
    pub fn treatment(z: usize, diabetic: usize, active: usize) -> usize {
        if z == 1 {
            1 - diabetic
        } else {
            active
        }
    }
}

pub fn run_two_physician(s: &TwoPhysicianScenario) -> Result<ScenarioReport> {
    s.validate()?;
    let joint = s.covariate_joint()?;
    let risk = &s.outcome_risk;

    let mut shares = ComplianceShares::default();
    let mut ate = 0.0;
    let mut complier_effect = 0.0;
    let mut p: CellTable<f64> = Default::default();
    for d in 0..2 {
        for a in 0..2 {
            let mass = joint[d][a];
            let x0 = TwoPhysicianScenario::treatment(0, d, a);
            let x1 = TwoPhysicianScenario::treatment(1, d, a);
            let kind = ComplianceType::from_treatments(x0, x1);
            let effect = risk[d][a][1] - risk[d][a][0];
            shares.add(kind, mass);
            ate += mass * effect;
            if kind == ComplianceType::Complier {
                complier_effect += mass * effect;
            }
            for (z, x) in [(0, x0), (1, x1)] {
                p[z][x][1] += mass * risk[d][a][x];
                p[z][x][0] += mass * (1.0 - risk[d][a][x]);
            }
        }
    }
    let law = ObservedLaw::new(p)?;
    Ok(ScenarioReport::assemble(
        shares,
        ate,
        complier_effect,
        s.instrument_split,
        law,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(pd: f64, pa: f64, rho: f64) -> TwoPhysicianScenario {
        TwoPhysicianScenario {
            p_diabetic: pd,
            p_active: pa,
            correlation: rho,
            outcome_risk: [[[0.3, 0.2], [0.25, 0.1]], [[0.5, 0.45], [0.4, 0.6]]],
            instrument_split: 0.5,
        }
    }

    #[test]
    fn independent_covariates_give_product_defier_share() {
        let r = run_two_physician(&scenario(0.2, 0.5, 0.0)).unwrap();
        assert_eq!(r.defier_share, 0.2 * 0.5);
        assert!((r.shares.total() - 1.0).abs() < 1e-12);
        assert!((r.shares.complier - 0.8 * 0.5).abs() < 1e-15);
        assert!((r.shares.always_taker - 0.8 * 0.5).abs() < 1e-15);
        assert!((r.shares.never_taker - 0.2 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_diabetics_means_no_defiers() {
        let r = run_two_physician(&scenario(0.0, 0.4, 0.0)).unwrap();
        assert_eq!(r.defier_share, 0.0);
        assert!((r.iv_estimand.unwrap() - r.true_late.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn frechet_violations_are_reported() {
        let err = run_two_physician(&scenario(0.1, 0.9, 1.0)).unwrap_err();
        assert!(err.to_string().contains("Fréchet"), "{err}");
        assert!(run_two_physician(&scenario(0.1, 0.9, 1.5)).is_err());
        assert!(run_two_physician(&scenario(0.3, 0.3, 1.0)).is_ok());
    }

    #[test]
    fn defier_share_is_joint_exception_probability() {
        let s = scenario(0.3, 0.4, 0.25);
        let joint = s.covariate_joint().unwrap();
        let r = run_two_physician(&s).unwrap();
        assert_eq!(r.defier_share, joint[1][1]);
    }
}
