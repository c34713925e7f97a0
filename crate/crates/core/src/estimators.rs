//! Wald ratio, compliance shares and the stratum decomposition of the ATE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ObservedLaw;

/// Below this `|ITT_X|` the instrument is treated as having no first stage.
pub const WEAK_INSTRUMENT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvEstimates {
    /// `P(Y=1|Z=1) - P(Y=1|Z=0)`
    pub itt_y: f64,
    /// `P(X=1|Z=1) - P(X=1|Z=0)`
    pub itt_x: f64,
    /// `itt_y / itt_x`; `None` for a weak instrument.
    pub wald: Option<f64>,
    pub weak_instrument: bool,
    /// Complier share implied by monotonicity (equal to `itt_x`; negative when
    /// the instrument pushes treatment the other way).
    pub complier_share: f64,
    /// `P(X=1|Z=0)`
    pub always_taker_share: f64,
    /// `P(X=0|Z=1)`
    pub never_taker_share: f64,
}

pub fn iv_estimates(law: &ObservedLaw) -> IvEstimates {
    let itt_y = law.outcome(1) - law.outcome(0);
    let itt_x = law.treated(1) - law.treated(0);
    let weak_instrument = itt_x.abs() <= WEAK_INSTRUMENT_THRESHOLD;
    IvEstimates {
        itt_y,
        itt_x,
        wald: (!weak_instrument).then(|| itt_y / itt_x),
        weak_instrument,
        complier_share: itt_x,
        always_taker_share: law.treated(0),
        never_taker_share: 1.0 - law.treated(1),
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "[{lo}, {hi}] is not an interval"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Hypothesized ranges for the average effect among always-takers and
/// never-takers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrataEffectRanges {
    pub always_taker_effect: Interval,
    pub never_taker_effect: Interval,
}

impl StrataEffectRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("always-taker", self.always_taker_effect),
            ("never-taker", self.never_taker_effect),
        ] {
            if r.lo > r.hi || r.lo < -1.0 || r.hi > 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} effect range [{}, {}] must be ordered and within [-1, 1]",
                    r.lo, r.hi
                )));
            }
        }
        Ok(())
    }
}

/// One stratum's contribution `share * effect` to the ATE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerm {
    pub share: f64,
    pub effect: Interval,
    pub contribution: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub ate: Interval,
    pub compliers: DecompositionTerm,
    pub always_takers: DecompositionTerm,
    pub never_takers: DecompositionTerm,
}

/// ATE range implied by `ATE = π_CO·LATE + π_AT·ATE_AT + π_NT·ATE_NT`, with
/// the LATE set to the Wald ratio (valid under monotonicity) and the other
/// two stratum effects ranging over `ranges`.
pub fn ate_sensitivity(law: &ObservedLaw, ranges: &StrataEffectRanges) -> Result<Sensitivity> {
    ranges.validate()?;
    let est = iv_estimates(law);
    let late = est.wald.ok_or(Error::WeakInstrument(est.itt_x))?;
    let term = |share: f64, effect: Interval| DecompositionTerm {
        share,
        effect,
        contribution: Interval {
            lo: share * effect.lo,
            hi: share * effect.hi,
        },
    };
    let compliers = term(est.complier_share, Interval::point(late));
    let always_takers = term(est.always_taker_share, ranges.always_taker_effect);
    let never_takers = term(est.never_taker_share, ranges.never_taker_effect);
    let ate = Interval {
        lo: compliers.contribution.lo
            + always_takers.contribution.lo
            + never_takers.contribution.lo,
        hi: compliers.contribution.hi
            + always_takers.contribution.hi
            + never_takers.contribution.hi,
    };
    Ok(Sensitivity {
        ate,
        compliers,
        always_takers,
        never_takers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cells, CellTable};
    use proptest::prelude::*;

    /// Law from arm-level treatment and outcome rates, with X and Y
    /// independent within each arm.
    fn law_from_rates(treated: [f64; 2], outcome: [f64; 2]) -> ObservedLaw {
        let mut p: CellTable<f64> = Default::default();
        for (z, x, y) in cells() {
            let px = if x == 1 { treated[z] } else { 1.0 - treated[z] };
            let py = if y == 1 { outcome[z] } else { 1.0 - outcome[z] };
            p[z][x][y] = px * py;
        }
        ObservedLaw::new(p).unwrap()
    }

    #[test]
    fn ratio_of_intention_to_treat_effects() {
        let law = law_from_rates([0.2, 0.7], [0.4, 0.3]);
        let est = iv_estimates(&law);
        assert!((est.itt_y + 0.1).abs() < 1e-12);
        assert!((est.itt_x - 0.5).abs() < 1e-12);
        assert!((est.wald.unwrap() + 0.2).abs() < 1e-12);
        assert!((est.always_taker_share - 0.2).abs() < 1e-12);
        assert!((est.never_taker_share - 0.3).abs() < 1e-12);
        let total = est.complier_share + est.always_taker_share + est.never_taker_share;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_arms_are_weak() {
        let law = law_from_rates([0.4, 0.4], [0.3, 0.3]);
        let est = iv_estimates(&law);
        assert_eq!(est.itt_x, 0.0);
        assert!(est.weak_instrument);
        assert_eq!(est.wald, None);
        let ranges = StrataEffectRanges {
            always_taker_effect: Interval::point(0.0),
            never_taker_effect: Interval::point(0.0),
        };
        assert!(matches!(
            ate_sensitivity(&law, &ranges),
            Err(Error::WeakInstrument(_))
        ));
    }

    #[test]
    fn perfect_compliance() {
        let law = law_from_rates([0.0, 1.0], [0.2, 0.5]);
        let est = iv_estimates(&law);
        assert_eq!(est.complier_share, 1.0);
        assert!((est.wald.unwrap() - est.itt_y).abs() < 1e-15);
        let wide = StrataEffectRanges {
            always_taker_effect: Interval::new(-1.0, 1.0).unwrap(),
            never_taker_effect: Interval::new(-1.0, 1.0).unwrap(),
        };
        let s = ate_sensitivity(&law, &wide).unwrap();
        assert_eq!(s.ate.lo, s.ate.hi);
        assert!((s.ate.lo - est.wald.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_ranges_recover_the_wald_ratio() {
        let law = law_from_rates([0.25, 0.6], [0.3, 0.2]);
        let wald = iv_estimates(&law).wald.unwrap();
        let ranges = StrataEffectRanges {
            always_taker_effect: Interval::point(wald),
            never_taker_effect: Interval::point(wald),
        };
        let s = ate_sensitivity(&law, &ranges).unwrap();
        assert!((s.ate.lo - wald).abs() < 1e-12);
        assert!((s.ate.hi - wald).abs() < 1e-12);
    }

    #[test]
    fn ranges_are_validated() {
        let law = law_from_rates([0.25, 0.6], [0.3, 0.2]);
        let bad = StrataEffectRanges {
            always_taker_effect: Interval { lo: -1.5, hi: 0.0 },
            never_taker_effect: Interval::point(0.0),
        };
        assert!(matches!(
            ate_sensitivity(&law, &bad),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Interval::new(0.5, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn width_is_share_weighted_range_width(
            t0 in 0.0..0.5f64, dt in 0.05..0.5f64, y0 in 0.0..1.0f64, y1 in 0.0..1.0f64,
            a in -1.0..1.0f64, aw in 0.0..1.0f64, n in -1.0..1.0f64, nw in 0.0..1.0f64,
        ) {
            let law = law_from_rates([t0, t0 + dt], [y0, y1]);
            let ranges = StrataEffectRanges {
                always_taker_effect: Interval { lo: a, hi: (a + aw).min(1.0) },
                never_taker_effect: Interval { lo: n, hi: (n + nw).min(1.0) },
            };
            let s = ate_sensitivity(&law, &ranges).unwrap();
            let est = iv_estimates(&law);
            let expected = est.always_taker_share * ranges.always_taker_effect.width()
                + est.never_taker_share * ranges.never_taker_effect.width();
            prop_assert!((s.ate.width() - expected).abs() < 1e-12);
        }

        #[test]
        fn flipping_outcome_coding_negates_wald(
            t0 in 0.0..0.5f64, dt in 0.05..0.5f64, y0 in 0.0..1.0f64, y1 in 0.0..1.0f64,
        ) {
            let law = law_from_rates([t0, t0 + dt], [y0, y1]);
            let mut flipped: CellTable<f64> = Default::default();
            for (z, x, y) in cells() {
                flipped[z][x][y] = law.prob(z, x, 1 - y);
            }
            let flipped = ObservedLaw::new(flipped).unwrap();
            let a = iv_estimates(&law);
            let b = iv_estimates(&flipped);
            prop_assert!((a.itt_y + b.itt_y).abs() < 1e-12);
            prop_assert!((a.wald.unwrap() + b.wald.unwrap()).abs() < 1e-9);
        }
    }
}
