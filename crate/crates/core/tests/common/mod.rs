#![allow(dead_code)]

use ivpi_core::bounds::ResponseTypeDistribution;
use ivpi_core::model::{CellTable, ObservedLaw, TrialCounts};
use rand::Rng;

/// McDonald, Hiu and Tierney (1992) influenza vaccine encouragement trial,
/// indexed `[letter][vaccinated][hospitalized]`.
pub const FLU_COUNTS: CellTable<u64> = [[[1027, 99], [233, 30]], [[935, 84], [422, 31]]];

pub fn flu_counts() -> TrialCounts {
    TrialCounts::new(FLU_COUNTS).unwrap()
}

/// Rounds to two decimals, mapping -0.00 to 0.00.
pub fn two_decimals(v: f64) -> f64 {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Random distribution with a few response types zeroed out, so that some
/// generated laws sit on faces of the model.
pub fn sparse_distribution<R: Rng>(rng: &mut R, monotone: bool) -> ResponseTypeDistribution {
    let base = ResponseTypeDistribution::sample(rng, monotone);
    let mut v = base.as_vector();
    for _ in 0..rng.random_range(0..4) {
        let k = rng.random_range(0..16);
        v[k] = 0.0;
    }
    let total: f64 = v.iter().sum();
    if total == 0.0 {
        return base;
    }
    v.iter_mut().for_each(|x| *x /= total);
    ResponseTypeDistribution::from_vector(&v).unwrap()
}

/// Independent Dirichlet(1) draw for each arm, ignoring the IV model.
pub fn unrestricted_law<R: Rng>(rng: &mut R) -> ObservedLaw {
    let mut p: CellTable<f64> = Default::default();
    for arm in p.iter_mut() {
        let mut total = 0.0;
        for v in arm.iter_mut().flatten() {
            *v = -(1.0 - rng.random::<f64>()).ln();
            total += *v;
        }
        arm.iter_mut().flatten().for_each(|v| *v /= total);
    }
    ObservedLaw::new(p).unwrap()
}

/// Moves treated mass in opposite outcome directions across the two arms
/// until the instrumental inequality for `x = 1` is violated by `margin`.
pub fn perturb_to_violation(law: &ObservedLaw, margin: f64) -> ObservedLaw {
    let mut p = *law.table();
    // Arm 0 concentrates X=1 mass on Y=0, arm 1 on Y=1.
    let target = 0.5 + margin / 2.0;
    for (z, y) in [(0usize, 0usize), (1, 1)] {
        let have = p[z][1][y];
        let need = (target - have).max(0.0);
        let donors: f64 = (0..2)
            .flat_map(|x| (0..2).map(move |yy| (x, yy)))
            .filter(|&c| c != (1, y))
            .map(|(x, yy)| p[z][x][yy])
            .sum();
        let scale = (donors - need) / donors;
        for (x, yy) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            if (x, yy) != (1, y) {
                p[z][x][yy] *= scale;
            }
        }
        p[z][1][y] = have + need;
    }
    ObservedLaw::new(p).unwrap()
}
