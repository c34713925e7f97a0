use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CellTable, ObservedLaw, TrialCounts};

/// Draws `n` units: `Z ~ Bernoulli(instrument_split)`, then `(X, Y)` from the
/// law's arm for that `Z`.
pub fn sample_counts(
    law: &ObservedLaw,
    instrument_split: f64,
    n: u64,
    seed: u64,
) -> Result<TrialCounts> {
    draw(law, instrument_split, n, ChaCha8Rng::seed_from_u64(seed))
}

/// Independent replicates of [`sample_counts`]. Replicate `r` uses stream `r`
/// of the generator seeded with `root_seed`, so the output does not depend
/// on how replicates are scheduled.
pub fn sample_replicates(
    law: &ObservedLaw,
    instrument_split: f64,
    n: u64,
    replicates: usize,
    root_seed: u64,
) -> Result<Vec<TrialCounts>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
            rng.set_stream(r as u64);
            draw(law, instrument_split, n, rng)
        })
        .collect()
}

fn draw(
    law: &ObservedLaw,
    instrument_split: f64,
    n: u64,
    mut rng: ChaCha8Rng,
) -> Result<TrialCounts> {
    if !(0.0..=1.0).contains(&instrument_split) {
        return Err(Error::InvalidArgument(format!(
            "instrument split {instrument_split} lies outside [0, 1]"
        )));
    }
    let mut cells: CellTable<u64> = Default::default();
    for _ in 0..n {
        let z = usize::from(rng.random_bool(instrument_split));
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = (1, 1);
        'search: for x in 0..2 {
            for y in 0..2 {
                acc += law.prob(z, x, y);
                if u < acc {
                    chosen = (x, y);
                    break 'search;
                }
            }
        }
        cells[z][chosen.0][chosen.1] += 1;
    }
    TrialCounts::new(cells)
        .map_err(|e| Error::InvalidArgument(format!("sample of {n} units left an arm empty ({e})")))
}
