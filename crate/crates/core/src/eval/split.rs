use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{RatingRecord, RatingTable};
use crate::error::{Error, Result};
use crate::rng::rng_for;

const SPLIT_STREAM: u64 = 0x5B17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            repetitions: 10,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-user shuffled split. A user with `n >= 2` ratings keeps
/// `round(train_fraction * n)` of them for training, clamped to `1..=n-1`;
/// users with a single rating stay in training.
pub fn split(
    ratings: &RatingTable,
    spec: &SplitSpec,
    repetition: usize,
) -> Result<(RatingTable, RatingTable)> {
    let mut train = Vec::with_capacity(ratings.len());
    let mut test = Vec::new();
    for user in ratings.users() {
        let mut mine: Vec<RatingRecord> = ratings.user_ratings(user).cloned().collect();
        let n = mine.len();
        if n < 2 {
            train.extend(mine);
            continue;
        }
        let mut rng = rng_for(spec.seed, &[SPLIT_STREAM, repetition as u64, user as u64]);
        mine.shuffle(&mut rng);
        let keep = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        test.extend(mine.split_off(keep));
        train.extend(mine);
    }
    Ok((
        RatingTable::from_records(train)?,
        RatingTable::from_records(test)?,
    ))
}
