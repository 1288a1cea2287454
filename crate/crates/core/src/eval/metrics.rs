use std::collections::BTreeSet;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::dataset::MovieId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

/// Counts over `universe`, which must contain both the recommended and the relevant items.
pub fn confusion(
    recommended: &BTreeSet<MovieId>,
    relevant: &BTreeSet<MovieId>,
    universe: &BTreeSet<MovieId>,
) -> Result<ConfusionCounts> {
    if let Some(m) = recommended
        .iter()
        .chain(relevant)
        .find(|m| !universe.contains(m))
    {
        return Err(Error::Domain(format!(
            "movie {m} is outside the evaluated universe"
        )));
    }
    let tp = recommended.intersection(relevant).count() as u64;
    let fp = recommended.len() as u64 - tp;
    let fn_ = relevant.len() as u64 - tp;
    Ok(ConfusionCounts {
        tp,
        fp,
        tn: universe.len() as u64 - tp - fp - fn_,
        fn_,
    })
}

/// A ratio metric; `undefined` marks a zero denominator, reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub undefined: bool,
}

fn ratio(num: u64, den: u64) -> Metric {
    if den == 0 {
        Metric {
            value: 0.0,
            undefined: true,
        }
    } else {
        Metric {
            value: num as f64 / den as f64,
            undefined: false,
        }
    }
}

pub fn precision(c: &ConfusionCounts) -> Metric {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall(c: &ConfusionCounts) -> Metric {
    ratio(c.tp, c.tp + c.fn_)
}

pub fn accuracy(c: &ConfusionCounts) -> Metric {
    ratio(c.tp + c.tn, c.total())
}

pub fn f1(c: &ConfusionCounts) -> Metric {
    f1_from(precision(c).value, recall(c).value)
}

pub fn f1_from(p: f64, r: f64) -> Metric {
    if p + r == 0.0 {
        Metric {
            value: 0.0,
            undefined: true,
        }
    } else {
        Metric {
            value: 2.0 * p * r / (p + r),
            undefined: false,
        }
    }
}

/// Affine map from a similarity score to the 1-5 rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingPredictor {
    pub slope: f64,
    pub intercept: f64,
}

impl RatingPredictor {
    pub fn predict(&self, score: f64) -> f64 {
        (self.slope * score + self.intercept).clamp(1.0, 5.0)
    }
}

/// Least-squares fit of `rating ~ a * score + b`. Constant scores give `a = 0`.
pub fn calibrate_predictor(pairs: &[(f64, f64)]) -> Result<RatingPredictor> {
    if pairs.is_empty() {
        return Err(Error::Calibration("no (score, rating) pairs to fit".into()));
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Ok(RatingPredictor {
            slope: 0.0,
            intercept: mean_y,
        });
    }
    let slope = sxy / sxx;
    Ok(RatingPredictor {
        slope,
        intercept: mean_y - slope * mean_x,
    })
}

/// Root mean squared error of `(predicted, actual)` pairs, predictions clamped to [1, 5].
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Domain("RMSE of an empty pair list".into()));
    }
    let sse: f64 = pairs
        .iter()
        .map(|&(p, a)| {
            let e = p.clamp(1.0, 5.0) - a;
            e * e
        })
        .sum();
    Ok((sse / pairs.len() as f64).sqrt())
}

/// Rank-sum AUC over `(score, is_positive)` items. Ranks ascend from the
/// lowest score; tied scores share their average rank.
pub fn auc(items: &[(f64, bool)]) -> Result<f64> {
    let m = items.iter().filter(|i| i.1).count();
    let n = items.len() - m;
    if m == 0 || n == 0 {
        return Err(Error::UndefinedAuc(format!(
            "{m} positives and {n} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].0.total_cmp(&items[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && items[order[j + 1]].0.total_cmp(&items[order[i]].0).is_eq() {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| items[k].1).count() as f64;
        i = j + 1;
    }
    let (m, n) = (m as f64, n as f64);
    Ok((rank_sum - m * (m + 1.0) / 2.0) / (m * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn confusion_set_arithmetic() {
        let universe: BTreeSet<MovieId> = (1..=10).collect();
        let c = confusion(&[1, 2, 3].into(), &[3, 4].into(), &universe).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 2,
                tn: 6,
                fn_: 1
            }
        );
        let same = confusion(&[3, 4].into(), &[3, 4].into(), &universe).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        assert_eq!(
            confusion(&[1].into(), &[2].into(), &universe).unwrap().tp,
            0
        );
        assert!(confusion(&[11].into(), &[2].into(), &universe).is_err());
    }

    #[test]
    fn ratio_metrics() {
        let c = ConfusionCounts {
            tp: 55,
            fp: 45,
            tn: 0,
            fn_: 0,
        };
        assert_eq!(precision(&c).value, 0.55);
        assert_eq!(accuracy(&c).value, precision(&c).value);
        assert_eq!(f1_from(0.5, 0.5).value, 0.5);
        assert!((f1_from(0.6, 0.4).value - 0.48).abs() < 1e-15);
        let empty = ConfusionCounts::default();
        assert!(precision(&empty).undefined && recall(&empty).undefined && f1(&empty).undefined);
        assert_eq!(precision(&empty).value, 0.0);
    }

    #[test]
    fn calibration_cases() {
        let p = calibrate_predictor(&[(0.0, 1.0), (1.0, 5.0)]).unwrap();
        assert!((p.slope - 4.0).abs() < 1e-12 && (p.intercept - 1.0).abs() < 1e-12);
        let flat = calibrate_predictor(&[(0.3, 3.0), (0.3, 4.0), (0.3, 2.6)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!((flat.intercept - 3.2).abs() < 1e-12);
        assert!(matches!(
            calibrate_predictor(&[]),
            Err(Error::Calibration(_))
        ));
        assert_eq!(p.predict(10.0), 5.0);
        assert_eq!(p.predict(-10.0), 1.0);
    }

    #[test]
    fn calibration_matches_normal_equations() {
        let mut rng = rng_for(8, &[]);
        for _ in 0..50 {
            let pairs: Vec<(f64, f64)> = (0..30)
                .map(|_| {
                    (
                        rng.random::<f64>() * 2.0 - 1.0,
                        1.0 + rng.random::<f64>() * 4.0,
                    )
                })
                .collect();
            // [sum x^2, sum x; sum x, n] [a; b] = [sum xy; sum y], solved by Cramer's rule
            let (n, sx, sy) = (
                pairs.len() as f64,
                pairs.iter().map(|p| p.0).sum::<f64>(),
                pairs.iter().map(|p| p.1).sum::<f64>(),
            );
            let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
            let det = sxx * n - sx * sx;
            let a = (sxy * n - sx * sy) / det;
            let b = (sxx * sy - sx * sxy) / det;
            let fit = calibrate_predictor(&pairs).unwrap();
            assert!((fit.slope - a).abs() < 1e-9 && (fit.intercept - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rmse_cases() {
        assert!((rmse(&[(5.0, 4.0), (3.0, 3.0)]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[(2.0, 2.0)]).unwrap(), 0.0);
        assert_eq!(rmse(&[(9.0, 5.0)]).unwrap(), 0.0);
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn auc_cases() {
        let items = [(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        assert_eq!(auc(&items).unwrap(), 1.0);
        let reversed: Vec<(f64, bool)> = items.iter().map(|&(s, p)| (-s, p)).collect();
        assert_eq!(auc(&reversed).unwrap(), 0.0);
        assert_eq!(auc(&[(1.0, true), (1.0, false)]).unwrap(), 0.5);
        assert!(matches!(auc(&[(1.0, true)]), Err(Error::UndefinedAuc(_))));
    }

    fn concordance(items: &[(f64, bool)]) -> f64 {
        let (mut num, mut m, mut n) = (0.0, 0.0, 0.0);
        for a in items.iter().filter(|i| i.1) {
            m += 1.0;
            for b in items.iter().filter(|i| !i.1) {
                if a.0 > b.0 {
                    num += 1.0;
                } else if a.0 == b.0 {
                    num += 0.5;
                }
            }
        }
        for _ in items.iter().filter(|i| !i.1) {
            n += 1.0;
        }
        num / (m * n)
    }

    proptest! {
        #[test]
        fn auc_equals_concordance(raw in prop::collection::vec((0u8..6, any::<bool>()), 2..40)) {
            let items: Vec<(f64, bool)> = raw.iter().map(|&(s, p)| (s as f64 / 2.0, p)).collect();
            let m = items.iter().filter(|i| i.1).count();
            prop_assume!(m > 0 && m < items.len());
            let a = auc(&items).unwrap();
            prop_assert_eq!(a, concordance(&items));
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn auc_negation_without_ties(scores in prop::collection::btree_set(-1000i32..1000, 2..30), seed in any::<u64>()) {
            let mut rng = rng_for(seed, &[]);
            let mut items: Vec<(f64, bool)> = scores.iter().map(|&s| (s as f64, rng.random::<bool>())).collect();
            items[0].1 = true;
            items[1].1 = false;
            let neg: Vec<(f64, bool)> = items.iter().map(|&(s, p)| (-s, p)).collect();
            prop_assert!((auc(&items).unwrap() + auc(&neg).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn metric_bounds(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let c = ConfusionCounts { tp, fp, tn, fn_ };
            for m in [precision(&c), recall(&c), accuracy(&c), f1(&c)] {
                prop_assert!((0.0..=1.0).contains(&m.value));
            }
        }

        #[test]
        fn rmse_permutation_invariant(mut pairs in prop::collection::vec((0.0f64..6.0, 1.0f64..5.0), 1..20)) {
            let a = rmse(&pairs).unwrap();
            prop_assert!(a >= 0.0);
            pairs.reverse();
            prop_assert!((rmse(&pairs).unwrap() - a).abs() < 1e-12);
            let same: Vec<(f64, f64)> = pairs.iter().map(|p| (p.1, p.1)).collect();
            prop_assert_eq!(rmse(&same).unwrap(), 0.0);
        }
    }
}
