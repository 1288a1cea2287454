use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{baseline_popularity, popularity_scores, UserCf};
use super::metrics::{
    accuracy, auc, calibrate_predictor, confusion, f1, precision, recall, rmse, ConfusionCounts,
};
use super::split::{split, SplitSpec};
use crate::dataset::{Catalog, MovieId, ProfileMap, RatingTable, UserId};
use crate::error::{Error, Result};
use crate::method::{run_target, MethodConfig, Prepared};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub split: SplitSpec,
    /// Each range evaluates the users with the lowest N ids.
    pub user_ranges: Vec<usize>,
    pub k: usize,
    /// Test ratings at or above this count as relevant for precision and recall.
    pub relevance_threshold: u8,
    /// Test ratings at or above this are the positives for AUC.
    pub auc_threshold: u8,
    /// Evaluate only the first this-many users of each range (all of them when unset).
    pub max_targets_per_range: Option<usize>,
    pub cf_neighbors: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            split: SplitSpec::default(),
            user_ranges: vec![1000, 2000, 3000, 4000, 5000, 6040],
            k: 10,
            relevance_threshold: 5,
            auc_threshold: 4,
            max_targets_per_range: None,
            cf_neighbors: 20,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.user_ranges.is_empty() || self.user_ranges.contains(&0) {
            return Err(Error::Config(
                "user_ranges must be non-empty and positive".into(),
            ));
        }
        for t in [self.relevance_threshold, self.auc_threshold] {
            if !(1..=5).contains(&t) {
                return Err(Error::Config(format!("rating threshold {t} outside 1..=5")));
            }
        }
        if self.max_targets_per_range == Some(0) || self.cf_neighbors == 0 {
            return Err(Error::Config(
                "max_targets_per_range and cf_neighbors must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Utv,
    Popularity,
    UserCf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Utv, ModelKind::Popularity, ModelKind::UserCf];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Utv => "UTV",
            ModelKind::Popularity => "Popularity",
            ModelKind::UserCf => "UserCF",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Metrics of one model on one user range, averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeMetrics {
    pub user_count: usize,
    /// Targets evaluated per repetition.
    pub targets: usize,
    /// Targets for which the model produced nothing, summed over repetitions.
    pub failed_targets: usize,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    /// Calibrated-score RMSE; absent when no held-out item had a score.
    pub rmse: Option<f64>,
    /// RMSE of predicting the mean calibration rating on the same pairs.
    pub global_mean_rmse: Option<f64>,
    /// Mean per-target AUC over targets where it is defined.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub rows: Vec<RangeMetrics>,
    pub avg: RangeMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub user_ranges: Vec<usize>,
    pub repetitions: usize,
    pub k: usize,
    pub relevance_threshold: u8,
    pub auc_threshold: u8,
    pub models: Vec<ModelReport>,
}

impl EvaluationReport {
    pub fn model(&self, kind: ModelKind) -> &ModelReport {
        self.models
            .iter()
            .find(|m| m.model == kind)
            .expect("all models are reported")
    }
}

#[derive(Debug, Default)]
struct TargetOutcome {
    confusion: ConfusionCounts,
    auc: Option<f64>,
    train_pairs: Vec<(f64, f64)>,
    test_pairs: Vec<(f64, f64)>,
    failed: bool,
}

struct Split<'a> {
    train: &'a RatingTable,
    test: &'a RatingTable,
    movies: &'a BTreeSet<MovieId>,
}

fn score_target(
    target: UserId,
    scores: &HashMap<MovieId, f64>,
    top: &[MovieId],
    data: &Split<'_>,
    config: &EvalConfig,
) -> Result<TargetOutcome> {
    let train_items = data.train.rated_movies(target);
    let universe: BTreeSet<MovieId> = data.movies.difference(&train_items).copied().collect();
    let test: HashMap<MovieId, u8> = data
        .test
        .user_ratings(target)
        .map(|r| (r.movie_id, r.rating))
        .collect();
    let relevant: BTreeSet<MovieId> = test
        .iter()
        .filter(|(_, &r)| r >= config.relevance_threshold)
        .map(|(&m, _)| m)
        .collect();
    let recommended: BTreeSet<MovieId> = top.iter().copied().collect();
    let confusion = confusion(&recommended, &relevant, &universe)?;

    let items: Vec<(f64, bool)> = universe
        .iter()
        .map(|m| {
            let score = scores.get(m).copied().unwrap_or(f64::NEG_INFINITY);
            (
                score,
                test.get(m).is_some_and(|&r| r >= config.auc_threshold),
            )
        })
        .collect();
    let auc = match auc(&items) {
        Ok(a) => Some(a),
        Err(Error::UndefinedAuc(_)) => None,
        Err(e) => return Err(e),
    };
    let pairs = |table: &RatingTable| -> Vec<(f64, f64)> {
        table
            .user_ratings(target)
            .filter_map(|r| scores.get(&r.movie_id).map(|&s| (s, r.rating as f64)))
            .collect()
    };
    Ok(TargetOutcome {
        confusion,
        auc,
        train_pairs: pairs(data.train),
        test_pairs: pairs(data.test),
        failed: false,
    })
}

#[derive(Debug, Clone, Default)]
struct RepMetrics {
    precision: f64,
    recall: f64,
    accuracy: f64,
    f1: f64,
    rmse: Option<f64>,
    global_mean_rmse: Option<f64>,
    auc: Option<f64>,
    targets: usize,
    failed: usize,
}

fn reduce(outcomes: &[TargetOutcome]) -> Result<RepMetrics> {
    let mut c = ConfusionCounts::default();
    let mut aucs = Vec::new();
    let (mut train_pairs, mut test_pairs) = (Vec::new(), Vec::new());
    for o in outcomes {
        c += o.confusion;
        aucs.extend(o.auc);
        train_pairs.extend_from_slice(&o.train_pairs);
        test_pairs.extend_from_slice(&o.test_pairs);
    }
    let (mut rmse_value, mut baseline_rmse) = (None, None);
    if !train_pairs.is_empty() && !test_pairs.is_empty() {
        let predictor = calibrate_predictor(&train_pairs)?;
        let mean = train_pairs.iter().map(|p| p.1).sum::<f64>() / train_pairs.len() as f64;
        let predicted: Vec<(f64, f64)> = test_pairs
            .iter()
            .map(|&(s, r)| (predictor.predict(s), r))
            .collect();
        let constant: Vec<(f64, f64)> = test_pairs.iter().map(|&(_, r)| (mean, r)).collect();
        rmse_value = Some(rmse(&predicted)?);
        baseline_rmse = Some(rmse(&constant)?);
    }
    Ok(RepMetrics {
        precision: precision(&c).value,
        recall: recall(&c).value,
        accuracy: accuracy(&c).value,
        f1: f1(&c).value,
        rmse: rmse_value,
        global_mean_rmse: baseline_rmse,
        auc: mean_of(&aucs),
        targets: outcomes.len(),
        failed: outcomes.iter().filter(|o| o.failed).count(),
    })
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    mean_of(&values.flatten().collect::<Vec<_>>())
}

fn average_rows(user_count: usize, rows: &[RangeMetrics]) -> RangeMetrics {
    let mean = |f: fn(&RangeMetrics) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    RangeMetrics {
        user_count,
        targets: rows.iter().map(|r| r.targets).sum::<usize>() / rows.len().max(1),
        failed_targets: rows.iter().map(|r| r.failed_targets).sum(),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        accuracy: mean(|r| r.accuracy),
        f1: mean(|r| r.f1),
        rmse: mean_opt(rows.iter().map(|r| r.rmse)),
        global_mean_rmse: mean_opt(rows.iter().map(|r| r.global_mean_rmse)),
        auc: mean_opt(rows.iter().map(|r| r.auc)),
    }
}

fn utv_outcome(
    target: UserId,
    prepared: &Prepared<'_>,
    method: &MethodConfig,
    data: &Split<'_>,
    config: &EvalConfig,
) -> Result<TargetOutcome> {
    match run_target(target, prepared, method) {
        Ok(run) => {
            let scores: HashMap<MovieId, f64> =
                run.scored.iter().map(|r| (r.movie_id, r.score)).collect();
            let top: Vec<MovieId> = run
                .top_k(config.k, data.train)
                .iter()
                .map(|r| r.movie_id)
                .collect();
            score_target(target, &scores, &top, data, config)
        }
        Err(e @ (Error::Utv(_) | Error::Build(_) | Error::Selection(_) | Error::NotFound(_))) => {
            log::warn!("user {target}: no recommendation ({e})");
            let mut o = score_target(target, &HashMap::new(), &[], data, config)?;
            o.failed = true;
            Ok(o)
        }
        Err(e) => Err(e),
    }
}

/// Runs every model on every range and repetition.
///
/// For a range of N users the lowest N user ids are split per user into
/// train and test. Each model ranks movies per target from the training part
/// only; recommendations are its top `k` movies the target did not rate in
/// training. Confusion counts are pooled over targets, AUC is averaged over
/// targets, and RMSE comes from one affine calibration fitted on all targets'
/// training items.
pub fn evaluate(
    ratings: &RatingTable,
    profiles: Option<&ProfileMap>,
    catalog: &Catalog,
    method: &MethodConfig,
    config: &EvalConfig,
) -> Result<EvaluationReport> {
    config.validate()?;
    method.validate()?;
    let available = ratings.user_count();
    if let Some(&too_big) = config.user_ranges.iter().find(|&&n| n > available) {
        return Err(Error::Range(format!(
            "range of {too_big} users exceeds the {available} in the data"
        )));
    }

    let mut per_model: HashMap<ModelKind, Vec<RangeMetrics>> = HashMap::new();
    for &n in &config.user_ranges {
        let subset = ratings.first_users(n);
        let movies: BTreeSet<MovieId> = subset.movies().collect();
        let mut reps: HashMap<ModelKind, Vec<RepMetrics>> = HashMap::new();
        for rep in 0..config.split.repetitions {
            let (train, test) = split(&subset, &config.split, rep)?;
            let prepared = Prepared::new(&train, profiles, catalog, method.top_n_popular)?;
            let data = Split {
                train: &train,
                test: &test,
                movies: &movies,
            };
            let targets: Vec<UserId> = test
                .users()
                .take(config.max_targets_per_range.unwrap_or(usize::MAX))
                .collect();
            log::info!("range {n}, repetition {rep}: {} targets", targets.len());

            let utv = targets
                .par_iter()
                .map(|&t| utv_outcome(t, &prepared, method, &data, config))
                .collect::<Result<Vec<_>>>()?;

            let pop_scores: HashMap<MovieId, f64> = popularity_scores(&prepared.popularity)
                .into_iter()
                .map(|s| (s.movie_id, s.score))
                .collect();
            let popularity = targets
                .iter()
                .map(|&t| {
                    let top: Vec<MovieId> =
                        baseline_popularity(&train, &prepared.popularity, t, config.k)
                            .iter()
                            .map(|s| s.movie_id)
                            .collect();
                    score_target(t, &pop_scores, &top, &data, config)
                })
                .collect::<Result<Vec<_>>>()?;

            let cf = UserCf::new(&train, config.cf_neighbors);
            let user_cf = targets
                .par_iter()
                .map(|&t| {
                    let scored = cf.scores(t);
                    let (scores, top): (HashMap<MovieId, f64>, Vec<MovieId>) = if scored.is_empty()
                    {
                        let top = baseline_popularity(&train, &prepared.popularity, t, config.k);
                        (pop_scores.clone(), top.iter().map(|s| s.movie_id).collect())
                    } else {
                        let top = scored
                            .iter()
                            .filter(|s| train.rating(t, s.movie_id).is_none())
                            .take(config.k)
                            .map(|s| s.movie_id)
                            .collect();
                        (scored.iter().map(|s| (s.movie_id, s.score)).collect(), top)
                    };
                    score_target(t, &scores, &top, &data, config)
                })
                .collect::<Result<Vec<_>>>()?;

            for (kind, outcomes) in [
                (ModelKind::Utv, utv),
                (ModelKind::Popularity, popularity),
                (ModelKind::UserCf, user_cf),
            ] {
                reps.entry(kind).or_default().push(reduce(&outcomes)?);
            }
        }
        for kind in ModelKind::ALL {
            let r = &reps[&kind];
            let count = r.len() as f64;
            let mean = |f: fn(&RepMetrics) -> f64| r.iter().map(f).sum::<f64>() / count;
            per_model.entry(kind).or_default().push(RangeMetrics {
                user_count: n,
                targets: r.first().map_or(0, |x| x.targets),
                failed_targets: r.iter().map(|x| x.failed).sum(),
                precision: mean(|x| x.precision),
                recall: mean(|x| x.recall),
                accuracy: mean(|x| x.accuracy),
                f1: mean(|x| x.f1),
                rmse: mean_opt(r.iter().map(|x| x.rmse)),
                global_mean_rmse: mean_opt(r.iter().map(|x| x.global_mean_rmse)),
                auc: mean_opt(r.iter().map(|x| x.auc)),
            });
        }
    }

    let models = ModelKind::ALL
        .into_iter()
        .map(|kind| {
            let rows = per_model.remove(&kind).unwrap_or_default();
            let avg = average_rows(0, &rows);
            ModelReport {
                model: kind,
                rows,
                avg,
            }
        })
        .collect();
    Ok(EvaluationReport {
        user_ranges: config.user_ranges.clone(),
        repetitions: config.split.repetitions,
        k: config.k,
        relevance_threshold: config.relevance_threshold,
        auc_threshold: config.auc_threshold,
        models,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.4}"))
}

type Extract = fn(&RangeMetrics) -> Option<f64>;

const METRICS: [(&str, Extract); 6] = [
    ("precision", |r| Some(r.precision)),
    ("recall", |r| Some(r.recall)),
    ("accuracy", |r| Some(r.accuracy)),
    ("f1", |r| Some(r.f1)),
    ("rmse", |r| r.rmse),
    ("auc", |r| r.auc),
];

/// One CSV per metric, laid out as models by user ranges plus an AVG column,
/// and a plain-text summary. Returns `(file name, contents)` pairs.
pub fn render_report(report: &EvaluationReport) -> Vec<(String, String)> {
    let header = {
        let mut h = String::from("model");
        for n in &report.user_ranges {
            let _ = write!(h, ",{n}");
        }
        h.push_str(",AVG\n");
        h
    };
    let line = |label: &str, m: &ModelReport, f: fn(&RangeMetrics) -> Option<f64>| {
        let mut s = label.to_owned();
        for r in m.rows.iter().chain([&m.avg]) {
            let _ = write!(s, ",{}", cell(f(r)));
        }
        s.push('\n');
        s
    };

    let mut files = Vec::new();
    for (name, f) in METRICS {
        let mut csv = header.clone();
        for m in &report.models {
            csv.push_str(&line(m.model.label(), m, f));
        }
        if name == "rmse" {
            for m in &report.models {
                csv.push_str(&line(&format!("{} global mean", m.model.label()), m, |r| {
                    r.global_mean_rmse
                }));
            }
        }
        files.push((format!("{name}.csv"), csv));
    }

    let mut text = String::new();
    let _ = writeln!(
        text,
        "top-{} recommendations, relevant = rating >= {}, AUC positives = rating >= {}, {} repetition(s)",
        report.k, report.relevance_threshold, report.auc_threshold, report.repetitions
    );
    let _ = writeln!(text, "RMSE maps similarity scores to ratings with a least-squares line fitted on training items.");
    for (name, f) in METRICS {
        let _ = writeln!(text, "\n{name}");
        let _ = write!(text, "{:<12}", "model");
        for n in &report.user_ranges {
            let _ = write!(text, "{n:>10}");
        }
        let _ = writeln!(text, "{:>10}", "AVG");
        for m in &report.models {
            let _ = write!(text, "{:<12}", m.model.label());
            for r in m.rows.iter().chain([&m.avg]) {
                let _ = write!(text, "{:>10}", cell(f(r)));
            }
            let _ = writeln!(text);
        }
    }
    let _ = writeln!(text, "\ntargets per range and failed targets");
    for m in &report.models {
        let counts: Vec<String> = m
            .rows
            .iter()
            .map(|r| format!("{}/{}", r.targets, r.failed_targets))
            .collect();
        let _ = writeln!(text, "{:<12}{}", m.model.label(), counts.join(" "));
    }
    files.push(("summary.txt".to_owned(), text));
    files
}
