//! Train/test protocol, ranking and rating metrics, baselines and reports.

mod baselines;
mod harness;
mod metrics;
mod split;

pub use baselines::{baseline_popularity, baseline_user_cf, popularity_scores, ScoredItem, UserCf};
pub use harness::{
    evaluate, render_report, EvalConfig, EvaluationReport, ModelKind, ModelReport, RangeMetrics,
};
pub use metrics::{
    accuracy, auc, calibrate_predictor, confusion, f1, f1_from, precision, recall, rmse,
    ConfusionCounts, Metric, RatingPredictor,
};
pub use split::{split, SplitSpec};
