//! Damage decisions: the ensemble statistic τ, the midpoint threshold,
//! detection/false-alarm rates with ROC and histogram data, and the
//! localization-likelihood comparator.

pub mod evaluate;
pub mod likelihood;
pub mod statistic;
pub mod threshold;

pub use evaluate::{auc, evaluate, histogram, median, p_d_at, p_fa_at, roc_curve, DetectionReport, HistogramBin, RocPoint, ScoredSample};
pub use likelihood::{
    likelihood_statistic, likelihood_statistics, localization_error, train_likelihood_baseline, LikelihoodModel,
};
pub use statistic::{detection_statistic, detection_statistics, DetectionStatistic};
pub use threshold::{calibrate_threshold, classify, Threshold};
