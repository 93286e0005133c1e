//! Confusion metrics, cross-validation and model comparison.
//!
//! Class 1 is the positive class throughout.

mod compare;
mod cv;
mod metrics;
mod suspects;

pub use compare::{compare_models, evaluate_protocol, rank_entries, ComparisonEntry, ComparisonReport, Protocol, RunScore, Spread};
pub use cv::{cross_validate, cross_validate_with, evaluate_split, stratified_folds, CvOptions, FoldReport, SplitReport};
pub use metrics::{basic_metrics, confusion, evaluate, mcc, BasicMetrics, ConfusionCounts, EvalReport, SplitTag};
pub use suspects::{flag_mislabeled, MislabelReport, SuspectRow};
