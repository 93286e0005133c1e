//! Customer profiling toolkit.
//!
//! The crate covers the whole path from a raw marketing export to customer
//! segments and campaign-response predictions:
//!
//! * [`tabular`]: schemas, CSV ingestion and feature encoding
//! * [`preprocess`]: cleaning, imputation, min-max scaling, feature
//!   engineering, splitting, SMOTE/undersampling and feature selection
//! * [`similarity`]: distance measures shared by clustering and SMOTE
//! * [`rfm`]: recency/frequency/monetary scoring and segment labels
//! * [`clustering`]: k-means, silhouette, elbow, gap statistic, profiles
//! * [`models`]: RBF network, logistic regression, linear SVM, boosted trees
//! * [`evaluation`]: confusion metrics, MCC, cross-validation, comparison
//! * [`pipeline`]: the configurable end-to-end flow used by the CLI

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod rfm;
pub mod seed;
pub mod similarity;
pub mod synth;
pub mod tabular;

pub use error::{Error, ErrorClass, Result};
pub use tabular::{ColumnKind, ColumnSpec, Dataset, FeatureMatrix, Schema, Value};
