//! K-means segmentation, cluster-validity indices and segment profiles.
//!
//! Centroids are always updated as coordinate means, also when the
//! assignment measure is not Euclidean. For L1 or cosine assignment this is
//! an approximation of the true minimizer.

mod kmeans;
mod profile;
mod validity;

pub use kmeans::{
    assign, kmeans_fit, kmeans_fit_with, kmeans_from_centroids, mean_distortion, wcss, Init, KMeansModel,
    KMeansParams,
};
pub use profile::{
    profile_segments, profile_segments_with, profile_table, ClusterProfile, NumericSummary, OverallShares,
    ProfileOptions, SegmentProfile,
};
pub use validity::{
    adjusted_rand_index, choose_gap_k, elbow, fit_curve, gap_statistic, gap_statistic_with_models, knee, silhouette,
    validity_report, Chosen, CurvePoint, ElbowCurve, GapPoint, GapResult, Silhouette, ValidityParams,
    ValidityReport,
};
