//! Value transformation: cleaning, imputation, scaling, feature
//! engineering, splitting, class balancing and feature selection.

mod clean;
mod engineer;
mod impute;
mod sampling;
mod scale;
mod select;
mod split;

pub use clean::{clean, quantile, CleaningReport, CleaningRule, RuleAction, RuleKind, RuleOutcome};
pub use engineer::{default_reference_year, engineer_features, LinearExpr, Recipe};
pub use impute::{impute, ImputeStrategy};
pub use sampling::{apply_balance, smote, undersample, Balance};
pub use scale::{apply_scaling, scale_minmax, unscale, ColumnScaling, ScalingParams};
pub use select::{select_features_filter, select_features_wrapper};
pub use split::{split, split_indices, LabeledPart, SplitSpec};

use crate::error::{Error, Result};

/// Validate a 0/1 label vector against a row count.
pub(crate) fn check_labels(labels: &[u8], n_rows: usize) -> Result<()> {
    if labels.len() != n_rows {
        return Err(Error::Dimension {
            expected: n_rows,
            got: labels.len(),
        });
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(Error::Config(format!(
            "label at position {i} is {}, expected 0 or 1",
            labels[i]
        )));
    }
    Ok(())
}
