//! Response classifiers behind one fit/predict contract.

mod gbt;
mod linear;
mod rbf;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use gbt::{gbt_fit, leaf_gradient_hessian, leaf_loss, newton_leaf_value, GbtModel, GbtParams, Node, Tree};
pub use linear::{
    logistic_gradient, logistic_loss, logreg_fit, platt_fit, svm_fit, LinearModel, LogregParams, SvmModel,
    SvmParams,
};
pub use rbf::{design_matrix, phi, rbf_fit, OutputLink, RbfModel, RbfParams, WidthRule};

use crate::error::{Error, Result};
use crate::tabular::FeatureMatrix;

/// Version stamp written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Slack allowed when checking that inputs lie in their scaled range.
pub const SCALE_SLACK: f64 = 1e-9;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_binary(labels: &[u8], n_rows: usize) -> Result<()> {
    crate::preprocess::check_labels(labels, n_rows)?;
    if n_rows == 0 {
        return Err(Error::Config("cannot fit a model on zero rows".into()));
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, m: &FeatureMatrix) -> Result<()> {
    if m.n_cols() != expected {
        return Err(Error::Dimension {
            expected,
            got: m.n_cols(),
        });
    }
    Ok(())
}

/// Every column must sit inside its min-max target range, or inside
/// [-1, 1] when the matrix carries no scaling record for it.
pub(crate) fn check_scaled(m: &FeatureMatrix) -> Result<()> {
    for (j, name) in m.column_names().iter().enumerate() {
        let (lo, hi) = m
            .scaling()
            .and_then(|s| s.get(name))
            .map_or((-1.0, 1.0), |c| (c.t_min.min(c.t_max), c.t_min.max(c.t_max)));
        if let Some(x) = m.column(j).into_iter().find(|&x| x < lo - SCALE_SLACK || x > hi + SCALE_SLACK) {
            return Err(Error::Precondition(format!(
                "column `{name}` holds {x}, outside the scaled range [{lo}, {hi}]; min-max scale the inputs first"
            )));
        }
    }
    Ok(())
}

/// Model family and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Rbf(RbfParams),
    Logreg(LogregParams),
    LinearSvm(SvmParams),
    Gbt(GbtParams),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Rbf(_) => "rbf",
            Family::Logreg(_) => "logreg",
            Family::LinearSvm(_) => "linear_svm",
            Family::Gbt(_) => "gbt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    /// Display name in reports; defaults to the family name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl PredictorSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        Self { family, seed, name: None }
    }

    pub fn rbf(p: RbfParams) -> Self {
        Self::new(Family::Rbf(p), 0)
    }

    pub fn logreg(p: LogregParams) -> Self {
        Self::new(Family::Logreg(p), 0)
    }

    pub fn svm(p: SvmParams) -> Self {
        Self::new(Family::LinearSvm(p), 0)
    }

    pub fn gbt(p: GbtParams) -> Self {
        Self::new(Family::Gbt(p), 0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.family.name().to_string())
    }

    pub fn fit(&self, m: &FeatureMatrix, labels: &[u8]) -> Result<Model> {
        Ok(match &self.family {
            Family::Rbf(p) => Model::Rbf(rbf_fit(m, labels, p, self.seed)?),
            Family::Logreg(p) => Model::Logreg(logreg_fit(m, labels, p, self.seed)?),
            Family::LinearSvm(p) => Model::LinearSvm(svm_fit(m, labels, p, self.seed)?),
            Family::Gbt(p) => Model::Gbt(gbt_fit(m, labels, p, self.seed)?),
        })
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Rbf(RbfModel),
    Logreg(LinearModel),
    LinearSvm(SvmModel),
    Gbt(GbtModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: u8,
}

/// Label 1 iff `probability >= threshold`.
pub fn to_predictions(probabilities: &[f64], threshold: f64) -> Vec<Prediction> {
    probabilities
        .iter()
        .map(|&p| Prediction {
            probability: p,
            label: u8::from(p >= threshold),
        })
        .collect()
}

impl Model {
    pub fn family(&self) -> &'static str {
        match self {
            Model::Rbf(_) => "rbf",
            Model::Logreg(_) => "logreg",
            Model::LinearSvm(_) => "linear_svm",
            Model::Gbt(_) => "gbt",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Rbf(m) => m.n_features(),
            Model::Logreg(m) => m.weights.len(),
            Model::LinearSvm(m) => m.weights.len(),
            Model::Gbt(m) => m.n_features,
        }
    }

    pub fn predict_proba(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        match self {
            Model::Rbf(r) => r.predict_proba(m),
            Model::Logreg(l) => l.predict_proba(m),
            Model::LinearSvm(s) => s.predict_proba(m),
            Model::Gbt(g) => g.predict_proba(m),
        }
    }

    pub fn predict(&self, m: &FeatureMatrix, threshold: f64) -> Result<Vec<Prediction>> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!("threshold must be in [0, 1], got {threshold}")));
        }
        Ok(to_predictions(&self.predict_proba(m)?, threshold))
    }
}

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub spec: PredictorSpec,
    /// Training feature names, in column order.
    pub features: Vec<String>,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(spec: PredictorSpec, features: Vec<String>, model: Model) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            spec,
            features,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_contract() {
        let p = to_predictions(&[0.5, 0.49, 0.99], 0.5);
        assert_eq!(p.iter().map(|p| p.label).collect::<Vec<_>>(), vec![1, 0, 1]);
        assert!(to_predictions(&[0.3, 0.999], 1.0).iter().all(|p| p.label == 0));
    }

    #[test]
    fn spec_json_shape() {
        let spec: PredictorSpec =
            serde_json::from_str(r#"{"family":"gbt","n_trees":7,"seed":3}"#).unwrap();
        assert_eq!(spec.family, Family::Gbt(GbtParams { n_trees: 7, ..Default::default() }));
        assert_eq!(spec.seed, 3);
        assert_eq!(spec.label(), "gbt");
        let back: PredictorSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let rbf: PredictorSpec =
            serde_json::from_str(r#"{"family":"rbf","centers":4,"width":{"rule":"fixed","a":0.5}}"#).unwrap();
        assert!(matches!(rbf.family, Family::Rbf(RbfParams { centers: 4, width: WidthRule::Fixed { a } , .. }) if a == 0.5));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
