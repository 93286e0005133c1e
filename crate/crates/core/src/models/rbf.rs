use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_binary, check_dim, check_scaled};
use crate::clustering::kmeans_fit;
use crate::error::{Error, Result};
use crate::similarity::{sq_euclidean_unchecked, Measure};
use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WidthRule {
    /// The same width for every center.
    Fixed { a: f64 },
    /// Mean distance from a center to its `j` nearest fellow centers.
    MeanKnn { j: usize },
}

impl Default for WidthRule {
    fn default() -> Self {
        WidthRule::MeanKnn { j: 2 }
    }
}

/// How the linear output is turned into a probability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputLink {
    #[default]
    Clamp,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfParams {
    pub centers: usize,
    pub width: WidthRule,
    pub ridge: f64,
    pub link: OutputLink,
}

impl Default for RbfParams {
    fn default() -> Self {
        Self {
            centers: 30,
            width: WidthRule::default(),
            ridge: 1e-6,
            link: OutputLink::Clamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub link: OutputLink,
}

/// Gaussian basis value exp(-r^2 / a^2).
pub fn phi(x: &[f64], center: &[f64], width: f64) -> f64 {
    (-sq_euclidean_unchecked(x, center) / (width * width)).exp()
}

fn mean_pairwise(centers: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            sum += sq_euclidean_unchecked(&centers[i], &centers[j]).sqrt();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn widths(centers: &[Vec<f64>], rule: WidthRule, m: &FeatureMatrix) -> Result<Vec<f64>> {
    match rule {
        WidthRule::Fixed { a } => {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("RBF width must be > 0, got {a}")));
            }
            Ok(vec![a; centers.len()])
        }
        WidthRule::MeanKnn { j } => {
            if j == 0 {
                return Err(Error::Config("mean_knn width needs j >= 1".into()));
            }
            let mut fallback = mean_pairwise(centers);
            if fallback == 0.0 {
                // a lone center: spread of the training rows around it
                let c = &centers[0];
                fallback = (m.rows().map(|r| sq_euclidean_unchecked(r, c)).sum::<f64>() / m.n_rows() as f64).sqrt();
            }
            if !(fallback > 0.0) {
                fallback = 1.0;
            }
            Ok(centers
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let mut d: Vec<f64> = centers
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != k)
                        .map(|(_, o)| sq_euclidean_unchecked(c, o).sqrt())
                        .collect();
                    d.sort_by(f64::total_cmp);
                    let take = j.min(d.len());
                    let a = if take == 0 { 0.0 } else { d[..take].iter().sum::<f64>() / take as f64 };
                    if a > 0.0 {
                        a
                    } else {
                        fallback
                    }
                })
                .collect())
        }
    }
}

/// n x (N + 1) design: a bias column followed by one basis column per center.
pub fn design_matrix(m: &FeatureMatrix, centers: &[Vec<f64>], widths: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.n_rows(), centers.len() + 1, |i, k| {
        if k == 0 {
            1.0
        } else {
            phi(m.row(i), &centers[k - 1], widths[k - 1])
        }
    })
}

fn solve_weights(design: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let (n, p) = design.shape();
    if ridge > 0.0 {
        let mut normal = design.transpose() * design;
        for k in 1..p {
            normal[(k, k)] += ridge;
        }
        let rhs = design.transpose() * y;
        if let Some(ch) = normal.clone().cholesky() {
            return Ok(ch.solve(&rhs));
        }
        return normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("RBF output system is singular; increase ridge".into()));
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = f64::EPSILON * n.max(p) as f64 * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < n.min(p) {
        return Err(Error::Numerical(format!(
            "RBF design matrix has rank {rank} < {}; set ridge > 0",
            n.min(p)
        )));
    }
    svd.solve(y, tol)
        .map_err(|e| Error::Numerical(format!("RBF least squares failed: {e}")))
}

pub fn rbf_fit(m: &FeatureMatrix, labels: &[u8], params: &RbfParams, seed: u64) -> Result<RbfModel> {
    check_binary(labels, m.n_rows())?;
    check_scaled(m)?;
    if params.centers == 0 || params.centers > m.n_rows() {
        return Err(Error::Config(format!(
            "RBF center count must be in 1..={}, got {}",
            m.n_rows(),
            params.centers
        )));
    }
    if !(params.ridge >= 0.0) {
        return Err(Error::Config("ridge must be >= 0".into()));
    }
    let centers = kmeans_fit(m, params.centers, Measure::Euclidean, seed)?.centroids;
    let widths = widths(&centers, params.width, m)?;
    let design = design_matrix(m, &centers, &widths);
    let y = DVector::from_iterator(labels.len(), labels.iter().map(|&l| f64::from(l)));
    let w = solve_weights(&design, &y, params.ridge)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite RBF weights; increase ridge".into()));
    }
    Ok(RbfModel {
        centers,
        widths,
        weights: w.iter().skip(1).copied().collect(),
        bias: w[0],
        link: params.link,
    })
}

impl RbfModel {
    pub fn n_features(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    /// The raw linear-adder output for one row.
    pub fn output(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .centers
                .iter()
                .zip(&self.widths)
                .zip(&self.weights)
                .map(|((c, &a), &w)| w * phi(x, c, a))
                .sum::<f64>()
    }

    pub fn predict_proba(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        check_dim(self.n_features(), m)?;
        Ok(m.rows()
            .map(|r| {
                let u = self.output(r);
                match self.link {
                    OutputLink::Clamp => u.clamp(0.0, 1.0),
                    OutputLink::Sigmoid => super::sigmoid(u),
                }
            })
            .collect())
    }
}
