use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_binary, check_dim, sigmoid};
use crate::error::{Error, Result};
use crate::seed;
use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogregParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogregParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            learning_rate: 0.5,
            epochs: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { lambda: 1e-3, epochs: 50 }
    }
}

/// `sigmoid(w.x + b)`. `loss_trace` holds the training loss before the
/// first step and after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss_trace: Vec<f64>,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        check_dim(self.weights.len(), m)?;
        Ok(m.rows().map(|r| sigmoid(self.score(r))).collect())
    }
}

/// log(1 + e^z) without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus `l2/2 * |w|^2`; the bias is not penalized.
pub fn logistic_loss(w: &[f64], b: f64, m: &FeatureMatrix, y: &[u8], l2: f64) -> f64 {
    let n = m.n_rows() as f64;
    let data: f64 = m
        .rows()
        .zip(y)
        .map(|(r, &t)| {
            let z = b + w.iter().zip(r).map(|(a, v)| a * v).sum::<f64>();
            softplus(z) - f64::from(t) * z
        })
        .sum();
    data / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`logistic_loss`] with respect to `(w, b)`.
pub fn logistic_gradient(w: &[f64], b: f64, m: &FeatureMatrix, y: &[u8], l2: f64) -> (Vec<f64>, f64) {
    let n = m.n_rows() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (r, &t) in m.rows().zip(y) {
        let z = b + w.iter().zip(r).map(|(a, v)| a * v).sum::<f64>();
        let e = sigmoid(z) - f64::from(t);
        gb += e;
        for (g, v) in gw.iter_mut().zip(r) {
            *g += e * v;
        }
    }
    for (g, wj) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wj;
    }
    (gw, gb / n)
}

/// Full-batch gradient descent from zero weights. The seed is accepted for
/// interface symmetry; the procedure itself is deterministic.
pub fn logreg_fit(m: &FeatureMatrix, labels: &[u8], params: &LogregParams, _seed: u64) -> Result<LinearModel> {
    check_binary(labels, m.n_rows())?;
    if !(params.l2 >= 0.0) || !(params.learning_rate > 0.0) {
        return Err(Error::Config("logreg needs l2 >= 0 and learning_rate > 0".into()));
    }
    let mut w = vec![0.0; m.n_cols()];
    let mut b = 0.0;
    let mut trace = vec![logistic_loss(&w, b, m, labels, params.l2)];
    for _ in 0..params.epochs {
        let (gw, gb) = logistic_gradient(&w, b, m, labels, params.l2);
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= params.learning_rate * g;
        }
        b -= params.learning_rate * gb;
        let loss = logistic_loss(&w, b, m, labels, params.l2);
        if !loss.is_finite() {
            return Err(Error::Numerical(format!(
                "logistic regression diverged (loss {loss}); use a smaller learning_rate"
            )));
        }
        trace.push(loss);
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
        loss_trace: trace,
    })
}

/// Platt scaling: fit `sigmoid(a * s + b)` to labels with smoothed targets,
/// by Newton's method with step halving.
pub fn platt_fit(scores: &[f64], labels: &[u8]) -> (f64, f64) {
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l == 1 { t_pos } else { t_neg }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| {
                let z = a * s + b;
                softplus(z) - t * z
            })
            .sum()
    };
    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).recip().ln();
    let mut f = objective(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&s, &t) in scores.iter().zip(&targets) {
            let p = sigmoid(a * s + b);
            let d = p - t;
            let h = p * (1.0 - p);
            ga += d * s;
            gb += d;
            haa += h * s * s;
            hab += h * s;
            hbb += h;
        }
        if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
            break;
        }
        let det = haa * hbb - hab * hab;
        if !(det > 0.0) {
            break;
        }
        let da = -(hbb * ga - hab * gb) / det;
        let db = -(haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < f {
                a = na;
                b = nb;
                f = nf;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

/// Linear SVM: Pegasos stochastic sub-gradient descent on the hinge loss
/// with step `1/(lambda t)`. The bias is learned as the weight of a constant
/// feature. Probabilities come from Platt scaling of the training scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        check_dim(self.weights.len(), m)?;
        Ok(m.rows()
            .map(|r| sigmoid(self.platt_a * self.decision(r) + self.platt_b))
            .collect())
    }
}

pub fn svm_fit(m: &FeatureMatrix, labels: &[u8], params: &SvmParams, seed: u64) -> Result<SvmModel> {
    check_binary(labels, m.n_rows())?;
    if !(params.lambda > 0.0) {
        return Err(Error::Config("svm lambda must be > 0".into()));
    }
    let d = m.n_cols();
    let n = m.n_rows();
    // last slot is the bias weight
    let mut w = vec![0.0; d + 1];
    let radius = 1.0 / params.lambda.sqrt();
    let mut rng = seed::rng(seed);
    let mut t = 0u64;
    for _ in 0..params.epochs {
        for _ in 0..n {
            t += 1;
            let i = rng.random_range(0..n);
            let x = m.row(i);
            let y = if labels[i] == 1 { 1.0 } else { -1.0 };
            let eta = 1.0 / (params.lambda * t as f64);
            let margin = y * (w[d] + w[..d].iter().zip(x).map(|(a, v)| a * v).sum::<f64>());
            let shrink = 1.0 - eta * params.lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                for (wj, v) in w[..d].iter_mut().zip(x) {
                    *wj += eta * y * v;
                }
                w[d] += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                for v in w.iter_mut() {
                    *v *= s;
                }
            }
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("svm weights diverged".into()));
        }
    }
    let mut model = SvmModel {
        bias: w[d],
        weights: w[..d].to_vec(),
        platt_a: 1.0,
        platt_b: 0.0,
    };
    let scores: Vec<f64> = m.rows().map(|r| model.decision(r)).collect();
    let (a, b) = platt_fit(&scores, labels);
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numerical("svm probability calibration failed".into()));
    }
    model.platt_a = a;
    model.platt_b = b;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (FeatureMatrix, Vec<u8>) {
        let xs = [-1.0, -0.8, -0.6, -0.5, 0.5, 0.6, 0.8, 1.0];
        let m = FeatureMatrix::from_unnamed_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap();
        (m, xs.iter().map(|&x| u8::from(x > 0.0)).collect())
    }

    fn accuracy(p: &[f64], y: &[u8]) -> f64 {
        p.iter().zip(y).filter(|(&p, &t)| u8::from(p >= 0.5) == t).count() as f64 / y.len() as f64
    }

    #[test]
    fn logreg_separates() {
        let (m, y) = separable();
        let model = logreg_fit(&m, &y, &LogregParams::default(), 0).unwrap();
        assert_eq!(accuracy(&model.predict_proba(&m).unwrap(), &y), 1.0);
    }

    #[test]
    fn logreg_small_steps_descend() {
        let (m, y) = separable();
        let p = LogregParams { learning_rate: 1e-3, ..Default::default() };
        let model = logreg_fit(&m, &y, &p, 0).unwrap();
        assert!(model.loss_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn logreg_diverges_loudly() {
        let m = FeatureMatrix::from_unnamed_rows(&[vec![1e200], vec![-1e200]]).unwrap();
        let p = LogregParams { learning_rate: 1e10, ..Default::default() };
        assert!(matches!(logreg_fit(&m, &[1, 0], &p, 0), Err(Error::Numerical(_))));
    }

    #[test]
    fn svm_separates_and_flips() {
        let (m, y) = separable();
        let model = svm_fit(&m, &y, &SvmParams::default(), 3).unwrap();
        let p = model.predict_proba(&m).unwrap();
        assert_eq!(accuracy(&p, &y), 1.0);
        let flipped: Vec<u8> = y.iter().map(|&l| 1 - l).collect();
        let other = svm_fit(&m, &flipped, &SvmParams::default(), 3).unwrap();
        let q = other.predict_proba(&m).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert_ne!(*a >= 0.5, *b >= 0.5);
        }
        assert_eq!(model, svm_fit(&m, &y, &SvmParams::default(), 3).unwrap());
    }
}
