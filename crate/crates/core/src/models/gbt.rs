use log::warn;
use serde::{Deserialize, Serialize};

use super::linear::softplus;
use super::{check_binary, check_dim, sigmoid};
use crate::error::{Error, Result};
use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            depth: 3,
            learning_rate: 0.1,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= s;
            }
        }
    }
}

/// Raw score `base_score + sum of tree outputs` passed through the sigmoid.
/// Learning rate and any step shrinkage are folded into the leaf values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Mean training logistic loss after the base score and after each tree.
    pub loss_trace: Vec<f64>,
}

impl GbtModel {
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        check_dim(self.n_features, m)?;
        Ok(m.rows().map(|r| sigmoid(self.raw(r))).collect())
    }
}

/// Sum of logistic losses of a leaf whose rows have raw scores `raw`, after
/// shifting all of them by `v`.
pub fn leaf_loss(raw: &[f64], labels: &[u8], v: f64) -> f64 {
    raw.iter().zip(labels).map(|(&f, &y)| softplus(f + v) - f64::from(y) * (f + v)).sum()
}

/// First and second derivative of [`leaf_loss`] at `v = 0`.
pub fn leaf_gradient_hessian(raw: &[f64], labels: &[u8]) -> (f64, f64) {
    raw.iter().zip(labels).fold((0.0, 0.0), |(g, h), (&f, &y)| {
        let p = sigmoid(f);
        (g + p - f64::from(y), h + p * (1.0 - p))
    })
}

/// One Newton step `-g / h` for a leaf.
pub fn newton_leaf_value(gradient_sum: f64, hessian_sum: f64) -> f64 {
    let v = -gradient_sum / hessian_sum.max(1e-12);
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

fn mean_loss(raw: &[f64], labels: &[u8]) -> f64 {
    leaf_loss(raw, labels, 0.0) / raw.len() as f64
}

struct Builder<'a> {
    m: &'a FeatureMatrix,
    sorted: &'a [Vec<usize>],
    residual: &'a [f64],
    grad: &'a [f64],
    hess: &'a [f64],
    depth: usize,
    min_leaf: usize,
    rate: f64,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        Node::Leaf {
            value: self.rate * newton_leaf_value(g, h),
        }
    }

    /// Best variance-reduction split of `rows`; ties keep the lower
    /// feature and the lower threshold.
    fn best_split(&self, rows: &[usize], member: &[bool]) -> Option<(usize, f64)> {
        let n = rows.len();
        let total: f64 = rows.iter().map(|&i| self.residual[i]).sum();
        let base = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for (f, order) in self.sorted.iter().enumerate() {
            let mut left_sum = 0.0;
            let mut prev: Option<usize> = None;
            for (left_n, &i) in order.iter().filter(|&&i| member[i]).enumerate() {
                if let Some(p) = prev {
                    let (a, b) = (self.m.get(p, f), self.m.get(i, f));
                    if a < b && left_n >= self.min_leaf && n - left_n >= self.min_leaf {
                        let right_sum = total - left_sum;
                        let gain = left_sum * left_sum / left_n as f64
                            + right_sum * right_sum / (n - left_n) as f64
                            - base;
                        if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                            let mid = a + (b - a) / 2.0;
                            let threshold = if mid < b { mid } else { a };
                            best = Some((gain, f, threshold));
                        }
                    }
                }
                left_sum += self.residual[i];
                prev = Some(i);
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, level: usize, member: &mut Vec<bool>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let split = if level < self.depth && rows.len() >= 2 * self.min_leaf {
            for &i in &rows {
                member[i] = true;
            }
            let s = self.best_split(&rows, member);
            for &i in &rows {
                member[i] = false;
            }
            s
        } else {
            None
        };
        match split {
            None => self.nodes[id] = self.leaf(&rows),
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| self.m.get(i, feature) <= threshold);
                let left = self.grow(l, level + 1, member);
                let right = self.grow(r, level + 1, member);
                self.nodes[id] = Node::Split { feature, threshold, left, right };
            }
        }
        id
    }
}

/// Stagewise gradient boosting on the logistic loss. Each tree is fitted
/// to the residuals `y - p` with variance-reduction splits; leaves take a
/// Newton step scaled by the learning rate. A tree that would raise the
/// training loss is shrunk by halving until it does not.
pub fn gbt_fit(m: &FeatureMatrix, labels: &[u8], params: &GbtParams, _seed: u64) -> Result<GbtModel> {
    check_binary(labels, m.n_rows())?;
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::Config("gbt learning_rate must be in (0, 1]".into()));
    }
    if params.min_leaf == 0 {
        return Err(Error::Config("gbt min_leaf must be >= 1".into()));
    }
    let n = m.n_rows();
    if n < 2 * params.min_leaf {
        return Err(Error::Precondition(format!(
            "gbt needs at least {} rows for min_leaf = {}, got {n}",
            2 * params.min_leaf,
            params.min_leaf
        )));
    }
    let mean = labels.iter().map(|&l| f64::from(l)).sum::<f64>() / n as f64;
    let single_class = mean == 0.0 || mean == 1.0;
    let p0 = mean.clamp(1e-6, 1.0 - 1e-6);
    let base_score = (p0 / (1.0 - p0)).ln();
    let mut raw = vec![base_score; n];
    let mut model = GbtModel {
        base_score,
        learning_rate: params.learning_rate,
        n_features: m.n_cols(),
        trees: Vec::new(),
        loss_trace: vec![mean_loss(&raw, labels)],
    };
    if single_class {
        warn!("gbt labels hold a single class; returning a constant predictor");
        return Ok(model);
    }
    let sorted: Vec<Vec<usize>> = (0..m.n_cols())
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| m.get(a, f).total_cmp(&m.get(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut member = vec![false; n];
    for _ in 0..params.n_trees {
        let p: Vec<f64> = raw.iter().map(|&f| sigmoid(f)).collect();
        let residual: Vec<f64> = p.iter().zip(labels).map(|(&p, &y)| f64::from(y) - p).collect();
        let grad: Vec<f64> = residual.iter().map(|r| -r).collect();
        let hess: Vec<f64> = p.iter().map(|&p| p * (1.0 - p)).collect();
        let mut builder = Builder {
            m,
            sorted: &sorted,
            residual: &residual,
            grad: &grad,
            hess: &hess,
            depth: params.depth,
            min_leaf: params.min_leaf,
            rate: params.learning_rate,
            nodes: Vec::new(),
        };
        builder.grow((0..n).collect(), 0, &mut member);
        let mut tree = Tree { nodes: builder.nodes };
        let previous = *model.loss_trace.last().expect("trace starts non-empty");
        let outputs: Vec<f64> = m.rows().map(|r| tree.predict(r)).collect();
        let mut scale = 1.0;
        let mut loss = f64::INFINITY;
        for _ in 0..40 {
            let trial: Vec<f64> = raw.iter().zip(&outputs).map(|(f, o)| f + scale * o).collect();
            loss = mean_loss(&trial, labels);
            if loss <= previous {
                break;
            }
            scale /= 2.0;
        }
        if !(loss <= previous) {
            scale = 0.0;
            loss = previous;
        }
        if scale != 1.0 {
            tree.scale(scale);
        }
        for (f, o) in raw.iter_mut().zip(&outputs) {
            *f += scale * o;
        }
        if raw.iter().any(|f| !f.is_finite()) {
            return Err(Error::Numerical("gbt scores became non-finite".into()));
        }
        model.trees.push(tree);
        model.loss_trace.push(loss);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_unnamed_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn stump_finds_midpoint() {
        let m = line(&[1.0, 2.0, 3.0, 4.0]);
        let y = [0, 0, 1, 1];
        let p = GbtParams { n_trees: 10, depth: 1, min_leaf: 1, ..Default::default() };
        let model = gbt_fit(&m, &y, &p, 0).unwrap();
        assert!(matches!(model.trees[0].nodes[0], Node::Split { threshold, .. } if threshold == 2.5));
        let probs = model.predict_proba(&m).unwrap();
        assert!(probs.iter().zip(&y).all(|(&p, &t)| u8::from(p >= 0.5) == t));
        assert!(model.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_trees_is_base_rate() {
        let m = line(&[1.0, 2.0, 3.0, 4.0]);
        let p = GbtParams { n_trees: 0, min_leaf: 1, ..Default::default() };
        let model = gbt_fit(&m, &[0, 0, 0, 1], &p, 0).unwrap();
        for q in model.predict_proba(&m).unwrap() {
            assert!((q - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn single_class_constant() {
        let m = line(&[1.0, 2.0, 3.0, 4.0]);
        let p = GbtParams { min_leaf: 1, ..Default::default() };
        let model = gbt_fit(&m, &[1, 1, 1, 1], &p, 0).unwrap();
        assert!(model.trees.is_empty());
    }

    #[test]
    fn too_few_rows() {
        let m = line(&[1.0, 2.0, 3.0]);
        assert!(matches!(gbt_fit(&m, &[0, 1, 0], &GbtParams::default(), 0), Err(Error::Precondition(_))));
    }
}
