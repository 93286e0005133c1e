use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::FeatureMatrix;

/// Min-max parameters for one column: `x_s = sc * x_u + of` with
/// `sc = (t_max - t_min) / (r_max - r_min)` and `of = t_min - sc * r_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub column: String,
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub sc: f64,
    pub of: f64,
}

impl ColumnScaling {
    pub fn fit(column: impl Into<String>, r_min: f64, r_max: f64, t_min: f64, t_max: f64) -> Self {
        let sc = (t_max - t_min) / (r_max - r_min);
        Self {
            column: column.into(),
            r_min,
            r_max,
            t_min,
            t_max,
            sc,
            of: t_min - sc * r_min,
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        if x == self.r_min {
            self.t_min
        } else if x == self.r_max {
            self.t_max
        } else {
            self.sc * x + self.of
        }
    }

    pub fn inverse(&self, x: f64) -> f64 {
        if x == self.t_min {
            self.r_min
        } else if x == self.t_max {
            self.r_max
        } else {
            (x - self.of) / self.sc
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub columns: Vec<ColumnScaling>,
    /// Constant columns removed during fitting.
    #[serde(default)]
    pub dropped: Vec<String>,
}

impl ScalingParams {
    pub fn get(&self, column: &str) -> Option<&ColumnScaling> {
        self.columns.iter().find(|c| c.column == column)
    }

    pub(crate) fn select<'a>(&self, names: impl Iterator<Item = &'a str>) -> ScalingParams {
        ScalingParams {
            columns: names.filter_map(|n| self.get(n).cloned()).collect(),
            dropped: self.dropped.clone(),
        }
    }

    fn for_matrix(&self, m: &FeatureMatrix) -> Result<Vec<&ColumnScaling>> {
        m.column_names()
            .iter()
            .map(|n| {
                self.get(n)
                    .ok_or_else(|| Error::Config(format!("no scaling parameters for column `{n}`")))
            })
            .collect()
    }
}

fn map_columns(m: &FeatureMatrix, cols: &[&ColumnScaling], f: impl Fn(&ColumnScaling, f64) -> f64) -> FeatureMatrix {
    let mut out = m.clone();
    let d = cols.len();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        *v = f(cols[i % d], *v);
    }
    out
}

/// Fit min-max scaling to `[t_min, t_max]` on every column and apply it.
/// Column minima map exactly to `t_min` and maxima to `t_max`. Constant
/// columns are dropped when `drop_constant` is set, rejected otherwise.
pub fn scale_minmax(
    m: &FeatureMatrix,
    t_min: f64,
    t_max: f64,
    drop_constant: bool,
) -> Result<(FeatureMatrix, ScalingParams)> {
    if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
        return Err(Error::Config(format!(
            "invalid target range [{t_min}, {t_max}]"
        )));
    }
    if m.is_empty() {
        return Err(Error::Config("cannot fit scaling on an empty matrix".into()));
    }
    let mut keep = Vec::new();
    let mut params = ScalingParams::default();
    for (j, name) in m.column_names().iter().enumerate() {
        let col = m.column(j);
        let r_min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let r_max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if r_max > r_min {
            keep.push(j);
            params.columns.push(ColumnScaling::fit(name.clone(), r_min, r_max, t_min, t_max));
        } else if drop_constant {
            params.dropped.push(name.clone());
        } else {
            return Err(Error::ConstantColumn {
                column: name.clone(),
            });
        }
    }
    let kept = m.select_column_indices(&keep).with_scaling(None);
    let scaled = apply_scaling(&kept, &params)?;
    Ok((scaled, params))
}

/// Apply previously fitted parameters (e.g. training-set parameters to test
/// rows). Values outside the fitted range land outside `[t_min, t_max]`.
pub fn apply_scaling(m: &FeatureMatrix, params: &ScalingParams) -> Result<FeatureMatrix> {
    let cols = params.for_matrix(m)?;
    let scoped = params.select(m.column_names().iter().map(String::as_str));
    Ok(map_columns(m, &cols, ColumnScaling::forward).with_scaling(Some(scoped)))
}

pub fn unscale(m: &FeatureMatrix, params: &ScalingParams) -> Result<FeatureMatrix> {
    let cols = params.for_matrix(m)?;
    Ok(map_columns(m, &cols, ColumnScaling::inverse).with_scaling(None))
}
