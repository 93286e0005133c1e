//! Distance and similarity measures.
//!
//! All [`Measure`] kinds are oriented as distances (lower = more similar):
//! cosine and Pearson are exposed as `1 - similarity`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_dims(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < min_len {
        return Err(Error::Dimension {
            expected: min_len,
            got: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn sq_euclidean_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y, 1)?;
    Ok(sq_euclidean_unchecked(x, y).sqrt())
}

/// Sum of absolute coordinate differences, the quantizer distortion.
pub fn l1_distortion(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y, 0)?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum())
}

pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y, 1)?;
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Undefined(
            "cosine similarity of a zero-magnitude vector".into(),
        ));
    }
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// Pearson correlation with population moments.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    Euclidean,
    L1Distortion,
    CosineDistance,
    PearsonDistance,
}

impl Measure {
    pub fn distance(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Measure::Euclidean => euclidean(x, y),
            Measure::L1Distortion => l1_distortion(x, y),
            Measure::CosineDistance => cosine(x, y).map(|c| 1.0 - c),
            Measure::PearsonDistance => pearson(x, y).map(|c| 1.0 - c),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::Euclidean => "euclidean",
            Measure::L1Distortion => "l1_distortion",
            Measure::CosineDistance => "cosine_distance",
            Measure::PearsonDistance => "pearson_distance",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Measure::Euclidean),
            "l1_distortion" => Ok(Measure::L1Distortion),
            "cosine_distance" => Ok(Measure::CosineDistance),
            "pearson_distance" => Ok(Measure::PearsonDistance),
            other => Err(Error::Config(format!("unknown measure `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[1.5, 2.0], &[1.5, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(), 5.0);
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(euclidean(&[], &[]).is_err());
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distortion(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 3.0);
        assert_eq!(l1_distortion(&[7.0, -1.0], &[7.0, -1.0]).unwrap(), 0.0);
        assert!(l1_distortion(&[1.0], &[]).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::Undefined(_))));
    }

    #[test]
    fn pearson_examples() {
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::Undefined(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn measure_names_round_trip() {
        for m in [
            Measure::Euclidean,
            Measure::L1Distortion,
            Measure::CosineDistance,
            Measure::PearsonDistance,
        ] {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("manhattan".parse::<Measure>().is_err());
    }

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|d| {
            let v = || prop::collection::vec(-100.0f64..100.0, d);
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn metric_axioms((x, y, z) in triple()) {
            for f in [euclidean, l1_distortion] {
                let dxy = f(&x, &y).unwrap();
                prop_assert!(dxy >= 0.0);
                prop_assert_eq!(f(&x, &x).unwrap(), 0.0);
                prop_assert_eq!(dxy, f(&y, &x).unwrap());
                let slack = 1e-9 * (1.0 + dxy);
                prop_assert!(dxy <= f(&x, &z).unwrap() + f(&z, &y).unwrap() + slack);
            }
        }

        #[test]
        fn similarities_bounded_and_invariant((x, y, _z) in triple(), a in 0.01f64..50.0, b in -20.0f64..20.0) {
            if let Ok(c) = cosine(&x, &y) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
                let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
                prop_assert!((cosine(&ax, &y).unwrap() - c).abs() < 1e-9);
            }
            if let Ok(p) = pearson(&x, &y) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&p));
                let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                if let Ok(q) = pearson(&ax, &y) {
                    prop_assert!((q - p).abs() < 1e-9);
                }
            }
        }
    }
}
