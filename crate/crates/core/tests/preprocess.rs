use proptest::prelude::*;

use custseg_core::evaluation::cross_validate;
use custseg_core::models::{LogregParams, PredictorSpec};
use custseg_core::preprocess::{
    apply_balance, clean, impute, select_features_wrapper, smote, split, undersample, Balance, CleaningRule,
    ImputeStrategy, RuleKind, SplitSpec,
};
use custseg_core::synth::{campaign, xor_blobs, CampaignOptions};
use custseg_core::FeatureMatrix;

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_unnamed_rows(rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampling_is_deterministic(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 6..40),
        seed in any::<u64>(),
    ) {
        let m = matrix(&rows);
        prop_assert_eq!(smote(&m, 3, 17, seed).unwrap(), smote(&m, 3, 17, seed).unwrap());
        prop_assert_eq!(undersample(&m, 4, seed).unwrap(), undersample(&m, 4, seed).unwrap());
        let labels: Vec<u8> = (0..rows.len()).map(|i| u8::from(i % 4 == 0)).collect();
        let spec = SplitSpec { test_fraction: 0.3, stratify: true, seed };
        prop_assert_eq!(split(&m, &labels, &spec).unwrap(), split(&m, &labels, &spec).unwrap());
    }

    #[test]
    fn balancing_keeps_originals_first(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 8..50),
        seed in any::<u64>(),
    ) {
        let m = matrix(&rows);
        let labels: Vec<u8> = (0..rows.len()).map(|i| u8::from(i % 5 == 0)).collect();
        let (x, y) = apply_balance(&m, &labels, &Balance::default(), seed).unwrap();
        prop_assert_eq!(&y[..labels.len()], &labels[..]);
        prop_assert_eq!(x.select_rows(&(0..rows.len()).collect::<Vec<_>>()).to_rows(), m.to_rows());
        let pos = y.iter().filter(|&&l| l == 1).count();
        prop_assert_eq!(pos, y.len() - pos);
    }
}

#[test]
fn clean_and_impute_are_pure() {
    let ds = campaign(&CampaignOptions { rows: 300, seed: 4, missing_income: 0.05, anomalies: true }).unwrap();
    let rules = [
        CleaningRule::drop(RuleKind::DedupOnKey { column: "ID".into() }),
        CleaningRule::drop(RuleKind::QuantileFence { column: "Income".into(), k_iqr: 1.5 }),
    ];
    let a = clean(&ds, &rules).unwrap();
    let b = clean(&ds, &rules).unwrap();
    assert_eq!(a, b);
    assert!(a.1.rows_after < a.1.rows_before);
    for s in [ImputeStrategy::Mean, ImputeStrategy::Median] {
        let x = impute(&ds, "Income", &s).unwrap();
        assert_eq!(x, impute(&ds, "Income", &s).unwrap());
        assert!(x.numeric_column("Income").unwrap().iter().all(Option::is_some));
    }
}

fn cv_mcc(m: &FeatureMatrix, labels: &[u8], spec: &PredictorSpec, cols: &[usize]) -> f64 {
    let sub = m.select_column_indices(cols);
    let folds = cross_validate(spec, &sub, labels, 3, 5, None).unwrap();
    folds.iter().map(|f| f.test.mcc).sum::<f64>() / folds.len() as f64
}

/// Greedy forward selection can never beat the best subset.
#[test]
fn wrapper_selection_bounded_by_exhaustive_search() {
    let spec = PredictorSpec::logreg(LogregParams { epochs: 60, ..Default::default() });
    for seed in 0..3 {
        let (xor, labels) = xor_blobs(120, 0.2, seed).unwrap();
        // x, y, a copy of x scaled down, and x * y which separates the classes
        let rows: Vec<Vec<f64>> = xor.rows().map(|r| vec![r[0], r[1], 0.5 * r[0], r[0] * r[1]]).collect();
        let m = matrix(&rows);
        let chosen = select_features_wrapper(&m, &labels, &spec, 3, 5).unwrap();
        let idx: Vec<usize> = chosen.iter().map(|c| m.column_index(c).unwrap()).collect();
        let greedy = if idx.is_empty() { 0.0 } else { cv_mcc(&m, &labels, &spec, &idx) };
        let best = (1u32..16)
            .map(|mask| {
                let cols: Vec<usize> = (0..4).filter(|j| mask & (1 << j) != 0).collect();
                cv_mcc(&m, &labels, &spec, &cols)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(greedy <= best + 1e-9, "greedy {greedy} > exhaustive {best}");
        assert!(idx.contains(&3), "{chosen:?}");
    }
}
