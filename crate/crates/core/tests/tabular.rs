use std::collections::BTreeMap;

use chrono::NaiveDate;
use proptest::prelude::*;

use custseg_core::tabular::{encode_features, load_table, write_csv, Encoding};
use custseg_core::{ColumnKind, ColumnSpec, Dataset, Schema, Value};

fn schema() -> Schema {
    Schema::new(vec![
        ColumnSpec::integer("ID"),
        ColumnSpec::real("Income"),
        ColumnSpec::categorical("Education"),
        ColumnSpec::boolean("Complain"),
        ColumnSpec::date("Dt_Customer", None),
    ])
    .unwrap()
}

fn row_strategy() -> impl Strategy<Value = (f64, usize, bool, i64)> {
    (-1e7f64..1e7, 0usize..4, any::<bool>(), 0i64..5000)
}

fn build(rows: &[(f64, usize, bool, i64)]) -> Dataset {
    let cats = ["Basic", "Graduation", "PhD", "2n Cycle"];
    let base = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, &(income, cat, flag, days))| {
            vec![
                Some(Value::Int(i as i64 + 1)),
                Some(Value::Real(income)),
                Some(Value::Text(cats[cat].into())),
                Some(Value::Bool(flag)),
                Some(Value::Date(base + chrono::Duration::days(days))),
            ]
        })
        .collect();
    Dataset::new(schema(), rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(row_strategy(), 1..40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let ds = build(&rows);
        write_csv(&ds, &path, b',').unwrap();
        let back = load_table(&path, &schema(), b',').unwrap();
        prop_assert_eq!(back.n_rows(), ds.n_rows());
        for (a, b) in ds.rows().iter().zip(back.rows()) {
            for (x, y) in a.iter().zip(b) {
                match (x, y) {
                    (Some(Value::Real(p)), Some(Value::Real(q))) => {
                        prop_assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0));
                    }
                    _ => prop_assert_eq!(x, y),
                }
            }
        }
    }

    #[test]
    fn one_hot_rows_sum_to_one(rows in prop::collection::vec(row_strategy(), 1..60)) {
        let ds = build(&rows);
        let enc = BTreeMap::from([("Education".to_string(), Encoding::OneHot)]);
        let m = encode_features(&ds, &["Education"], &enc).unwrap();
        for r in m.rows() {
            prop_assert_eq!(r.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn header_order_does_not_matter(rows in prop::collection::vec(row_strategy(), 1..20), rot in 0usize..5) {
        let dir = tempfile::tempdir().unwrap();
        let ds = build(&rows);
        let path = dir.path().join("t.csv");
        write_csv(&ds, &path, b',').unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let permuted: String = text
            .lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split(',').collect();
                cells.rotate_left(rot);
                cells.join(",") + "\n"
            })
            .collect();
        let other = dir.path().join("p.csv");
        std::fs::write(&other, permuted).unwrap();
        let a = load_table(&path, &schema(), b',').unwrap();
        let b = load_table(&other, &schema(), b',').unwrap();
        prop_assert_eq!(a.rows(), b.rows());
    }
}

#[test]
fn missing_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, "ID,Income\n1,2.5\n").unwrap();
    let err = load_table(&path, &schema(), b',').unwrap_err();
    assert!(err.to_string().contains("Education"), "{err}");
}

#[test]
fn kinds_survive_encoding() {
    let ds = build(&[(10.0, 1, true, 3), (20.0, 2, false, 4)]);
    let m = encode_features(&ds, &["Income", "Complain", "Dt_Customer"], &BTreeMap::new()).unwrap();
    assert_eq!(m.row(0)[1], 1.0);
    assert_eq!(m.row(1)[2] - m.row(0)[2], 1.0);
    assert_eq!(ds.column_spec("Complain").unwrap().kind, ColumnKind::Boolean);
}
