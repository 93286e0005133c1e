mod common;

use std::fs;

use common::*;
use custseg_core::Value;
use serde_json::json;
use tempfile::TempDir;

fn merged_config(data: &str) -> serde_json::Value {
    json!({"version": 1, "input": {"path": data}})
}

#[test]
fn clean_drops_one_duplicate_and_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let ds = campaign_rows(60, 1);
    let mut rows = ds.rows().to_vec();
    rows.push(rows[10].clone());
    let dup = custseg_core::Dataset::new(ds.schema().clone(), rows).unwrap();
    write_dataset(&dup, &dir.path().join("data.csv"));
    write_config(dir.path(), "cfg.json", &merged_config("data.csv"));

    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "a", "clean"]));
    let report = read_json(&dir.path().join("a/cleaning_report.json"));
    let dedup = &report["cleaning"]["rules"][0];
    assert_eq!(dedup["dropped"], 1);
    assert_eq!(report["cleaning"]["rows_before"], 61);
    assert_eq!(report["cleaning"]["rows_after"], 60);

    write_config(dir.path(), "again.json", &merged_config("a/cleaned.csv"));
    ok(&custseg(dir.path(), &["--config", "again.json", "--out", "b", "clean"]));
    let again = read_json(&dir.path().join("b/cleaning_report.json"));
    assert_eq!(again["cleaning"]["rows_before"], 60);
    assert_eq!(again["cleaning"]["rows_after"], 60);
    assert_eq!(
        fs::read(dir.path().join("a/cleaned.csv")).unwrap(),
        fs::read(dir.path().join("b/cleaned.csv")).unwrap()
    );
    assert_eq!(validate_json_outputs(&dir.path().join("a")), 1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "missing.json", &merged_config("nowhere.csv"));
    let out = custseg(dir.path(), &["--config", "missing.json", "--out", "o", "clean"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nowhere.csv"), "{}", stderr(&out));

    write_config(dir.path(), "typo.json", &json!({"version": 1, "input": {"path": "x.csv"}, "clusterin": {}}));
    let out = custseg(dir.path(), &["--config", "typo.json", "clean"]);
    assert_eq!(out.status.code(), Some(2));

    write_config(dir.path(), "future.json", &json!({"version": 99, "input": {"path": "x.csv"}}));
    assert_eq!(custseg(dir.path(), &["--config", "future.json", "clean"]).status.code(), Some(2));

    assert_eq!(custseg(dir.path(), &["--config", "absent.json", "clean"]).status.code(), Some(2));
    assert_eq!(custseg(dir.path(), &["clean"]).status.code(), Some(2));

    // a malformed cell names its line and column
    let ds = campaign_rows(5, 2);
    write_dataset(&ds, &dir.path().join("data.csv"));
    let text = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let broken = text.replacen("\n1001,", "\n1001x,", 1);
    fs::write(dir.path().join("data.csv"), broken).unwrap();
    write_config(dir.path(), "cfg.json", &merged_config("data.csv"));
    let out = custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "clean"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("ID"), "{}", stderr(&out));
}

/// Ten customers with distinct recency, frequency and monetary values.
#[test]
fn rfm_ten_customers() {
    let dir = TempDir::new().unwrap();
    let mut ds = campaign_rows(10, 3);
    let recency = [12, 85, 3, 40, 66, 27, 91, 8, 54, 33];
    let web = [4, 9, 1, 7, 2, 8, 3, 6, 5, 0];
    let wines = [300, 20, 950, 410, 75, 120, 640, 5, 260, 880];
    set_column(&mut ds, "Recency", recency.map(Value::Int));
    set_column(&mut ds, "NumWebPurchases", web.map(Value::Int));
    set_column(&mut ds, "MntWines", wines.map(Value::Int));
    for c in ["NumCatalogPurchases", "NumStorePurchases", "NumDealsPurchases"] {
        set_column(&mut ds, c, [0; 10].map(Value::Int));
    }
    for c in ["MntFruits", "MntMeatProducts", "MntFishProducts", "MntSweetProducts", "MntGoldProds"] {
        set_column(&mut ds, c, [0; 10].map(Value::Int));
    }
    write_dataset(&ds, &dir.path().join("data.csv"));
    write_config(dir.path(), "cfg.json", &merged_config("data.csv"));
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "rfm"]));

    // quintile of an ascending rank p among n = 10 distinct values
    let score = |values: &[i64], i: usize, descending: bool| {
        let p = values.iter().filter(|&&v| v < values[i]).count();
        let p = if descending { values.len() - 1 - p } else { p };
        p * 5 / values.len() + 1
    };
    let (header, rows) = read_csv(&dir.path().join("o/rfm.csv"));
    assert_eq!(rows.len(), 10);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (i, row) in rows.iter().enumerate() {
        let id: i64 = row[col("customer_id")].parse().unwrap();
        assert_eq!(id, 1000 + i as i64);
        assert_eq!(row[col("r")], score(&recency, i, true).to_string());
        assert_eq!(row[col("f")], score(&web, i, false).to_string());
        assert_eq!(row[col("m")], score(&wines, i, false).to_string());
    }
    for dim in ["r", "f", "m"] {
        for s in 1..=5 {
            let n = rows.iter().filter(|r| r[col(dim)] == s.to_string()).count();
            assert_eq!(n, 2, "score {s} in {dim}");
        }
    }
    let summary = read_json(&dir.path().join("o/rfm_summary.json"));
    let total: u64 = summary["by_code"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 10);
    assert_eq!(summary["customers"], 10);
    validate_json_outputs(&dir.path().join("o"));
}

fn blob_config(data: &str, clustering: serde_json::Value) -> serde_json::Value {
    json!({
        "version": 1,
        "input": {"path": data, "schema": {"custom": [
            {"name": "ID", "kind": "integer"},
            {"name": "x0", "kind": "real"},
            {"name": "x1", "kind": "real"}
        ]}},
        "clustering": clustering
    })
}

#[test]
fn cluster_blobs_all_criteria_choose_three() {
    let dir = TempDir::new().unwrap();
    ok(&custseg(
        dir.path(),
        &["--seed", "4", "synth", "--kind", "blobs", "--rows", "150", "--output", "blobs.csv"],
    ));
    write_config(
        dir.path(),
        "cfg.json",
        &blob_config("blobs.csv", json!({"k_range": [1, 6], "seed": 4, "b": 10})),
    );
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "cluster"]));
    let v = read_json(&dir.path().join("o/validity.json"));
    assert_eq!(v["curve"].as_array().unwrap().len(), 6);
    assert_eq!(v["chosen"], json!({"elbow": 3, "silhouette": 3, "gap": 3}));
    let (header, rows) = read_csv(&dir.path().join("o/clusters.csv"));
    assert_eq!(header, ["ID", "elbow", "silhouette", "gap"]);
    assert_eq!(rows.len(), 150);
    let (_, curve) = read_csv(&dir.path().join("o/validity_curve.csv"));
    assert_eq!(curve.len(), 6);
    for c in ["elbow", "silhouette", "gap"] {
        assert!(dir.path().join(format!("o/centroids_{c}.csv")).exists());
        assert!(dir.path().join(format!("o/profile_{c}.csv")).exists());
    }
    validate_json_outputs(&dir.path().join("o"));
}

#[test]
fn cluster_fixed_k_on_pairs() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("pairs.csv"), "ID,x0,x1\n1,0,0\n2,1,0\n3,10,5\n4,11,5\n").unwrap();
    write_config(dir.path(), "cfg.json", &blob_config("pairs.csv", json!({"k": 2, "seed": 1})));
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "cluster"]));
    let (header, rows) = read_csv(&dir.path().join("o/clusters.csv"));
    assert_eq!(header, ["ID", "fixed"]);
    assert_eq!(rows[0][1], rows[1][1]);
    assert_eq!(rows[2][1], rows[3][1]);
    assert_ne!(rows[0][1], rows[2][1]);
    assert!(!dir.path().join("o/validity.json").exists());

    write_config(dir.path(), "big.json", &blob_config("pairs.csv", json!({"k": 5})));
    let out = custseg(dir.path(), &["--config", "big.json", "--out", "o2", "cluster"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("cluster"));
}

#[test]
fn evaluate_ranks_four_families() {
    let dir = TempDir::new().unwrap();
    write_dataset(&campaign_rows(800, 5), &dir.path().join("data.csv"));
    write_config(dir.path(), "cfg.json", &merged_config("data.csv"));
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "evaluate"]));
    let (header, rows) = read_csv(&dir.path().join("o/leaderboard.csv"));
    assert_eq!(rows.len(), 4);
    let mcc = header.iter().position(|h| h == "mean_test_mcc").unwrap();
    let scores: Vec<f64> = rows.iter().map(|r| r[mcc].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]), "{scores:?}");
    let mut families: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    families.sort_unstable();
    assert_eq!(families, ["gbt", "linear_svm", "logreg", "rbf"]);
    for artifact in ["cleaned.csv", "cleaning_report.json", "scaling.json", "features.csv", "comparison.json"] {
        assert!(dir.path().join("o").join(artifact).exists(), "{artifact}");
    }
    validate_json_outputs(&dir.path().join("o"));
}

#[test]
fn mislabel_check_flags_without_dropping() {
    let dir = TempDir::new().unwrap();
    write_dataset(&campaign_rows(300, 4), &dir.path().join("data.csv"));
    let mut cfg = merged_config("data.csv");
    cfg["models"] = json!([{"family": "logreg"}]);
    cfg["evaluation"] = json!({"flag_mislabeled": {"family": "logreg"}});
    write_config(dir.path(), "cfg.json", &cfg);
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "evaluate"]));
    let report = read_json(&dir.path().join("o/mislabel_report.json"));
    let flagged = report["flagged"].as_array().unwrap();
    assert!(!flagged.is_empty());
    for row in flagged {
        let p = row["probability"].as_f64().unwrap();
        assert_ne!(u64::from(p >= 0.5), row["label"].as_u64().unwrap(), "{row}");
    }
    let (_, features) = read_csv(&dir.path().join("o/features.csv"));
    assert_eq!(report["n_rows"].as_u64().unwrap() as usize, features.len());
    validate_json_outputs(&dir.path().join("o"));
}

#[test]
fn gbt_without_trees_is_a_null_model() {
    let dir = TempDir::new().unwrap();
    write_dataset(&campaign_rows(300, 6), &dir.path().join("data.csv"));
    let mut cfg = merged_config("data.csv");
    cfg["models"] = json!([{"family": "gbt", "n_trees": 0}]);
    write_config(dir.path(), "cfg.json", &cfg);
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "evaluate"]));
    let report = read_json(&dir.path().join("o/comparison.json"));
    let entry = &report["entries"][0];
    for key in ["test_mcc", "train_mcc"] {
        assert!(entry[key]["mean"].as_f64().unwrap().abs() < 1e-12, "{key}: {}", entry[key]);
    }
}

#[test]
fn train_writes_models_and_traces() {
    let dir = TempDir::new().unwrap();
    write_dataset(&campaign_rows(300, 7), &dir.path().join("data.csv"));
    write_config(dir.path(), "cfg.json", &merged_config("data.csv"));
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "train"]));
    for m in ["gbt", "logreg", "linear_svm", "rbf"] {
        let doc = read_json(&dir.path().join(format!("o/models/{m}.json")));
        assert_eq!(doc["spec"]["family"], m);
    }
    let (header, rows) = read_csv(&dir.path().join("o/loss_traces.csv"));
    assert!(header.len() >= 3 && !rows.is_empty());
    validate_json_outputs(&dir.path().join("o"));
}

#[test]
fn evaluate_resumes_from_saved_features() {
    let dir = TempDir::new().unwrap();
    write_dataset(&campaign_rows(400, 8), &dir.path().join("data.csv"));
    let mut cfg = merged_config("data.csv");
    cfg["models"] = json!([{"family": "gbt", "n_trees": 30}, {"family": "logreg"}]);
    write_config(dir.path(), "cfg.json", &cfg);
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "full", "evaluate"]));

    cfg["evaluation"] = json!({"features_path": "full/features.csv"});
    write_config(dir.path(), "resume.json", &cfg);
    ok(&custseg(dir.path(), &["--config", "resume.json", "--out", "resumed", "evaluate"]));
    for f in ["comparison.json", "leaderboard.csv"] {
        assert_eq!(
            fs::read(dir.path().join("full").join(f)).unwrap(),
            fs::read(dir.path().join("resumed").join(f)).unwrap(),
            "{f}"
        );
    }
}

/// 100 customers: 64 in a relationship, 97 with at least a bachelor's degree.
fn profile_fixture(dir: &std::path::Path) {
    let mut ds = campaign_rows(100, 9);
    let marital = ["Married", "Together", "Single", "Divorced", "Widow"];
    set_column(
        &mut ds,
        "Marital_Status",
        (0..100).map(|i| Value::Text(if i < 64 { marital[i % 2] } else { marital[2 + i % 3] }.into())),
    );
    let education = ["Graduation", "PhD", "Master", "2n Cycle"];
    set_column(
        &mut ds,
        "Education",
        (0..100).map(|i| Value::Text(if i < 97 { education[i % 4] } else { "Basic" }.into())),
    );
    write_dataset(&ds, &dir.join("data.csv"));
    let labels: String = (0..100).map(|i| format!("{},{}\n", 1000 + i, i % 2)).collect();
    fs::write(dir.join("labels.csv"), format!("ID,cluster\n{labels}")).unwrap();
    fs::write(dir.join("one.csv"), format!("ID,cluster\n{}", (0..100).map(|i| format!("{},0\n", 1000 + i)).collect::<String>())).unwrap();
    write_config(dir, "cfg.json", &merged_config("data.csv"));
}

#[test]
fn profile_reports_relationship_and_degree_shares() {
    let dir = TempDir::new().unwrap();
    profile_fixture(dir.path());
    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "profile", "--labels", "labels.csv"]));
    let p = read_json(&dir.path().join("o/profile.json"));
    assert_eq!(p["overall"]["rows"], 100);
    assert!((p["overall"]["relationship"].as_f64().unwrap() - 0.64).abs() < 1e-12);
    assert!((p["overall"]["bachelor_plus"].as_f64().unwrap() - 0.97).abs() < 1e-12);
    assert_eq!(p["clusters"].as_array().unwrap().len(), 2);
    let (_, rows) = read_csv(&dir.path().join("o/profile.csv"));
    assert_eq!(rows.len(), 2);
    validate_json_outputs(&dir.path().join("o"));

    ok(&custseg(dir.path(), &["--config", "cfg.json", "--out", "single", "profile", "--labels", "one.csv"]));
    let p = read_json(&dir.path().join("single/profile.json"));
    assert_eq!(p["clusters"].as_array().unwrap().len(), 1);
    assert_eq!(p["clusters"][0]["size"], 100);
}

#[test]
fn profile_id_mismatch_lists_ids() {
    let dir = TempDir::new().unwrap();
    profile_fixture(dir.path());
    fs::write(dir.path().join("bad.csv"), "ID,cluster\n1000,0\n1001,1\n77,0\n").unwrap();
    let out = custseg(dir.path(), &["--config", "cfg.json", "--out", "o", "profile", "--labels", "bad.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("1002") && err.contains("77"), "{err}");
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    write_dataset(&campaign_rows(20, 10), &dir.path().join("data.csv"));
    write_config(dir.path(), "cfg.json", &merged_config("data.csv"));
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_custseg"))
        .current_dir(dir.path())
        .env("CUSTSEG_OUT", "from-env")
        .args(["--config", "cfg.json", "clean"])
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("from-env/cleaned.csv").exists());
}
