#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use custseg_core::synth::{campaign, CampaignOptions};
use custseg_core::tabular::write_csv;
use custseg_core::{Dataset, Value};
use serde_json::Value as Json;

pub fn custseg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_custseg"))
        .current_dir(dir)
        .env_remove("CUSTSEG_OUT")
        .args(args)
        .output()
        .expect("spawn custseg")
}

pub fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn campaign_rows(rows: usize, seed: u64) -> Dataset {
    campaign(&CampaignOptions {
        rows,
        seed,
        ..Default::default()
    })
    .unwrap()
}

pub fn write_dataset(ds: &Dataset, path: &Path) {
    write_csv(ds, path, b',').unwrap();
}

/// Overwrite a column cell by cell.
pub fn set_column(ds: &mut Dataset, name: &str, values: impl IntoIterator<Item = Value>) {
    let j = ds.column_index(name).unwrap();
    for (i, v) in values.into_iter().enumerate() {
        ds.set_cell(i, j, Some(v));
    }
}

pub fn write_config(dir: &Path, name: &str, config: &Json) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

pub fn read_json(path: &Path) -> Json {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

/// Parsed CSV as header plus rows of strings.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
    let header = lines.next().unwrap();
    (header, lines.collect())
}

/// Every regular file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

/// Schema file for an emitted JSON artifact, by file name.
pub fn schema_for(file: &Path) -> Option<&'static str> {
    let name = file.file_stem()?.to_str()?;
    if file.parent().and_then(Path::file_name).is_some_and(|d| d == "models") {
        return Some("model");
    }
    Some(match name {
        "cleaning_report" => "cleaning_report",
        "rfm_summary" => "rfm_summary",
        "validity" => "validity",
        "comparison" => "comparison",
        "train_reports" => "train_reports",
        "scaling" => "scaling",
        "selection" => "selection",
        "mislabel_report" => "mislabel_report",
        n if n.starts_with("profile") => "profile",
        _ => return None,
    })
}

/// Validate every JSON file under `dir`; returns how many were checked.
pub fn validate_json_outputs(dir: &Path) -> usize {
    let mut checked = 0;
    for (rel, bytes) in snapshot(dir) {
        if rel.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let schema_name = schema_for(&rel).unwrap_or_else(|| panic!("no schema for {}", rel.display()));
        let schema = read_json(&schema_dir().join(format!("{schema_name}.schema.json")));
        let validator = jsonschema::validator_for(&schema).unwrap();
        let instance: Json = serde_json::from_slice(&bytes).unwrap();
        let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{} fails {schema_name}: {errors:?}", rel.display());
        checked += 1;
    }
    checked
}
