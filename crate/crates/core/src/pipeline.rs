//! The configurable end-to-end flow: load, clean, engineer, scale, select,
//! balance, fit and evaluate, plus the RFM, clustering and profiling
//! branches. Every stage writes its artifact through [`Artifacts`].

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    kmeans_fit, profile_segments_with, profile_table, validity_report, KMeansModel, ProfileOptions, SegmentProfile,
    ValidityParams, ValidityReport,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    compare_models, evaluate, evaluate_protocol, flag_mislabeled, ComparisonReport, CvOptions, EvalReport, MislabelReport, Protocol,
    SplitTag,
};
use crate::models::{GbtParams, LogregParams, Model, ModelDocument, PredictorSpec, RbfParams, SvmParams};
use crate::preprocess::{
    apply_balance, clean, default_reference_year, engineer_features, impute, scale_minmax, select_features_filter,
    select_features_wrapper, Balance, CleaningReport, CleaningRule, ImputeStrategy, Recipe, RuleKind,
    ScalingParams,
};
use crate::rfm::{compute_rfm, label_segments, rfm_table, score_rfm, summarize_segments, RfmOptions, SegmentRules, SegmentSummary};
use crate::seed;
use crate::similarity::Measure;
use crate::tabular::{
    encode_features, load_table, write_csv, ColumnKind, ColumnSpec, CsvTable, Dataset, Encoding, FeatureMatrix,
    ReportTable, Schema, CHANNEL_PURCHASE_COLUMNS, MNT_COLUMNS,
};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CUSTSEG_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaChoice {
    Table2,
    Table3,
    Merged,
    Custom(Vec<ColumnSpec>),
}

impl SchemaChoice {
    pub fn resolve(&self) -> Result<Schema> {
        Ok(match self {
            SchemaChoice::Table2 => Schema::table2(),
            SchemaChoice::Table3 => Schema::table3(),
            SchemaChoice::Merged => Schema::merged(),
            SchemaChoice::Custom(cols) => Schema::new(cols.clone())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_schema")]
    pub schema: SchemaChoice,
    /// Input format for every date column, overriding the schema's.
    #[serde(default)]
    pub date_format: Option<String>,
}

fn default_delimiter() -> char {
    ','
}

fn default_schema() -> SchemaChoice {
    SchemaChoice::Merged
}

// No deny_unknown_fields here: serde rejects every key of a flattened enum
// when it is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeSpec {
    pub column: String,
    #[serde(flatten)]
    pub strategy: ImputeStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Selection {
    Filter {
        threshold: f64,
    },
    Wrapper {
        #[serde(default = "default_wrapper_folds")]
        folds: usize,
        #[serde(default)]
        model: Option<PredictorSpec>,
    },
}

fn default_wrapper_folds() -> usize {
    3
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Derived columns; `None` selects the standard set the schema allows.
    pub recipes: Option<Vec<Recipe>>,
    /// Year used for `Age`; defaults to the latest enrolment year.
    pub reference_year: Option<i32>,
    /// Date used for `TenureDays`; defaults to the latest enrolment date.
    pub reference_date: Option<NaiveDate>,
    /// Model inputs; `None` takes every non-date column except `ID`, the
    /// label and `exclude`.
    pub columns: Option<Vec<String>>,
    pub exclude: Vec<String>,
    /// Per-column encodings. Categorical columns default to one-hot.
    pub encoding: BTreeMap<String, Encoding>,
    pub selection: Option<Selection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub drop_constant: bool,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            t_min: 0.0,
            t_max: 1.0,
            drop_constant: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfmConfig {
    pub bins: usize,
    pub include_deals: bool,
    pub fallback_date_column: String,
    pub reference_date: Option<NaiveDate>,
    pub segments: Option<SegmentRules>,
}

impl Default for RfmConfig {
    fn default() -> Self {
        let o = RfmOptions::default();
        Self {
            bins: 5,
            include_deals: o.include_deals,
            fallback_date_column: o.fallback_date_column,
            reference_date: o.reference_date,
            segments: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k: Option<usize>,
    /// Inclusive `[k_min, k_max]`; used when `k` is absent.
    pub k_range: Option<(usize, usize)>,
    pub measure: Measure,
    pub seed: u64,
    pub restarts: usize,
    pub b: usize,
    /// Clustering inputs; `None` reuses the model feature columns.
    pub columns: Option<Vec<String>>,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k: None,
            k_range: Some((1, 8)),
            measure: Measure::Euclidean,
            seed: 0,
            restarts: 5,
            b: 10,
            columns: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub label: String,
    pub folds: usize,
    pub seed: u64,
    pub repeats: usize,
    pub balance: Option<Balance>,
    pub test_fraction: Option<f64>,
    pub threshold: f64,
    /// Resume from a saved `features.csv` instead of the raw input.
    pub features_path: Option<PathBuf>,
    /// Baseline whose out-of-fold mistakes are reported as possibly
    /// mislabeled rows. Flag only; no row is dropped.
    pub flag_mislabeled: Option<PredictorSpec>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            label: "Response".into(),
            folds: 5,
            seed: 0,
            repeats: 1,
            balance: Some(Balance::default()),
            test_fraction: None,
            threshold: 0.5,
            features_path: None,
            flag_mislabeled: None,
        }
    }
}

impl EvaluationConfig {
    pub fn protocol(&self) -> Protocol {
        Protocol {
            folds: self.folds,
            seed: self.seed,
            balance: self.balance,
            repeats: self.repeats,
            threshold: self.threshold,
            test_fraction: self.test_fraction,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    /// CSV with an `ID` column and a cluster label column.
    pub labels_path: Option<PathBuf>,
    /// Label column in `labels_path`; defaults to the first non-ID column.
    pub label_column: Option<String>,
    #[serde(flatten)]
    pub options: ProfileOptions,
}

pub fn default_models() -> Vec<PredictorSpec> {
    vec![
        PredictorSpec::gbt(GbtParams::default()),
        PredictorSpec::logreg(LogregParams::default()),
        PredictorSpec::svm(SvmParams::default()),
        PredictorSpec::rbf(RbfParams::default()),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub input: InputConfig,
    /// Cleaning rules; `None` applies ID de-duplication and an age check.
    #[serde(default)]
    pub cleaning: Option<Vec<CleaningRule>>,
    /// Imputations; `None` fills every nullable numeric column by median.
    #[serde(default)]
    pub imputation: Option<Vec<ImputeSpec>>,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub rfm: RfmConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default = "default_models")]
    pub models: Vec<PredictorSpec>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, schema: SchemaChoice) -> Self {
        Self {
            version: CONFIG_VERSION,
            input: InputConfig {
                path: input.into(),
                delimiter: ',',
                schema,
                date_format: None,
            },
            cleaning: None,
            imputation: None,
            features: FeatureConfig::default(),
            scaling: ScalingConfig::default(),
            rfm: RfmConfig::default(),
            clustering: ClusteringConfig::default(),
            models: default_models(),
            evaluation: EvaluationConfig::default(),
            profile: ProfileConfig::default(),
            output_dir: None,
        }
    }

    /// Parse a config document. Relative paths inside it are resolved
    /// against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: PipelineConfig = serde_json::from_str(text)?;
        if let Some(base) = base_dir {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            fix(&mut cfg.input.path);
            if let Some(p) = cfg.evaluation.features_path.as_mut() {
                fix(p);
            }
            if let Some(p) = cfg.profile.labels_path.as_mut() {
                fix(p);
            }
            if let Some(p) = cfg.output_dir.as_mut() {
                fix(p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !self.input.delimiter.is_ascii() {
            return Err(Error::Config("delimiter must be a single ASCII character".into()));
        }
        let schema = self.input.schema.resolve()?;
        let check = |col: &str, what: &str| -> Result<()> {
            if schema.index_of(col).is_none() {
                return Err(Error::Config(format!("{what} refers to unknown column `{col}`")));
            }
            Ok(())
        };
        for rule in self.cleaning.iter().flatten() {
            match &rule.kind {
                RuleKind::DedupOnKey { column }
                | RuleKind::RangeBound { column, .. }
                | RuleKind::QuantileFence { column, .. } => check(column, "cleaning rule")?,
                RuleKind::ImpossibleAge { birth_column, .. } => check(birth_column, "cleaning rule")?,
            }
        }
        for spec in self.imputation.iter().flatten() {
            check(&spec.column, "imputation")?;
        }
        if let (Some(k), _) | (None, Some((_, k))) = (self.clustering.k, self.clustering.k_range) {
            if k == 0 {
                return Err(Error::Config("clustering k must be at least 1".into()));
            }
        }
        if let Some((lo, hi)) = self.clustering.k_range {
            if lo == 0 || lo > hi {
                return Err(Error::Config(format!("invalid k_range [{lo}, {hi}]")));
            }
        }
        if self.clustering.k.is_none() && self.clustering.k_range.is_none() {
            return Err(Error::Config("clustering needs `k` or `k_range`".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model spec is required".into()));
        }
        Ok(())
    }

    /// Replace every seed (clustering, evaluation and each model).
    pub fn override_seed(&mut self, seed: u64) {
        self.clustering.seed = seed;
        self.evaluation.seed = seed;
        for m in &mut self.models {
            m.seed = seed;
        }
    }
}

/// Writes stage outputs under one directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn csv<T: CsvTable + ?Sized>(&self, name: &str, table: &T) -> Result<PathBuf> {
        let path = self.path(name);
        write_csv(table, &path, b',')?;
        Ok(path)
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

pub fn load_input(cfg: &PipelineConfig) -> Result<Dataset> {
    let mut schema = cfg.input.schema.resolve()?;
    if let Some(fmt) = &cfg.input.date_format {
        let cols = schema
            .columns()
            .iter()
            .map(|c| {
                if c.kind == ColumnKind::Date {
                    ColumnSpec {
                        date_format: Some(fmt.clone()),
                        ..c.clone()
                    }
                } else {
                    c.clone()
                }
            })
            .collect();
        schema = Schema::new(cols)?;
    }
    load_table(&cfg.input.path, &schema, cfg.input.delimiter as u8)
}

/// Cleaning rules used when the config lists none.
pub fn default_cleaning_rules(ds: &Dataset) -> Vec<CleaningRule> {
    let mut rules = Vec::new();
    if ds.schema().index_of("ID").is_some() {
        rules.push(CleaningRule::drop(RuleKind::DedupOnKey { column: "ID".into() }));
    }
    if ds.schema().index_of("Year_Birth").is_some() {
        let reference_year = default_reference_year(ds).map(i64::from).unwrap_or(2014);
        rules.push(CleaningRule::drop(RuleKind::ImpossibleAge {
            birth_column: "Year_Birth".into(),
            reference_year,
            max_age: 100,
        }));
    }
    rules
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationOutcome {
    pub column: String,
    pub strategy: ImputeStrategy,
    pub filled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanOutput {
    pub cleaning: CleaningReport,
    pub imputation: Vec<ImputationOutcome>,
}

/// Cleaning rules followed by imputation.
pub fn run_clean(cfg: &PipelineConfig, ds: &Dataset) -> Result<(Dataset, CleanOutput)> {
    let rules = cfg.cleaning.clone().unwrap_or_else(|| default_cleaning_rules(ds));
    let (mut cleaned, report) = clean(ds, &rules)?;
    let specs = match &cfg.imputation {
        Some(s) => s.clone(),
        None => cleaned
            .schema()
            .columns()
            .iter()
            .filter(|c| c.nullable && matches!(c.kind, ColumnKind::Integer | ColumnKind::Real))
            .map(|c| ImputeSpec {
                column: c.name.clone(),
                strategy: ImputeStrategy::Median,
            })
            .collect(),
    };
    let mut outcomes = Vec::new();
    for spec in specs {
        let filled = cleaned.column(&spec.column)?.filter(Option::is_none).count();
        if filled > 0 {
            cleaned = impute(&cleaned, &spec.column, &spec.strategy)?;
        }
        outcomes.push(ImputationOutcome {
            column: spec.column,
            strategy: spec.strategy,
            filled,
        });
    }
    Ok((
        cleaned,
        CleanOutput {
            cleaning: report,
            imputation: outcomes,
        },
    ))
}

fn has_all(ds: &Dataset, cols: &[&str]) -> bool {
    cols.iter().all(|c| ds.schema().index_of(c).is_some())
}

/// Recipes used when the config lists none: age, children, total spend,
/// total purchases and tenure, each when its inputs exist.
pub fn default_recipes(ds: &Dataset, features: &FeatureConfig) -> Result<Vec<Recipe>> {
    let mut out = Vec::new();
    if has_all(ds, &["Year_Birth"]) {
        let year = match features.reference_year {
            Some(y) => y,
            None => default_reference_year(ds).unwrap_or(2014),
        };
        out.push(Recipe::age(year));
    }
    if has_all(ds, &["Kidhome", "Teenhome"]) {
        out.push(Recipe::children());
    }
    if has_all(ds, &MNT_COLUMNS) {
        out.push(Recipe::total_spend());
    }
    if has_all(ds, &CHANNEL_PURCHASE_COLUMNS) {
        out.push(Recipe::total_purchases());
    }
    if has_all(ds, &["Dt_Customer"]) {
        let latest = ds.column("Dt_Customer")?.filter_map(|v| v.and_then(|v| v.as_date())).max();
        if let Some(date) = features.reference_date.or(latest) {
            out.push(Recipe::tenure_days(date));
        }
    }
    Ok(out)
}

pub fn run_engineer(cfg: &PipelineConfig, ds: &Dataset) -> Result<Dataset> {
    let recipes = match &cfg.features.recipes {
        Some(r) => r.clone(),
        None => default_recipes(ds, &cfg.features)?,
    };
    engineer_features(ds, &recipes)
}

/// Feature columns taken from the engineered dataset when the config names
/// none.
pub fn auto_columns(ds: &Dataset, label: Option<&str>, exclude: &[String]) -> Vec<String> {
    ds.schema()
        .columns()
        .iter()
        .filter(|c| c.kind != ColumnKind::Date && c.name != "ID" && Some(c.name.as_str()) != label)
        .filter(|c| !exclude.contains(&c.name))
        .map(|c| c.name.clone())
        .collect()
}

pub fn encodings_for(ds: &Dataset, columns: &[String], configured: &BTreeMap<String, Encoding>) -> BTreeMap<String, Encoding> {
    let mut enc = configured.clone();
    for c in columns {
        if let Ok(spec) = ds.column_spec(c) {
            if spec.kind == ColumnKind::Categorical {
                enc.entry(c.clone()).or_insert(Encoding::OneHot);
            }
        }
    }
    enc
}

pub fn extract_labels(ds: &Dataset, label: &str) -> Result<Vec<u8>> {
    ds.column(label)?
        .enumerate()
        .map(|(i, v)| match v.and_then(|v| v.as_f64()) {
            Some(0.0) => Ok(0),
            Some(1.0) => Ok(1),
            _ => Err(Error::Schema(format!(
                "label column `{label}` must hold 0/1 values; row {i} holds {v:?}"
            ))),
        })
        .collect()
}

/// Encoded and min-max scaled features.
#[derive(Debug, Clone)]
pub struct Features {
    pub matrix: FeatureMatrix,
    pub scaling: ScalingParams,
    pub labels: Option<Vec<u8>>,
}

impl Features {
    /// Matrix plus label column, the resumable stage artifact.
    pub fn table(&self, label: &str) -> ReportTable {
        let mut header = self.matrix.csv_header();
        let labelled = self.labels.is_some();
        if labelled {
            header.push(label.to_string());
        }
        let mut t = ReportTable::new(header);
        for (i, mut row) in self.matrix.csv_rows().into_iter().enumerate() {
            if let Some(l) = &self.labels {
                row.push(l[i].to_string());
            }
            t.push(row);
        }
        t
    }
}

pub fn encode_and_scale(
    ds: &Dataset,
    columns: &[String],
    encoding: &BTreeMap<String, Encoding>,
    scaling: &ScalingConfig,
) -> Result<(FeatureMatrix, ScalingParams)> {
    let enc = encodings_for(ds, columns, encoding);
    let raw = encode_features(ds, columns, &enc)?;
    let (scaled, params) = scale_minmax(&raw, scaling.t_min, scaling.t_max, scaling.drop_constant)?;
    Ok((scaled.with_scaling(Some(params.clone())), params))
}

/// Model features from an engineered dataset. With a label column the
/// label is split off; feature selection runs when configured.
pub fn prepare_features(cfg: &PipelineConfig, ds: &Dataset, with_label: bool) -> Result<(Features, Option<Vec<String>>)> {
    let label = with_label.then_some(cfg.evaluation.label.as_str());
    let columns = match &cfg.features.columns {
        Some(c) => c.clone(),
        None => auto_columns(ds, label, &cfg.features.exclude),
    };
    let (matrix, scaling) = encode_and_scale(ds, &columns, &cfg.features.encoding, &cfg.scaling)?;
    let labels = match label {
        Some(l) => Some(extract_labels(ds, l)?),
        None => None,
    };
    let mut features = Features { matrix, scaling, labels };
    let selected = match (&cfg.features.selection, &features.labels) {
        (None, _) => None,
        (Some(Selection::Filter { threshold }), _) => Some(select_features_filter(&features.matrix, *threshold)?),
        (Some(Selection::Wrapper { folds, model }), Some(y)) => {
            let spec = model.clone().unwrap_or_else(|| PredictorSpec::logreg(LogregParams::default()));
            Some(select_features_wrapper(&features.matrix, y, &spec, *folds, cfg.evaluation.seed)?)
        }
        (Some(Selection::Wrapper { .. }), None) => {
            return Err(Error::Config("wrapper selection needs a label column".into()));
        }
    };
    if let Some(cols) = &selected {
        if cols.is_empty() {
            return Err(Error::Selection("feature selection kept no columns".into()));
        }
        let scaling = features.matrix.scaling().cloned();
        features.matrix = features.matrix.select_columns(cols)?.with_scaling(scaling);
    }
    Ok((features, selected))
}

// ---------------------------------------------------------------- rfm

#[derive(Debug, Clone)]
pub struct RfmOutput {
    pub table: ReportTable,
    pub summary: SegmentSummary,
}

pub fn run_rfm(cfg: &PipelineConfig, ds: &Dataset) -> Result<RfmOutput> {
    let opts = RfmOptions {
        include_deals: cfg.rfm.include_deals,
        fallback_date_column: cfg.rfm.fallback_date_column.clone(),
        reference_date: cfg.rfm.reference_date,
    };
    let records = score_rfm(&compute_rfm(ds, &opts)?, cfg.rfm.bins)?;
    let labels = label_segments(&records, cfg.rfm.segments.as_ref())?;
    Ok(RfmOutput {
        table: rfm_table(&records, &labels),
        summary: summarize_segments(&labels),
    })
}

// ---------------------------------------------------------- clustering

/// One clustering at a chosen k.
#[derive(Debug, Clone)]
pub struct ClusterRun {
    /// `fixed`, `elbow`, `silhouette` or `gap`.
    pub criterion: String,
    pub model: KMeansModel,
    pub profile: SegmentProfile,
}

#[derive(Debug, Clone)]
pub struct ClusterOutput {
    pub matrix: FeatureMatrix,
    pub validity: Option<ValidityReport>,
    pub runs: Vec<ClusterRun>,
}

impl ClusterOutput {
    /// `ID` followed by one label column per run.
    pub fn labels_table(&self) -> ReportTable {
        let header = std::iter::once("ID".to_string()).chain(self.runs.iter().map(|r| r.criterion.clone()));
        let mut t = ReportTable::new(header);
        for (i, id) in self.matrix.row_ids().iter().enumerate() {
            t.push(std::iter::once(id.to_string()).chain(self.runs.iter().map(|r| r.model.labels[i].to_string())));
        }
        t
    }

    pub fn curve_table(&self) -> Option<ReportTable> {
        let v = self.validity.as_ref()?;
        let mut t = ReportTable::new(["k", "wcss", "silhouette", "gap", "gap_sd"]);
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        for p in &v.curve {
            t.push([p.k.to_string(), p.wcss.to_string(), opt(p.silhouette), opt(p.gap), p.gap_sd.to_string()]);
        }
        Some(t)
    }
}

pub fn run_cluster(cfg: &PipelineConfig, ds: &Dataset) -> Result<ClusterOutput> {
    let c = &cfg.clustering;
    let columns = match (&c.columns, &cfg.features.columns) {
        (Some(cols), _) | (None, Some(cols)) => cols.clone(),
        (None, None) => {
            let label = ds.schema().index_of(&cfg.evaluation.label).map(|_| cfg.evaluation.label.as_str());
            auto_columns(ds, label, &cfg.features.exclude)
        }
    };
    let (matrix, _) = encode_and_scale(ds, &columns, &cfg.features.encoding, &cfg.scaling)?;
    let mut runs = Vec::new();
    let mut validity = None;
    let profile = |labels: &[usize]| profile_segments_with(ds, labels, &cfg.profile.options);
    match (c.k, c.k_range) {
        (Some(k), _) => {
            let model = kmeans_fit(&matrix, k, c.measure, c.seed)?;
            let p = profile(&model.labels)?;
            runs.push(ClusterRun {
                criterion: "fixed".into(),
                model,
                profile: p,
            });
        }
        (None, Some((k_min, k_max))) => {
            let params = ValidityParams {
                k_min,
                k_max,
                measure: c.measure,
                seed: c.seed,
                restarts: c.restarts,
                b: c.b,
            };
            let (report, models) = validity_report(&matrix, &params)?;
            for (criterion, chosen) in [
                ("elbow", report.chosen.elbow),
                ("silhouette", report.chosen.silhouette),
                ("gap", report.chosen.gap),
            ] {
                if let Some(k) = chosen {
                    let model = models[k - k_min].clone();
                    let p = profile(&model.labels)?;
                    runs.push(ClusterRun {
                        criterion: criterion.into(),
                        model,
                        profile: p,
                    });
                }
            }
            validity = Some(report);
        }
        (None, None) => return Err(Error::Config("clustering needs `k` or `k_range`".into())),
    }
    Ok(ClusterOutput { matrix, validity, runs })
}

// ------------------------------------------------------------- models

/// Features for training/evaluation: read from a saved stage artifact when
/// `features_path` is set, otherwise built from the input file.
pub fn model_features(cfg: &PipelineConfig, out: Option<&Artifacts>) -> Result<(FeatureMatrix, Vec<u8>)> {
    if let Some(path) = &cfg.evaluation.features_path {
        let (m, labels) = stage("load", FeatureMatrix::load_csv(path, Some(&cfg.evaluation.label), b','))?;
        let scaling_path = path.with_file_name("scaling.json");
        let m = match fs::read_to_string(&scaling_path) {
            Ok(text) => {
                let s: ScalingParams = serde_json::from_str(&text)?;
                m.with_scaling(Some(s))
            }
            Err(_) => m,
        };
        return Ok((m, labels.expect("label column requested")));
    }
    let raw = stage("load", load_input(cfg))?;
    let (cleaned, report) = stage("clean", run_clean(cfg, &raw))?;
    let engineered = stage("engineer", run_engineer(cfg, &cleaned))?;
    let (features, selected) = stage("features", prepare_features(cfg, &engineered, true))?;
    if let Some(out) = out {
        out.csv("cleaned.csv", &cleaned)?;
        out.json("cleaning_report.json", &report)?;
        out.json("scaling.json", &features.scaling)?;
        if let Some(cols) = &selected {
            out.json("selection.json", cols)?;
        }
        out.csv("features.csv", &features.table(&cfg.evaluation.label))?;
    }
    let labels = features.labels.expect("labels requested");
    Ok((features.matrix, labels))
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub file_name: String,
    pub document: ModelDocument,
    pub train: EvalReport,
}

fn unique_names(specs: &[PredictorSpec]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    specs
        .iter()
        .map(|s| {
            let base = s.label();
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}-{n}")
            }
        })
        .collect()
}

/// Fit every configured model on all rows (balanced as configured).
pub fn run_train(cfg: &PipelineConfig, m: &FeatureMatrix, labels: &[u8]) -> Result<Vec<TrainedModel>> {
    let (x_fit, y_fit) = match &cfg.evaluation.balance {
        Some(b) => stage("balance", apply_balance(m, labels, b, seed::derive(cfg.evaluation.seed, &[7])))?,
        None => (m.clone(), labels.to_vec()),
    };
    let names = unique_names(&cfg.models);
    cfg.models
        .iter()
        .zip(names)
        .map(|(spec, name)| {
            let model = stage("fit", spec.fit(&x_fit, &y_fit))?;
            let pred: Vec<u8> = model.predict(m, cfg.evaluation.threshold)?.iter().map(|p| p.label).collect();
            let train = evaluate(labels, &pred, SplitTag::Train)?;
            Ok(TrainedModel {
                file_name: format!("{name}.json"),
                document: ModelDocument::new(spec.clone(), m.column_names().to_vec(), model),
                train,
            })
        })
        .collect()
}

/// `model,step,loss` rows for every model that records a loss trace.
pub fn trace_table(models: &[TrainedModel]) -> ReportTable {
    let mut t = ReportTable::new(["model", "step", "loss"]);
    for tm in models {
        let trace = match &tm.document.model {
            Model::Logreg(l) => &l.loss_trace,
            Model::Gbt(g) => &g.loss_trace,
            _ => continue,
        };
        let name = tm.file_name.trim_end_matches(".json");
        for (i, v) in trace.iter().enumerate() {
            t.push([name.to_string(), i.to_string(), v.to_string()]);
        }
    }
    t
}

/// Compare all configured models under the evaluation protocol. A single
/// spec is evaluated alone.
pub fn run_evaluate(cfg: &PipelineConfig, m: &FeatureMatrix, labels: &[u8]) -> Result<ComparisonReport> {
    let protocol = cfg.evaluation.protocol();
    stage(
        "evaluate",
        if cfg.models.len() >= 2 {
            compare_models(&cfg.models, m, labels, &protocol)
        } else {
            let entry = evaluate_protocol(&cfg.models[0], m, labels, &protocol)?;
            Ok(ComparisonReport {
                protocol,
                entries: vec![entry],
                ranking: vec![0],
            })
        },
    )
}

/// Out-of-fold mislabel suspects, when a baseline is configured.
pub fn run_mislabel_check(cfg: &PipelineConfig, m: &FeatureMatrix, labels: &[u8]) -> Result<Option<MislabelReport>> {
    let Some(spec) = &cfg.evaluation.flag_mislabeled else {
        return Ok(None);
    };
    let e = &cfg.evaluation;
    let opts = CvOptions {
        folds: e.folds,
        seed: seed::derive(e.seed, &[8]),
        balance: e.balance,
        threshold: e.threshold,
    };
    stage("mislabel", flag_mislabeled(spec, m, labels, &opts).map(Some))
}

// ------------------------------------------------------------ profile

/// Read `ID,label` pairs and align them with the dataset rows.
pub fn load_labels(path: &Path, column: Option<&str>, ds: &Dataset) -> Result<Vec<usize>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        path: path.to_owned(),
        source: e,
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_owned(),
            source: e,
        })?
        .clone();
    let id_pos = headers
        .iter()
        .position(|h| h == "ID")
        .ok_or_else(|| Error::MissingColumn { column: "ID".into() })?;
    let label_pos = match column {
        Some(c) => headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| Error::MissingColumn { column: c.into() })?,
        None => (0..headers.len())
            .find(|&i| i != id_pos)
            .ok_or_else(|| Error::Schema("labels file has no label column".into()))?,
    };
    let mut by_id: BTreeMap<i64, usize> = BTreeMap::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_owned(),
            source: e,
        })?;
        let parse = |i: usize, expected| Error::Parse {
            line: r + 2,
            column: headers[i].to_string(),
            value: rec[i].to_string(),
            expected,
        };
        let id: i64 = rec[id_pos].trim().parse().map_err(|_| parse(id_pos, "integer"))?;
        let label: usize = rec[label_pos].trim().parse().map_err(|_| parse(label_pos, "cluster index"))?;
        by_id.insert(id, label);
    }
    let ids = ds.row_ids()?;
    let missing: Vec<i64> = ids.iter().filter(|id| !by_id.contains_key(id)).copied().take(5).collect();
    let known: std::collections::BTreeSet<i64> = ids.iter().copied().collect();
    let extra: Vec<i64> = by_id.keys().filter(|id| !known.contains(id)).copied().take(5).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::Schema(format!(
            "label IDs do not match dataset IDs; without label: {missing:?}, unknown: {extra:?}"
        )));
    }
    Ok(ids.iter().map(|id| by_id[id]).collect())
}

pub fn run_profile(cfg: &PipelineConfig, ds: &Dataset, labels: &[usize]) -> Result<(SegmentProfile, ReportTable)> {
    let p = profile_segments_with(ds, labels, &cfg.profile.options)?;
    let t = profile_table(&p);
    Ok((p, t))
}
