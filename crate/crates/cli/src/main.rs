//! `custseg`: clean, score, segment and model customer data from a JSON
//! pipeline config.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use custseg_core::clustering::profile_table;
use custseg_core::error::{Error, ErrorClass, Result};
use custseg_core::pipeline::{self, Artifacts, PipelineConfig, OUT_DIR_ENV};
use custseg_core::synth::{campaign, three_blobs, CampaignOptions};
use custseg_core::tabular::write_csv;

#[derive(Parser, Debug)]
#[command(name = "custseg", version, about = "Customer segmentation and campaign-response pipeline")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,

    /// Replace every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply cleaning rules and imputation; write the cleaned table and a report.
    Clean,
    /// Score recency/frequency/monetary quintiles and label segments.
    Rfm,
    /// K-means segmentation with elbow, silhouette and gap validity curves.
    Cluster,
    /// Fit every configured model on the full data and save them.
    Train,
    /// Cross-validate and rank the configured models.
    Evaluate,
    /// Describe segments given a labels file (`ID` plus a cluster column).
    Profile {
        /// Labels CSV; overrides `profile.labels_path`.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Write a seeded synthetic table.
    Synth {
        #[arg(long, value_enum, default_value_t = SynthKind::Campaign)]
        kind: SynthKind,
        #[arg(long, default_value_t = 2240)]
        rows: usize,
        /// Destination CSV.
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    Campaign,
    Blobs,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn load_config(cli: &Cli) -> std::result::Result<PipelineConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = PipelineConfig::load(path).map_err(|e| match e {
        Error::Io { .. } => Error::Config(format!("cannot read config: {e}")),
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &PipelineConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("custseg-out"))
}

fn cmd_clean(cfg: &PipelineConfig, out: &Artifacts) -> Result<()> {
    let raw = pipeline::load_input(cfg).map_err(|e| e.in_stage("load"))?;
    let (cleaned, report) = pipeline::run_clean(cfg, &raw).map_err(|e| e.in_stage("clean"))?;
    out.csv("cleaned.csv", &cleaned)?;
    out.json("cleaning_report.json", &report)?;
    info!(
        "kept {} of {} rows",
        report.cleaning.rows_after, report.cleaning.rows_before
    );
    Ok(())
}

fn cleaned_input(cfg: &PipelineConfig, engineer: bool) -> Result<custseg_core::Dataset> {
    let raw = pipeline::load_input(cfg).map_err(|e| e.in_stage("load"))?;
    let (cleaned, _) = pipeline::run_clean(cfg, &raw).map_err(|e| e.in_stage("clean"))?;
    if engineer {
        pipeline::run_engineer(cfg, &cleaned).map_err(|e| e.in_stage("engineer"))
    } else {
        Ok(cleaned)
    }
}

fn cmd_rfm(cfg: &PipelineConfig, out: &Artifacts) -> Result<()> {
    let ds = cleaned_input(cfg, false)?;
    let rfm = pipeline::run_rfm(cfg, &ds).map_err(|e| e.in_stage("rfm"))?;
    out.csv("rfm.csv", &rfm.table)?;
    out.json("rfm_summary.json", &rfm.summary)?;
    info!("scored {} customers", rfm.summary.customers);
    Ok(())
}

fn cmd_cluster(cfg: &PipelineConfig, out: &Artifacts) -> Result<()> {
    let ds = cleaned_input(cfg, true)?;
    let result = pipeline::run_cluster(cfg, &ds).map_err(|e| e.in_stage("cluster"))?;
    out.csv("clusters.csv", &result.labels_table())?;
    if let Some(v) = &result.validity {
        out.json("validity.json", v)?;
    }
    if let Some(curve) = result.curve_table() {
        out.csv("validity_curve.csv", &curve)?;
    }
    for run in &result.runs {
        let names = result.matrix.column_names();
        out.csv(&format!("centroids_{}.csv", run.criterion), &run.model.centroid_table(names))?;
        out.json(&format!("profile_{}.json", run.criterion), &run.profile)?;
        out.csv(&format!("profile_{}.csv", run.criterion), &profile_table(&run.profile))?;
        info!("{}: k = {}, wcss = {}", run.criterion, run.model.k, run.model.final_wcss);
    }
    Ok(())
}

fn cmd_train(cfg: &PipelineConfig, out: &Artifacts) -> Result<()> {
    let (m, labels) = pipeline::model_features(cfg, Some(out))?;
    let trained = pipeline::run_train(cfg, &m, &labels)?;
    let mut reports = BTreeMap::new();
    for t in &trained {
        out.json(&format!("models/{}", t.file_name), &t.document)?;
        reports.insert(t.file_name.trim_end_matches(".json").to_string(), t.train.clone());
        info!("{}: train mcc {:.4}", t.file_name, t.train.mcc);
    }
    out.json("train_reports.json", &reports)?;
    out.csv("loss_traces.csv", &pipeline::trace_table(&trained))?;
    Ok(())
}

fn cmd_evaluate(cfg: &PipelineConfig, out: &Artifacts) -> Result<()> {
    let (m, labels) = pipeline::model_features(cfg, Some(out))?;
    let report = pipeline::run_evaluate(cfg, &m, &labels)?;
    out.json("comparison.json", &report)?;
    out.csv("leaderboard.csv", &report.leaderboard())?;
    if let Some(suspects) = pipeline::run_mislabel_check(cfg, &m, &labels)? {
        info!("{} rows flagged as possibly mislabeled", suspects.flagged.len());
        out.json("mislabel_report.json", &suspects)?;
    }
    let best = report.best();
    info!("best: {} (mean test mcc {:.4})", best.name, best.test_mcc.mean);
    Ok(())
}

fn cmd_profile(cfg: &PipelineConfig, out: &Artifacts, labels: Option<&Path>) -> Result<()> {
    let labels_path = labels
        .map(Path::to_path_buf)
        .or_else(|| cfg.profile.labels_path.clone())
        .ok_or_else(|| Error::Config("profile needs --labels or profile.labels_path".into()))?;
    let ds = cleaned_input(cfg, true)?;
    let labels = pipeline::load_labels(&labels_path, cfg.profile.label_column.as_deref(), &ds)
        .map_err(|e| e.in_stage("labels"))?;
    let (profile, table) = pipeline::run_profile(cfg, &ds, &labels).map_err(|e| e.in_stage("profile"))?;
    out.json("profile.json", &profile)?;
    out.csv("profile.csv", &table)?;
    Ok(())
}

fn cmd_synth(kind: SynthKind, rows: usize, seed: u64, output: &Path) -> Result<()> {
    match kind {
        SynthKind::Campaign => {
            let ds = campaign(&CampaignOptions {
                rows,
                seed,
                ..Default::default()
            })?;
            write_csv(&ds, output, b',')
        }
        SynthKind::Blobs => write_csv(&three_blobs(rows.div_ceil(3), 1.0, seed)?.0, output, b','),
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::Synth { kind, rows, output } = &cli.command {
        return cmd_synth(*kind, *rows, cli.seed.unwrap_or(0), output);
    }
    let cfg = load_config(cli)?;
    let out = Artifacts::new(out_dir(cli, &cfg))?;
    match &cli.command {
        Command::Clean => cmd_clean(&cfg, &out),
        Command::Rfm => cmd_rfm(&cfg, &out),
        Command::Cluster => cmd_cluster(&cfg, &out),
        Command::Train => cmd_train(&cfg, &out),
        Command::Evaluate => cmd_evaluate(&cfg, &out),
        Command::Profile { labels } => cmd_profile(&cfg, &out, labels.as_deref()),
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
