//! `nids` command line: `analyze`, `train`, `evaluate` and `predict`.
//!
//! Every command writes its outputs plus a `manifest.json` (seed, config
//! hash, tool and format versions, input hashes) into `--out`. Exit codes:
//! 0 success, 2 usage or configuration error, 3 data error, 4 I/O error.
//! `NIDS_THREADS` sets the worker thread count.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    class_distribution, imbalance_ratio_matrix, imbalance_report, IrMatrix, IrMode, IMBALANCE_THRESHOLD,
};
use crate::classes::{ClassList, NUM_CLASSES};
use crate::data::{ingest_csv, preprocess, FeatureSchema, SampleMatrix};
use crate::ensemble::ProbabilityScoreMatrix;
use crate::error::{Error, Result};
use crate::metrics::{attack_error_breakdown, collapse_labels, MetricsReport, View, VoteMode, BINARY_CLASS_NAMES};
use crate::overlap::{ConfusionMatrix, OverlapModel, OverlapTable};
use crate::pipeline::{
    evaluate_artifact, load_artifact, predict_table, save_artifact, train_full_ensemble_logged,
    EnsembleConfig, EvaluationOptions, FORMAT_VERSION,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const THREADS_ENV: &str = "NIDS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nids", version, about = "Imbalance- and overlap-aware intrusion detection ensemble")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Class distribution, imbalance-ratio matrices and flagged pairs.
    Analyze(AnalyzeArgs),
    /// Train the ensemble and write an artifact.
    Train(TrainArgs),
    /// Score a labelled test file and write metric reports.
    Evaluate(EvaluateArgs),
    /// Write per-row predicted labels.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column schema file; defaults to the bundled UNSW-NB15 layout.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// TOML training configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact path; defaults to `<out>/artifact.json`.
    #[arg(long)]
    artifact: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScoringArgs {
    #[arg(long)]
    artifact: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Leave the bagging and booster scores unmodified.
    #[arg(long)]
    no_correction: bool,
    /// Report the collapsed Normal/Attack view instead of ten classes.
    #[arg(long)]
    binary: bool,
    /// Also write every model's score matrix as CSV.
    #[arg(long)]
    dump_scores: bool,
    #[arg(long, value_enum, default_value_t = VoteMode::Sum)]
    vote: VoteMode,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Records to label; target columns may be absent.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
}

impl ScoringArgs {
    fn options(&self) -> EvaluationOptions {
        EvaluationOptions {
            correction: !self.no_correction,
            vote: self.vote,
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: &'static str,
    tool_version: &'static str,
    format_version: u32,
    seed: Option<u64>,
    config_sha256: Option<String>,
    inputs: BTreeMap<String, String>,
    options: BTreeMap<&'static str, String>,
    outputs: Vec<String>,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            format_version: FORMAT_VERSION,
            seed: None,
            config_sha256: None,
            inputs: BTreeMap::new(),
            options: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| with_path(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn with_path(path: &Path, e: io::Error) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(with_path(path, io::Error::new(io::ErrorKind::NotFound, "no such file")))
    }
}

/// Collects output files so they can be listed in the manifest.
struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| with_path(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| with_path(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| with_path(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn finish(mut self, mut manifest: Manifest) -> Result<()> {
        self.written.sort();
        manifest.outputs = std::mem::take(&mut self.written);
        self.json("manifest.json", &manifest)
    }
}

fn load_schema(path: Option<&Path>) -> Result<FeatureSchema> {
    match path {
        Some(p) => FeatureSchema::from_file(p),
        None => Ok(FeatureSchema::unsw_nb15()),
    }
}

fn class_names() -> Vec<String> {
    ClassList::canonical().names().to_vec()
}

fn write_ir_csv(w: &mut impl Write, ir: &IrMatrix) -> Result<()> {
    let names = class_names();
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["class".to_string()];
    header.extend(names.iter().cloned());
    csv.write_record(&header)?;
    for (i, name) in names.iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend((0..NUM_CLASSES).map(|j| format!("{:.2}", ir.get(i, j))));
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    require_file(&args.data)?;
    if let Some(s) = &args.schema {
        require_file(s)?;
    }
    let mut manifest = Manifest::new("analyze");
    manifest.input(&args.data)?;
    if let Some(s) = &args.schema {
        manifest.input(s)?;
    }
    let mut schema = load_schema(args.schema.as_deref())?;
    let raw = ingest_csv(&args.data, &schema)?;
    schema.fit_nominal_maps(&raw)?;
    let m = preprocess(&raw, &schema)?;
    let dist = class_distribution(m.labels())?;

    let mut out = OutDir::create(&args.out)?;
    out.write_with("class_distribution.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["class", "count", "proportion"])?;
        for (i, name) in class_names().iter().enumerate() {
            csv.write_record([name.clone(), dist.counts[i].to_string(), dist.proportions[i].to_string()])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let raw_ir = imbalance_ratio_matrix(&dist, IrMode::RawCount)?;
    let rounded_ir = imbalance_ratio_matrix(&dist, IrMode::RoundedDistribution)?;
    out.write_with("ir_matrix_raw.csv", |w| write_ir_csv(w, &raw_ir))?;
    out.write_with("ir_matrix_rounded.csv", |w| write_ir_csv(w, &rounded_ir))?;
    let flagged = imbalance_report(&rounded_ir, IMBALANCE_THRESHOLD);
    out.json("flagged_pairs.json", &flagged)?;
    println!(
        "analyzed {} records; {} of 45 class pairs exceed IR {IMBALANCE_THRESHOLD}",
        dist.total(),
        flagged.len()
    );
    out.finish(manifest)
}

fn write_overlap(out: &mut OutDir, prefix: &str, model: &OverlapModel) -> Result<()> {
    let names = class_names();
    out.write_with(&format!("{prefix}_olm.csv"), |w| model.write_csv(w, &names, OverlapTable::Mean))?;
    out.write_with(&format!("{prefix}_olsd.csv"), |w| model.write_csv(w, &names, OverlapTable::StdDev))
}

fn train(args: &TrainArgs) -> Result<()> {
    require_file(&args.data)?;
    for p in [&args.schema, &args.config].into_iter().flatten() {
        require_file(p)?;
    }
    let mut config = match &args.config {
        Some(p) => EnsembleConfig::from_file(p)?,
        None => EnsembleConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mut manifest = Manifest::new("train");
    manifest.seed = Some(config.seed);
    manifest.config_sha256 = Some(sha256_hex(config.to_toml().as_bytes()));
    manifest.input(&args.data)?;
    for p in [&args.schema, &args.config].into_iter().flatten() {
        manifest.input(p)?;
    }

    let mut schema = load_schema(args.schema.as_deref())?;
    let raw = ingest_csv(&args.data, &schema)?;
    schema.fit_nominal_maps(&raw)?;
    let m = preprocess(&raw, &schema)?;
    let (artifact, log) = train_full_ensemble_logged(&m, &schema, &config)?;

    let mut out = OutDir::create(&args.out)?;
    let artifact_path = args.artifact.clone().unwrap_or_else(|| args.out.join("artifact.json"));
    if let Some(parent) = artifact_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| with_path(parent, e))?;
    }
    save_artifact(&artifact, &artifact_path).map_err(|e| match e {
        Error::Io(io) => with_path(&artifact_path, io),
        other => other,
    })?;
    manifest.options.insert("artifact", artifact_path.display().to_string());
    out.json("training_log.json", &log)?;
    out.write_with("config.toml", |w| Ok(w.write_all(config.to_toml().as_bytes())?))?;
    write_overlap(&mut out, "overlap_bb", &artifact.bb_overlap)?;
    write_overlap(&mut out, "overlap_booster", &artifact.booster_overlap)?;
    println!(
        "trained on {} records; validation accuracy bb {:.4}, booster {:.4}; artifact {}",
        m.n_samples(),
        log.bb_validation_accuracy,
        log.booster_validation_accuracy,
        artifact_path.display()
    );
    out.finish(manifest)
}

fn scoring_manifest(command: &'static str, s: &ScoringArgs, data: &Path) -> Result<Manifest> {
    let mut manifest = Manifest::new(command);
    manifest.input(data)?;
    manifest.input(&s.artifact)?;
    manifest.options.insert("correction", (!s.no_correction).to_string());
    manifest.options.insert("binary", s.binary.to_string());
    manifest.options.insert("dump_scores", s.dump_scores.to_string());
    manifest.options.insert(
        "vote",
        match s.vote {
            VoteMode::Sum => "sum",
            VoteMode::Hard => "hard",
        }
        .to_string(),
    );
    Ok(manifest)
}

fn dump_scores(out: &mut OutDir, scores: &crate::pipeline::EnsembleScores) -> Result<()> {
    let names = class_names();
    let all: [(&str, &ProbabilityScoreMatrix); 5] = [
        ("scores_bb.csv", &scores.bb_raw),
        ("scores_bb_corrected.csv", &scores.bb_corrected),
        ("scores_booster.csv", &scores.booster_raw),
        ("scores_booster_corrected.csv", &scores.booster_corrected),
        ("scores_rf_hddt.csv", &scores.rf_hddt),
    ];
    for (name, ps) in all {
        out.write_with(name, |w| ps.write_csv(w, &names))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    correction: bool,
    vote: VoteMode,
    records: u64,
    bb_corrections: usize,
    booster_corrections: usize,
    report: &'a MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    attack_errors: Option<crate::metrics::AttackErrorBreakdown>,
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let s = &args.scoring;
    require_file(&args.test)?;
    require_file(&s.artifact)?;
    let mut manifest = scoring_manifest("evaluate", s, &args.test)?;
    let artifact = load_artifact(&s.artifact)?;
    manifest.seed = Some(artifact.config.seed);
    manifest.config_sha256 = Some(sha256_hex(artifact.config.to_toml().as_bytes()));

    let raw = ingest_csv(&args.test, &artifact.schema)?;
    let test: SampleMatrix = preprocess(&raw, &artifact.schema)?;
    let eval = evaluate_artifact(&artifact, &test, s.options())?;

    let (view, cm, report): (View, &ConfusionMatrix, &MetricsReport) = if s.binary {
        (View::Binary, &eval.binary_cm, &eval.binary)
    } else {
        (View::Multiclass, &eval.multiclass_cm, &eval.multiclass)
    };
    let tag = if s.binary { "binary" } else { "multiclass" };
    let mut out = OutDir::create(&s.out)?;
    out.write_with(&format!("confusion_{tag}.csv"), |w| cm.write_csv(w, &view.class_names()))?;
    out.write_with(&format!("metrics_{tag}.csv"), |w| report.write_percent_csv(w))?;
    out.json(
        &format!("metrics_{tag}.json"),
        &MetricsFile {
            correction: !s.no_correction,
            vote: s.vote,
            records: cm.total(),
            bb_corrections: eval.scores.bb_corrections.len(),
            booster_corrections: eval.scores.booster_corrections.len(),
            report,
            attack_errors: if s.binary {
                None
            } else {
                Some(attack_error_breakdown(cm)?)
            },
        },
    )?;
    if s.dump_scores {
        dump_scores(&mut out, &eval.scores)?;
    }
    println!(
        "evaluated {} records: accuracy {:.4}, false-alarm rate {:.4}, missed-alarm rate {:.4}",
        cm.total(),
        report.overall_accuracy,
        report.false_alarm_rate,
        report.missed_alarm_rate
    );
    out.finish(manifest)
}

fn predict(args: &PredictArgs) -> Result<()> {
    let s = &args.scoring;
    require_file(&args.data)?;
    require_file(&s.artifact)?;
    let mut manifest = scoring_manifest("predict", s, &args.data)?;
    let artifact = load_artifact(&s.artifact)?;
    manifest.seed = Some(artifact.config.seed);
    manifest.config_sha256 = Some(sha256_hex(artifact.config.to_toml().as_bytes()));

    let raw = ingest_csv(&args.data, &artifact.schema)?;
    let mut out = OutDir::create(&s.out)?;
    let predicted = if s.dump_scores {
        // scoring through a matrix keeps the per-model scores around
        let (values, names) = crate::data::encode_features(&raw, &artifact.schema)?;
        let m = SampleMatrix::new(values, vec![0; raw.len()], names)?;
        let scores = crate::pipeline::score_matrix(&artifact, &m, s.options())?;
        dump_scores(&mut out, &scores)?;
        scores.predicted
    } else {
        predict_table(&artifact, &raw, s.options())?
    };
    let (labels, names): (Vec<usize>, Vec<String>) = if s.binary {
        (collapse_labels(&predicted), BINARY_CLASS_NAMES.iter().map(|n| n.to_string()).collect())
    } else {
        (predicted, class_names())
    };
    out.write_with("predictions.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["row", "predicted"])?;
        for (i, &l) in labels.iter().enumerate() {
            csv.write_record([(i + 1).to_string(), names[l].clone()])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    println!("predicted {} records", labels.len());
    out.finish(manifest)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    // a pool may already exist when called more than once in a process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_USAGE,
        e if !e.is_data_error() => EXIT_IO,
        _ => EXIT_DATA,
    }
}

/// Runs one command. `argv[0]` is the program name. Diagnostics go to
/// stderr as a single line; the return value is the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Predict(a) => predict(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Io(io::Error::other("x"))), EXIT_IO);
        assert_eq!(exit_code(&Error::EmptyInput), EXIT_DATA);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_command(["nids", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run_command(["nids"]), EXIT_USAGE);
        assert_eq!(run_command(["nids", "evaluate", "--artifact", "a.json"]), EXIT_USAGE);
        assert_eq!(run_command(["nids", "train", "--data", "x.csv", "--vote", "sum"]), EXIT_USAGE);
    }

    #[test]
    fn missing_input_is_io() {
        assert_eq!(run_command(["nids", "analyze", "--data", "/nonexistent/x.csv"]), EXIT_IO);
    }
}
