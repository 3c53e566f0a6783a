//! Command-line front end: data validation and synthesis, single-model
//! training and prediction, the cross-validated evaluation report, the
//! tolerance-fraction sweep, and plot-ready figure data.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 usage
//! error.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{
    filter_min_count, load_dataset_path, scan_csv, synth_generate, write_dataset_path, Dataset,
    SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, histogram_data, make_folds, ols_fit, pearson, write_accuracy_csv,
    write_importance_csv, CvOptions, HistogramData,
};
use crate::metric::{default_p_grid, sweep_p, tolerance, MetricParams, PredictionPair};
use crate::predictor::{fit, MethodId, Predictor, TrainParams};

/// Identifier stamped into model artifacts so stale or foreign JSON is
/// rejected before deserialization is attempted.
pub const MODEL_FORMAT: &str = "casetime-model/1";

#[derive(Parser)]
#[command(
    name = "casetime",
    version,
    about = "Surgical case duration prediction and evaluation",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a CSV file against the case schema
    Validate(ValidateArgs),
    /// Generate a synthetic caseload CSV
    Synth(SynthArgs),
    /// Fit one method and save a model artifact
    Train(TrainArgs),
    /// Apply a saved model artifact to a CSV of cases
    Predict(PredictArgs),
    /// Cross-validate methods and write report files
    Evaluate(EvaluateArgs),
    /// Accuracy as a function of the tolerance fraction p
    Sweep(SweepArgs),
    /// Export plot-ready histogram, scatter and tolerance-curve data
    Figures(FiguresArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// CSV file to check
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write the generated CSV
    #[arg(long)]
    out: PathBuf,
    /// Optional sidecar CSV of noiseless log durations (case_id, true_log_duration)
    #[arg(long)]
    truth_out: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    procedures: usize,
    #[arg(long, default_value_t = 80)]
    cases_per_procedure: usize,
    #[arg(long, default_value_t = 10)]
    surgeons: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Log-space noise on actual durations
    #[arg(long, default_value_t = 0.25)]
    log_noise_sigma: f64,
    /// Log-space noise on expert estimates
    #[arg(long, default_value_t = 0.15)]
    expert_noise_sigma: f64,
    /// Systematic log-space shift of expert estimates
    #[arg(long, default_value_t = 0.0)]
    expert_bias: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Training cases CSV
    #[arg(long)]
    input: PathBuf,
    /// One of AVG, SCH, DTR, RFR, ABR, DTR-SCH, RFR-SCH, ABR-SCH
    #[arg(long)]
    method: String,
    /// Where to write the model artifact (JSON)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    hyper: HyperOpts,
}

#[derive(Args)]
struct PredictArgs {
    /// Model artifact written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Cases to predict
    #[arg(long)]
    input: PathBuf,
    /// Where to write the predictions CSV (case_id, predicted_min)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    run: RunOpts,
    /// Directory for report.json and the CSV tables
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunOpts,
    /// Where to write the sweep CSV
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    p_step: Option<f64>,
}

#[derive(Args)]
struct FiguresArgs {
    /// Cases CSV to describe
    #[arg(long)]
    input: Option<PathBuf>,
    /// Use the built-in synthetic dataset instead of a file
    #[arg(long, conflicts_with = "input")]
    synthetic: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "figures")]
    out_dir: PathBuf,
    /// Histogram bin count
    #[arg(long, default_value_t = 30)]
    bins: usize,
    /// Restrict histograms to one procedure
    #[arg(long)]
    procedure: Option<String>,
    /// Largest prediction on the tolerance curve, in minutes
    #[arg(long, default_value_t = 500)]
    tau_max: u32,
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    #[arg(long, default_value_t = 15.0)]
    m: f64,
    #[arg(long, default_value_t = 60.0)]
    cap: f64,
}

/// Options shared by `evaluate` and `sweep`. Every value can also come
/// from the config file; a flag always wins over the file.
#[derive(Args)]
struct RunOpts {
    /// TOML config file (flags override its values)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cases CSV to evaluate on
    #[arg(long)]
    input: Option<PathBuf>,
    /// Use the built-in synthetic dataset instead of a file
    #[arg(long, conflicts_with = "input")]
    synthetic: bool,
    /// Comma-separated method list (default: all eight)
    #[arg(long)]
    methods: Option<String>,
    /// Tolerance fraction of the predicted duration
    #[arg(long)]
    p: Option<f64>,
    /// Tolerance floor, minutes
    #[arg(long)]
    m: Option<f64>,
    /// Tolerance cap, minutes
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Deal folds within each procedure (true) or over the pooled set
    #[arg(long)]
    stratify: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    /// Drop procedures with fewer cases than this before evaluating
    #[arg(long)]
    min_procedure_count: Option<usize>,
    #[command(flatten)]
    hyper: HyperOpts,
}

/// Model hyperparameters. Tree gates apply to single trees and to the
/// trees inside both ensembles.
#[derive(Args, Default)]
struct HyperOpts {
    #[arg(long)]
    min_samples_split: Option<usize>,
    /// 0 means unlimited
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    bootstrap: Option<bool>,
    /// Features scanned per split; 0 means all
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    n_estimators: Option<usize>,
    /// linear, square or exponential
    #[arg(long)]
    boost_loss: Option<String>,
}

/// The config file's schema. Flat on purpose: one experiment, one
/// readable manifest. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    input: Option<String>,
    synthetic: Option<bool>,
    methods: Option<Vec<String>>,
    p: Option<f64>,
    m: Option<f64>,
    cap: Option<f64>,
    repeats: Option<usize>,
    folds: Option<usize>,
    stratify: Option<bool>,
    seed: Option<u64>,
    min_procedure_count: Option<usize>,
    min_samples_split: Option<usize>,
    max_depth: Option<usize>,
    min_samples_leaf: Option<usize>,
    n_trees: Option<usize>,
    bootstrap: Option<bool>,
    max_features: Option<usize>,
    n_estimators: Option<usize>,
    boost_loss: Option<String>,
    p_min: Option<f64>,
    p_max: Option<f64>,
    p_step: Option<f64>,
    out_dir: Option<String>,
    out: Option<String>,
}

enum Source {
    Csv(PathBuf),
    Synthetic,
}

struct Settings {
    source: Source,
    methods: Vec<MethodId>,
    metric: MetricParams,
    repeats: usize,
    folds: usize,
    stratify: bool,
    seed: u64,
    min_procedure_count: usize,
    train: TrainParams,
}

/// Parses arguments and runs one subcommand, reporting the exit code
/// instead of exiting so tests and other hosts can call it directly.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Figures(args) => cmd_figures(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<i32> {
    let file = fs::File::open(&args.input)
        .map_err(|e| Error::file(args.input.display().to_string(), e))?;
    let scan = scan_csv(std::io::BufReader::new(file))?;
    for err in &scan.errors {
        println!("invalid: {err}");
    }
    println!("{} valid case(s), {} error(s)", scan.valid, scan.errors.len());
    Ok(if scan.errors.is_empty() { 0 } else { 1 })
}

fn cmd_synth(args: SynthArgs) -> Result<i32> {
    let mut cfg = SynthConfig::with_counts(args.procedures, args.cases_per_procedure, args.surgeons);
    cfg.seed = args.seed;
    cfg.log_noise_sigma = args.log_noise_sigma;
    cfg.expert_noise_sigma = args.expert_noise_sigma;
    cfg.expert_bias = args.expert_bias;
    let generated = synth_generate(&cfg)?;
    write_dataset_path(&generated.dataset, &args.out)?;
    println!(
        "wrote {} cases to {}",
        generated.dataset.len(),
        args.out.display()
    );
    if let Some(truth_path) = &args.truth_out {
        let mut w = csv::Writer::from_writer(create_file(truth_path)?);
        w.write_record(["case_id", "true_log_duration"])
            .map_err(Error::from)?;
        for (case, g) in generated
            .dataset
            .cases()
            .iter()
            .zip(&generated.true_log_durations)
        {
            w.write_record([case.case_id.as_str(), &fmt_f64(*g)])?;
        }
        w.flush().map_err(Error::from)?;
        println!("wrote ground truth to {}", truth_path.display());
    }
    Ok(0)
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let method: MethodId = args.method.parse()?;
    let ds = load_dataset_path(&args.input)?;
    let params = resolve_train_params(args.seed, &args.hyper, &FileConfig::default())?;
    let predictor = fit(method, &ds, &params)?;
    let artifact = serde_json::json!({
        "format": MODEL_FORMAT,
        "predictor": predictor,
    });
    let text = serde_json::to_string_pretty(&artifact).expect("artifact is plain data");
    write_text(&args.out, &(text + "\n"))?;
    println!(
        "trained {method} on {} cases, wrote {}",
        ds.len(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_predict(args: PredictArgs) -> Result<i32> {
    let text = read_text(&args.model)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Artifact(format!("not JSON: {e}")))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(MODEL_FORMAT) => {}
        Some(other) => {
            return Err(Error::Artifact(format!(
                "unsupported format {other:?}, expected {MODEL_FORMAT:?}"
            )))
        }
        None => return Err(Error::Artifact("missing format field".into())),
    }
    let predictor: Predictor = serde_json::from_value(value["predictor"].take())
        .map_err(|e| Error::Artifact(format!("bad predictor payload: {e}")))?;
    let ds = load_dataset_path(&args.input)?;
    let mut w = csv::Writer::from_writer(create_file(&args.out)?);
    w.write_record(["case_id", "predicted_min"])?;
    for case in ds.cases() {
        w.write_record([case.case_id.as_str(), &fmt_f64(predictor.predict(case))])?;
    }
    w.flush().map_err(Error::from)?;
    println!("wrote {} predictions to {}", ds.len(), args.out.display());
    Ok(0)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32> {
    let fc = load_file_config(args.run.config.as_deref())?;
    let settings = resolve_settings(&args.run, &fc)?;
    let ds = load_source(&settings)?;
    let plan = make_folds(
        &ds,
        settings.repeats,
        settings.folds,
        settings.seed,
        settings.stratify,
    )?;
    let out = cross_validate(
        &ds,
        &settings.methods,
        &plan,
        &settings.metric,
        &settings.train,
        &CvOptions::default(),
    )?;

    let out_dir = args
        .out_dir
        .or_else(|| fc.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out_dir).map_err(|e| Error::file(out_dir.display().to_string(), e))?;

    let report_path = out_dir.join("report.json");
    let text = serde_json::to_string_pretty(&out.report).expect("report is plain data");
    write_text(&report_path, &(text + "\n"))?;
    let acc_path = out_dir.join("accuracy_table.csv");
    write_accuracy_csv(&out.report, create_file(&acc_path)?)?;
    let imp_path = out_dir.join("importance_table.csv");
    write_importance_csv(&out.report, create_file(&imp_path)?)?;

    for row in &out.report.accuracy {
        if row.procedure == "Overall" {
            println!(
                "{:<8} overall accuracy {:.4} (sd {:.4})",
                row.method, row.mean, row.sd_cells
            );
        }
    }
    println!(
        "wrote {}, {}, {}",
        report_path.display(),
        acc_path.display(),
        imp_path.display()
    );
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let fc = load_file_config(args.run.config.as_deref())?;
    let settings = resolve_settings(&args.run, &fc)?;
    let grid = resolve_grid(&args, &fc)?;
    let ds = load_source(&settings)?;
    let plan = make_folds(
        &ds,
        settings.repeats,
        settings.folds,
        settings.seed,
        settings.stratify,
    )?;
    let out = cross_validate(
        &ds,
        &settings.methods,
        &plan,
        &settings.metric,
        &settings.train,
        &CvOptions {
            collect_pairs: true,
            collect_model_importances: false,
        },
    )?;
    let pooled = out.pooled_pairs.expect("pairs were requested");

    let mut union: Vec<PredictionPair> = Vec::new();
    for method in &out.report.methods {
        union.extend(pooled[method].iter().cloned());
    }
    let overall = sweep_p(&union, &grid, settings.metric.m, settings.metric.cap)?;
    let mut per_method = Vec::with_capacity(out.report.methods.len());
    for method in &out.report.methods {
        per_method.push(sweep_p(
            &pooled[method],
            &grid,
            settings.metric.m,
            settings.metric.cap,
        )?);
    }

    let path = args
        .out
        .or_else(|| fc.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    let mut header = vec!["p".to_string(), "overall".to_string()];
    header.extend(out.report.methods.iter().cloned());
    w.write_record(&header)?;
    for (i, (p, acc)) in overall.iter().enumerate() {
        let mut record = vec![fmt_f64(*p), fmt_f64(*acc)];
        for series in &per_method {
            record.push(fmt_f64(series[i].1));
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(Error::from)?;
    println!("wrote {} grid points to {}", overall.len(), path.display());
    Ok(0)
}

fn cmd_figures(args: FiguresArgs) -> Result<i32> {
    let metric = MetricParams::new(args.p, args.m, args.cap)?;
    let ds = if let Some(path) = &args.input {
        load_dataset_path(path)?
    } else if args.synthetic {
        let mut cfg = SynthConfig::default();
        cfg.seed = args.seed;
        synth_generate(&cfg)?.dataset
    } else {
        return Err(Error::InvalidConfig(
            "no data source: pass --input FILE or --synthetic".into(),
        ));
    };
    let ds = match &args.procedure {
        None => ds,
        Some(name) => {
            let indices: Vec<usize> = ds
                .cases()
                .iter()
                .enumerate()
                .filter(|(_, c)| &c.procedure_name == name)
                .map(|(i, _)| i)
                .collect();
            if indices.is_empty() {
                return Err(Error::DegenerateInput(format!(
                    "no cases for procedure {name:?}"
                )));
            }
            ds.select(&indices)
        }
    };

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::file(args.out_dir.display().to_string(), e))?;
    let durations: Vec<f64> = ds.cases().iter().map(|c| c.actual_duration_min).collect();

    let raw = histogram_data(&durations, args.bins, false)?;
    write_histogram_csv(&raw, &args.out_dir.join("hist_raw.csv"))?;
    let log = histogram_data(&durations, args.bins, true)?;
    write_histogram_csv(&log, &args.out_dir.join("hist_log.csv"))?;

    let ages: Vec<f64> = ds.cases().iter().map(|c| c.age_years).collect();
    let weights: Vec<f64> = ds.cases().iter().map(|c| c.weight_kg).collect();
    let scatter_path = args.out_dir.join("weight_age.csv");
    let mut w = csv::Writer::from_writer(create_file(&scatter_path)?);
    w.write_record(["age_years", "weight_kg"])?;
    for (a, kg) in ages.iter().zip(&weights) {
        w.write_record([&fmt_f64(*a), &fmt_f64(*kg)])?;
    }
    w.flush().map_err(Error::from)?;

    let line = ols_fit(&ages, &weights)?;
    let r = pearson(&ages, &weights)?;
    let ols_json = serde_json::json!({
        "slope": line.slope,
        "intercept": line.intercept,
        "pearson": r,
        "n": ds.len(),
    });
    let ols_path = args.out_dir.join("weight_age_ols.json");
    write_text(
        &ols_path,
        &(serde_json::to_string_pretty(&ols_json).expect("plain data") + "\n"),
    )?;

    let tau_path = args.out_dir.join("tau_curve.csv");
    let mut w = csv::Writer::from_writer(create_file(&tau_path)?);
    w.write_record(["y_hat", "tau"])?;
    for y_hat in 1..=args.tau_max {
        let t = tolerance(f64::from(y_hat), &metric)?;
        w.write_record([&fmt_f64(f64::from(y_hat)), &fmt_f64(t)])?;
    }
    w.flush().map_err(Error::from)?;

    println!("wrote 5 figure files to {}", args.out_dir.display());
    Ok(0)
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = read_text(path)?;
            toml::from_str(&text).map_err(|e| {
                Error::InvalidConfig(format!("{}: {e}", path.display()))
            })
        }
    }
}

fn resolve_settings(opts: &RunOpts, fc: &FileConfig) -> Result<Settings> {
    let source = if let Some(path) = &opts.input {
        Source::Csv(path.clone())
    } else if opts.synthetic {
        Source::Synthetic
    } else {
        match (&fc.input, fc.synthetic.unwrap_or(false)) {
            (Some(_), true) => {
                return Err(Error::InvalidConfig(
                    "config sets both input and synthetic = true; pick one".into(),
                ))
            }
            (Some(path), false) => Source::Csv(PathBuf::from(path)),
            (None, true) => Source::Synthetic,
            (None, false) => {
                return Err(Error::InvalidConfig(
                    "no data source: pass --input FILE or --synthetic, or set one in the config"
                        .into(),
                ))
            }
        }
    };

    let metric = MetricParams::new(
        opts.p.or(fc.p).unwrap_or(0.2),
        opts.m.or(fc.m).unwrap_or(15.0),
        opts.cap.or(fc.cap).unwrap_or(60.0),
    )?;
    let seed = opts.seed.or(fc.seed).unwrap_or(42);

    Ok(Settings {
        source,
        methods: resolve_methods(opts.methods.as_deref(), fc)?,
        metric,
        repeats: opts.repeats.or(fc.repeats).unwrap_or(5),
        folds: opts.folds.or(fc.folds).unwrap_or(5),
        stratify: opts.stratify.or(fc.stratify).unwrap_or(true),
        seed,
        min_procedure_count: opts
            .min_procedure_count
            .or(fc.min_procedure_count)
            .unwrap_or(40),
        train: resolve_train_params(seed, &opts.hyper, fc)?,
    })
}

fn resolve_methods(flag: Option<&str>, fc: &FileConfig) -> Result<Vec<MethodId>> {
    let labels: Vec<String> = if let Some(s) = flag {
        s.split(',')
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect()
    } else if let Some(list) = &fc.methods {
        list.clone()
    } else {
        return Ok(MethodId::ALL.to_vec());
    };
    if labels.is_empty() {
        return Err(Error::InvalidConfig("methods list is empty".into()));
    }
    labels.iter().map(|l| l.parse()).collect()
}

fn resolve_train_params(seed: u64, hyper: &HyperOpts, fc: &FileConfig) -> Result<TrainParams> {
    let mut tp = TrainParams::default();
    tp.seed = seed;
    if let Some(v) = hyper.min_samples_split.or(fc.min_samples_split) {
        tp.tree.min_samples_split = v;
        tp.forest.tree.min_samples_split = v;
        tp.boost.tree.min_samples_split = v;
    }
    if let Some(v) = hyper.max_depth.or(fc.max_depth) {
        let depth = if v == 0 { None } else { Some(v) };
        tp.tree.max_depth = depth;
        tp.forest.tree.max_depth = depth;
        tp.boost.tree.max_depth = depth;
    }
    if let Some(v) = hyper.min_samples_leaf.or(fc.min_samples_leaf) {
        tp.tree.min_samples_leaf = v;
        tp.forest.tree.min_samples_leaf = v;
        tp.boost.tree.min_samples_leaf = v;
    }
    if let Some(v) = hyper.n_trees.or(fc.n_trees) {
        tp.forest.n_trees = v;
    }
    if let Some(v) = hyper.bootstrap.or(fc.bootstrap) {
        tp.forest.bootstrap = v;
    }
    if let Some(v) = hyper.max_features.or(fc.max_features) {
        tp.forest.max_features = if v == 0 { None } else { Some(v) };
    }
    if let Some(v) = hyper.n_estimators.or(fc.n_estimators) {
        tp.boost.n_estimators = v;
    }
    if let Some(s) = hyper.boost_loss.as_deref().or(fc.boost_loss.as_deref()) {
        tp.boost.loss = s.parse()?;
    }
    tp.tree.validate()?;
    tp.forest.validate()?;
    tp.boost.validate()?;
    Ok(tp)
}

fn resolve_grid(args: &SweepArgs, fc: &FileConfig) -> Result<Vec<f64>> {
    let p_min = args.p_min.or(fc.p_min);
    let p_max = args.p_max.or(fc.p_max);
    let p_step = args.p_step.or(fc.p_step);
    if p_min.is_none() && p_max.is_none() && p_step.is_none() {
        return Ok(default_p_grid());
    }
    let lo = p_min.unwrap_or(0.05);
    let hi = p_max.unwrap_or(0.5);
    let step = p_step.unwrap_or(0.05);
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "p_step must be positive, got {step}"
        )));
    }
    if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
        return Err(Error::InvalidConfig(format!(
            "p grid must satisfy 0 < p_min <= p_max < 1, got [{lo}, {hi}]"
        )));
    }
    let mut grid = Vec::new();
    let mut k = 0u32;
    loop {
        let p = lo + step * f64::from(k);
        if p > hi + 1e-12 {
            break;
        }
        // snap accumulated float error so grid points print cleanly
        grid.push((p * 1e9).round() / 1e9);
        k += 1;
    }
    Ok(grid)
}

fn load_source(settings: &Settings) -> Result<Dataset> {
    let ds = match &settings.source {
        Source::Csv(path) => load_dataset_path(path)?,
        Source::Synthetic => {
            let mut cfg = SynthConfig::default();
            cfg.seed = settings.seed;
            synth_generate(&cfg)?.dataset
        }
    };
    let filtered = filter_min_count(&ds, settings.min_procedure_count.max(1));
    if filtered.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "no procedure has at least {} cases",
            settings.min_procedure_count
        )));
    }
    Ok(filtered)
}

fn write_histogram_csv(hist: &HistogramData, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_file(path)?);
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for (i, count) in hist.counts.iter().enumerate() {
        w.write_record([
            &fmt_f64(hist.edges[i]),
            &fmt_f64(hist.edges[i + 1]),
            &count.to_string(),
        ])?;
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    let file =
        fs::File::create(path).map_err(|e| Error::file(path.display().to_string(), e))?;
    Ok(std::io::BufWriter::new(file))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::file(path.display().to_string(), e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::file(path.display().to_string(), e))
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_config_rejects_unknown_keys() {
        let err = toml::from_str::<FileConfig>("p = 0.2\nmystery = 1\n");
        assert!(err.is_err());
        let ok: FileConfig = toml::from_str("p = 0.25\nmethods = [\"AVG\", \"SCH\"]\n").unwrap();
        assert_eq!(ok.p, Some(0.25));
        assert_eq!(ok.methods.as_deref(), Some(&["AVG".to_string(), "SCH".to_string()][..]));
    }

    #[test]
    fn grid_defaults_and_custom_ranges() {
        let sweep = SweepArgs {
            run: default_run_opts(),
            out: None,
            p_min: None,
            p_max: None,
            p_step: None,
        };
        let grid = resolve_grid(&sweep, &FileConfig::default()).unwrap();
        assert_eq!(grid.len(), 10);
        assert_eq!(grid[0], 0.05);
        assert_eq!(grid[9], 0.5);

        let custom = SweepArgs {
            p_min: Some(0.1),
            p_max: Some(0.3),
            p_step: Some(0.1),
            ..sweep
        };
        let grid = resolve_grid(&custom, &FileConfig::default()).unwrap();
        assert_eq!(grid, vec![0.1, 0.2, 0.3]);

        let bad = SweepArgs {
            run: default_run_opts(),
            out: None,
            p_min: Some(0.4),
            p_max: Some(0.2),
            p_step: Some(0.1),
        };
        assert!(resolve_grid(&bad, &FileConfig::default()).is_err());
    }

    fn default_run_opts() -> RunOpts {
        RunOpts {
            config: None,
            input: None,
            synthetic: true,
            methods: None,
            p: None,
            m: None,
            cap: None,
            repeats: None,
            folds: None,
            stratify: None,
            seed: None,
            min_procedure_count: None,
            hyper: HyperOpts::default(),
        }
    }

    #[test]
    fn settings_resolve_with_defaults_and_overrides() {
        let opts = default_run_opts();
        let s = resolve_settings(&opts, &FileConfig::default()).unwrap();
        assert_eq!(s.repeats, 5);
        assert_eq!(s.folds, 5);
        assert!(s.stratify);
        assert_eq!(s.seed, 42);
        assert_eq!(s.methods.len(), 8);
        assert_eq!(s.metric.p, 0.2);
        assert_eq!(s.train.seed, 42);

        let fc: FileConfig = toml::from_str(
            "synthetic = true\nseed = 7\nfolds = 3\nn_trees = 11\nmax_depth = 0\n",
        )
        .unwrap();
        let mut opts = default_run_opts();
        opts.synthetic = false;
        opts.folds = Some(4);
        let s = resolve_settings(&opts, &fc).unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.folds, 4); // flag beats file
        assert_eq!(s.train.forest.n_trees, 11);
        assert_eq!(s.train.tree.max_depth, None);
        assert!(matches!(s.source, Source::Synthetic));
    }

    #[test]
    fn settings_require_a_data_source() {
        let mut opts = default_run_opts();
        opts.synthetic = false;
        assert!(resolve_settings(&opts, &FileConfig::default()).is_err());
        let fc: FileConfig = toml::from_str("input = \"x.csv\"\nsynthetic = true\n").unwrap();
        assert!(resolve_settings(&opts, &fc).is_err());
    }

    #[test]
    fn method_lists_parse_from_commas() {
        let ms = resolve_methods(Some("avg, rfr_sch ,SCH"), &FileConfig::default()).unwrap();
        assert_eq!(ms, vec![MethodId::Avg, MethodId::RfrSch, MethodId::Sch]);
        assert!(resolve_methods(Some("avg,bogus"), &FileConfig::default()).is_err());
        assert!(resolve_methods(Some(" , "), &FileConfig::default()).is_err());
    }

    #[test]
    fn hyper_flags_spread_to_all_families() {
        let hyper = HyperOpts {
            min_samples_split: Some(4),
            max_depth: Some(3),
            ..HyperOpts::default()
        };
        let tp = resolve_train_params(9, &hyper, &FileConfig::default()).unwrap();
        assert_eq!(tp.tree.min_samples_split, 4);
        assert_eq!(tp.forest.tree.min_samples_split, 4);
        assert_eq!(tp.boost.tree.min_samples_split, 4);
        assert_eq!(tp.boost.tree.max_depth, Some(3));
        assert_eq!(tp.seed, 9);
    }
}
