//! `wisard` command line: train, predict, cross-validate, sweep, synth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{load_feature_file, make_loo_plan, read_feature_rows, write_feature_file, Dataset};
use crate::encoding::Label;
use crate::evaluation::{
    emit_report, run_cross_validation, run_perceptron_cross_validation, sweep_csv,
    sweep_tuple_size, ComparisonRow, SweepResult, System,
};
use crate::exec::Execution;
use crate::io_util::write_atomic;
use crate::perceptron::{train_perceptron, training_accuracy, PerceptronHyper};
use crate::synth::{separable_dataset, SeparableSpec};
use crate::wnn::{
    load_model, save_model, DecisionMode, MappingKind, WisardConfig, WisardModel, MAX_TUPLE_SIZE,
};

pub const MODEL_FILE: &str = "model.wsd";
pub const MANIFEST_FILE: &str = "run_manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "wisard", version, about = "WiSARD classifier over binarized feature vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on every labeled row and write a model file.
    Train(TrainArgs),
    /// Classify rows of a feature file; CSV on standard output.
    Predict(PredictArgs),
    /// Grouped leave-one-out cross-validation with CSV reports.
    Crossval(CrossvalArgs),
    /// Cross-validation over a tuple-size range (default 9:14).
    Sweep(CrossvalArgs),
    /// Write a synthetic, linearly separable feature file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MappingArg {
    Random,
    Linear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DecisionArg {
    Threshold,
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Perceptron,
}

#[derive(Debug, Clone, Args)]
pub struct WisardArgs {
    /// Bits per RAM neuron.
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..=MAX_TUPLE_SIZE as u64))]
    pub n: u64,
    /// Seed for the tuple mapping and fold grouping.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    pub mapping: MappingArg,
    #[arg(long, value_enum, default_value = "threshold")]
    pub decision: DecisionArg,
    /// Fraction of RAMs that must be exceeded for a positive decision.
    #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
    pub threshold: f64,
    /// RAM fires only if its write count exceeds this level.
    #[arg(long, default_value_t = 0)]
    pub bleach: u32,
}

impl WisardArgs {
    pub fn config(&self) -> WisardConfig {
        WisardConfig {
            n: self.n as usize,
            seed: self.seed,
            mapping_kind: match self.mapping {
                MappingArg::Random => MappingKind::Random,
                MappingArg::Linear => MappingKind::Linear,
            },
            decision_mode: match self.decision {
                DecisionArg::Threshold => DecisionMode::Threshold,
                DecisionArg::Argmax => DecisionMode::Argmax,
            },
            threshold_fraction: self.threshold,
            bleach: self.bleach,
        }
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Inclusive tuple-size range written `LO:HI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub lo: usize,
    pub hi: usize,
}

impl std::str::FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
        let lo: usize = lo.parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
        let hi: usize = hi.parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
        if lo == 0 || lo > hi || hi > MAX_TUPLE_SIZE {
            return Err(format!("range must satisfy 1 <= LO <= HI <= {MAX_TUPLE_SIZE}"));
        }
        Ok(NRange { lo, hi })
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub wisard: WisardArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CrossvalArgs {
    /// Deep-feature file (the "with transfer learning" input).
    #[arg(long)]
    pub features: PathBuf,
    /// Raw-pixel feature file with the same ids, evaluated as `wisard_no_tl`.
    #[arg(long)]
    pub raw_features: Option<PathBuf>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    /// Tuple-size range `LO:HI`; overrides `--n`.
    #[arg(long)]
    pub sweep: Option<NRange>,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub pos_group: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub neg_group: u64,
    /// Perceptron epochs.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    /// Perceptron learning rate.
    #[arg(long, default_value_t = 0.01, value_parser = parse_learning_rate)]
    pub lr: f64,
    /// Run folds on a single thread.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub wisard: WisardArgs,
}

fn parse_learning_rate(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("learning rate must be positive, got {v}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 63)]
    pub positives: usize,
    #[arg(long, default_value_t = 15)]
    pub negatives: usize,
    #[arg(long, default_value_t = 2048)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(args, out),
        Command::Predict(args) => cmd_predict(args, out),
        Command::Crossval(args) => cmd_crossval(args, "crossval", None, out),
        Command::Sweep(args) => cmd_crossval(args, "sweep", Some(NRange { lo: 9, hi: 14 }), out),
        Command::Synth(args) => cmd_synth(args, out),
    }
}

fn train_full(ds: &Dataset, cfg: WisardConfig) -> Result<WisardModel> {
    let mut model = WisardModel::new(cfg, ds.dim())?;
    for s in ds.samples() {
        let label = s.label.context("unlabeled sample")?;
        let pattern = model.encode(s).with_context(|| format!("sample `{}`", s.id))?;
        model.train(&pattern, label)?;
    }
    Ok(model)
}

fn format_counts(counts: &BTreeMap<Label, usize>) -> String {
    counts
        .iter()
        .map(|(class, count)| format!("class {class}: {count}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let ds = load_feature_file(&args.features)
        .with_context(|| format!("loading {}", args.features.display()))?;
    let model = train_full(&ds, args.wisard.config())?;
    save_model(&model, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    writeln!(out, "{}", format_counts(&ds.class_counts()))?;
    writeln!(
        out,
        "wrote {} (n = {}, K = {}, L = {})",
        args.out.display(),
        model.config().n,
        model.k(),
        model.mapping().length()
    )?;
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let is_blank = std::fs::metadata(&args.features)
        .with_context(|| format!("reading {}", args.features.display()))?
        .len()
        == 0;
    let rows = if is_blank {
        Vec::new()
    } else {
        let rows = read_feature_rows(&args.features)
            .with_context(|| format!("reading {}", args.features.display()))?;
        if !rows.rows.is_empty() && rows.dim != model.input_dim() {
            bail!(
                "dimension mismatch: model expects D = {}, feature file has D = {}",
                model.input_dim(),
                rows.dim
            );
        }
        rows.rows
    };
    let mut csv = String::from("id,predicted_label,fired,k_total\n");
    for row in &rows {
        let pattern = model.encode(row).with_context(|| format!("sample `{}`", row.id))?;
        let c = model.classify(&pattern)?;
        let _ = writeln!(csv, "{},{},{},{}", row.id, c.label, c.fired(), c.response.k_total);
    }
    out.write_all(csv.as_bytes())?;
    Ok(())
}

/// Loads the raw-pixel file and checks it describes the same samples.
fn load_matching(path: &Path, reference: &Dataset) -> Result<Dataset> {
    let raw = load_feature_file(path).with_context(|| format!("loading {}", path.display()))?;
    ensure!(
        raw.len() == reference.len(),
        "{} has {} samples, expected {}",
        path.display(),
        raw.len(),
        reference.len()
    );
    for s in reference.samples() {
        let i = raw
            .index_of(&s.id)
            .with_context(|| format!("{} lacks sample `{}`", path.display(), s.id))?;
        ensure!(
            raw.samples()[i].label == s.label,
            "sample `{}` is labeled differently in {}",
            s.id,
            path.display()
        );
    }
    Ok(raw)
}

pub fn cmd_crossval(
    args: &CrossvalArgs,
    command: &str,
    default_range: Option<NRange>,
    out: &mut dyn Write,
) -> Result<()> {
    let base = args.wisard.config();
    let range = args.sweep.or(default_range).unwrap_or(NRange {
        lo: base.n,
        hi: base.n,
    });
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let hyper = PerceptronHyper {
        learning_rate: args.lr,
        epochs: args.epochs as usize,
        seed: args.wisard.seed,
        ..PerceptronHyper::default()
    };

    let ds = load_feature_file(&args.features)
        .with_context(|| format!("loading {}", args.features.display()))?;
    let raw = args
        .raw_features
        .as_deref()
        .map(|p| load_matching(p, &ds))
        .transpose()?;
    let plan = make_loo_plan(
        &ds,
        args.pos_group as usize,
        args.neg_group as usize,
        args.wisard.seed,
    )?;

    let sweep = sweep_tuple_size(&ds, &plan, &base, range.lo..=range.hi, exec)?;
    let best = *sweep.best().context("empty sweep")?;
    let best_cfg = base.with_n(best.n);
    let mut comparison = vec![ComparisonRow {
        system: System::WisardTl,
        accuracy: best.accuracy,
    }];

    let mut no_tl: Option<SweepResult> = None;
    if let Some(raw) = &raw {
        let result = sweep_tuple_size(raw, &plan, &base, range.lo..=range.hi, exec)
            .context("raw-feature sweep")?;
        let best_raw = result.best().context("empty sweep")?;
        comparison.push(ComparisonRow {
            system: System::WisardNoTl,
            accuracy: best_raw.accuracy,
        });
        no_tl = Some(result);
    }

    let mut perceptron_train_accuracy = None;
    if args.baseline == Some(Baseline::Perceptron) {
        let report = run_perceptron_cross_validation(&ds, &plan, hyper, exec)
            .context("perceptron baseline")?;
        comparison.push(ComparisonRow {
            system: System::PerceptronBaseline,
            accuracy: report.pooled.accuracy,
        });
        let all: Vec<_> = ds.samples().iter().collect();
        let full = train_perceptron(&all, hyper)?;
        perceptron_train_accuracy = Some((training_accuracy(&full, &all)?, full.epochs_run));
    }

    let dir = &args.out_dir;
    let paths = emit_report(&sweep, &comparison, dir)?;
    if let Some(result) = &no_tl {
        write_atomic(&dir.join("sweep_no_tl.csv"), sweep_csv(result).as_bytes())?;
    }

    let best_report = run_cross_validation(&ds, &plan, &best_cfg, exec)?;
    let mut folds_csv = String::from("fold,accuracy,tp,fp,tn,fn\n");
    let mut predictions_csv = String::from("fold,id,label,predicted,fired\n");
    for fold in &best_report.folds {
        let c = &fold.metrics.confusion;
        let _ = writeln!(
            folds_csv,
            "{},{:.4},{},{},{},{}",
            fold.index, fold.metrics.accuracy, c.tp, c.fp, c.tn, c.fn_
        );
        for p in &fold.predictions {
            let fired = p.fired.map(|f| f.to_string()).unwrap_or_default();
            let _ = writeln!(
                predictions_csv,
                "{},{},{},{},{}",
                fold.index, p.id, p.label, p.predicted, fired
            );
        }
    }
    write_atomic(&dir.join("folds.csv"), folds_csv.as_bytes())?;
    write_atomic(&dir.join("predictions.csv"), predictions_csv.as_bytes())?;
    write_atomic(&dir.join("fold_plan.json"), plan.to_json()?.as_bytes())?;

    let model = train_full(&ds, best_cfg)?;
    save_model(&model, &dir.join(MODEL_FILE))?;

    let mut manifest = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(manifest, "{k}={v}");
    };
    kv("command", &command);
    kv("features", &args.features.display());
    kv(
        "raw_features",
        &args
            .raw_features
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
    );
    kv("samples", &ds.len());
    kv("dimension", &ds.dim());
    for (class, count) in ds.class_counts() {
        kv(&format!("class_{class}_count"), &count);
    }
    kv("n_range", &format!("{}:{}", range.lo, range.hi));
    kv("seed", &base.seed);
    kv("mapping_kind", &base.mapping_kind.as_str());
    kv("decision_mode", &base.decision_mode.as_str());
    kv("threshold_fraction", &base.threshold_fraction);
    kv("bleach", &base.bleach);
    kv("pos_group", &args.pos_group);
    kv("neg_group", &args.neg_group);
    kv("folds", &plan.len());
    kv("pooled_predictions", &plan.total_test_size());
    kv("execution", &if args.sequential { "sequential" } else { "parallel" });
    kv("best_n", &best.n);
    kv("best_accuracy", &format!("{:.4}", best.accuracy));
    kv("model_file", &MODEL_FILE);
    if let Some((acc, epochs_run)) = perceptron_train_accuracy {
        kv("baseline", &"perceptron");
        kv("perceptron_epochs", &args.epochs);
        kv("perceptron_learning_rate", &args.lr);
        kv("perceptron_epochs_run", &epochs_run);
        kv("perceptron_training_accuracy", &format!("{acc:.4}"));
        kv(
            "perceptron_note",
            &"single-layer perceptron over the same full-width feature vectors as the WiSARD, not a 256-input head on VGG16 features",
        );
    }
    write_atomic(&dir.join(MANIFEST_FILE), manifest.as_bytes())?;

    writeln!(out, "{}", format_counts(&ds.class_counts()))?;
    writeln!(
        out,
        "{} folds, {} pooled predictions",
        plan.len(),
        plan.total_test_size()
    )?;
    for row in &sweep.rows {
        writeln!(out, "n = {:>2}  accuracy {:.4}", row.n, row.accuracy)?;
    }
    for row in &comparison {
        writeln!(out, "{:<20} {:.4}", row.system.as_str(), row.accuracy)?;
    }
    writeln!(out, "reports in {}", paths.sweep.parent().unwrap_or(dir).display())?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(args.dim > 0, "dimension must be positive");
    ensure!(
        args.noise.is_finite() && args.noise >= 0.0,
        "noise must be a non-negative number"
    );
    let samples = separable_dataset(&SeparableSpec {
        positives: args.positives,
        negatives: args.negatives,
        dim: args.dim,
        noise: args.noise,
        seed: args.seed,
    });
    ensure!(!samples.is_empty(), "no samples requested");
    write_feature_file(&args.out, &samples)?;
    writeln!(out, "wrote {} samples to {}", samples.len(), args.out.display())?;
    Ok(())
}
