//! `caat`: train, cross-validate, evaluate, and explain attention-based
//! message classifiers from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use caat_core::io::{load_dataset, load_model, save_model, Dataset};
use caat_core::model::AttentionNorm;
use caat_core::train::{
    cross_validate, evaluate, fit, CvReport, EmbeddingSource, EpochStats, MetricsReport,
    ModelShape, TrainConfig,
};
use caat_core::{predict, HeatmapDoc, Rng};

#[derive(Parser)]
#[command(name = "caat", version, about = "Attention-based abusive message classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a text,label CSV and write the model to disk
    Train(TrainArgs),
    /// Stratified k-fold cross-validation; prints a summary, writes a JSON report
    Cv(CvArgs),
    /// Score a saved model against a labeled CSV
    Eval(EvalArgs),
    /// Classify one message
    Predict(PredictArgs),
    /// Render per-word attention weights for one message
    Explain(ExplainArgs),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum NormArg {
    #[default]
    Softmax,
    Linear,
}

impl From<NormArg> for AttentionNorm {
    fn from(v: NormArg) -> Self {
        match v {
            NormArg::Softmax => AttentionNorm::Softmax,
            NormArg::Linear => AttentionNorm::Linear,
        }
    }
}

/// Flags shared by every training-style run. Defaults mirror the reference
/// protocol: lr 0.001, 10 epochs, dropout 0.2, two 64-unit layers, batch 32.
#[derive(Args)]
struct HyperArgs {
    /// Pretrained word vectors in whitespace text format; random vectors when omitted
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Width of the random vectors used when --embeddings is omitted
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    /// Stacked bidirectional layers
    #[arg(long, default_value_t = 2)]
    layers: usize,
    /// Recurrent units per direction
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long = "batch", default_value_t = 32)]
    batch: usize,
    /// Messages are truncated or padded to this many tokens
    #[arg(long, default_value_t = 50)]
    max_len: usize,
    /// Tokens seen fewer times than this stay out of the vocabulary
    #[arg(long, default_value_t = 2)]
    min_freq: usize,
    /// Every random choice in the run derives from this seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Attention score normalization
    #[arg(long, value_enum, default_value_t)]
    attention_norm: NormArg,
}

impl HyperArgs {
    fn shape(&self) -> ModelShape {
        ModelShape {
            hidden: self.hidden,
            layers: self.layers,
            max_len: self.max_len,
            min_freq: self.min_freq,
            finetune_embeddings: true,
            attention_norm: self.attention_norm.into(),
        }
    }

    fn train_config(&self, folds: usize) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            dropout: self.dropout,
            batch_size: self.batch,
            seed: self.seed,
            folds,
            shuffle: true,
        }
    }

    fn source(&self) -> EmbeddingSource {
        match &self.embeddings {
            Some(path) => EmbeddingSource::File(path.clone()),
            None => EmbeddingSource::Random { dim: self.embed_dim },
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Where the trained model is written
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Folds trained in parallel
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Where the JSON report is written
    #[arg(long, default_value = "cv-report.json")]
    report: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Also write the metrics as JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    text: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Html,
    Ansi,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    text: String,
    #[arg(long, value_enum)]
    format: Format,
    /// Write to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Die quietly on a closed pipe (`caat eval | head`) instead of panicking.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() {
    reset_sigpipe();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Explain(args) => cmd_explain(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_and_describe(path: &Path) -> anyhow::Result<Dataset> {
    let dataset =
        load_dataset(path).with_context(|| format!("reading dataset {}", path.display()))?;
    println!("dataset: {} examples, {} classes", dataset.examples.len(), dataset.labels.len());
    for (label, count) in dataset.labels.iter().zip(&dataset.histogram) {
        println!("  {label}: {count}");
    }
    for warning in &dataset.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(dataset)
}

fn print_history(history: &[EpochStats]) {
    for stats in history {
        println!("epoch {:>3}  mean loss {:.6}", stats.epoch, stats.mean_loss);
    }
}

fn print_metrics(report: &MetricsReport) {
    println!("{:<16} {:>9} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1", "support");
    for (label, m) in report.labels.iter().zip(&report.per_class) {
        println!(
            "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>9}",
            label, m.precision, m.recall, m.f1, m.support
        );
    }
    println!("weighted F1: {:.4}   accuracy: {:.4}", report.weighted_f1, report.accuracy());
    print_confusion(&report.labels, &report.confusion);
}

fn print_confusion(labels: &[String], confusion: &[Vec<usize>]) {
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(4).max(6);
    println!("confusion (rows = true):");
    print!("{:<w$}", "", w = width + 2);
    for label in labels {
        print!(" {label:>w$}", w = width);
    }
    println!();
    for (label, row) in labels.iter().zip(confusion) {
        print!("{:<w$}", label, w = width + 2);
        for count in row {
            print!(" {count:>w$}", w = width);
        }
        println!();
    }
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let dataset = load_and_describe(&args.data)?;
    let config = args.hyper.train_config(TrainConfig::default().folds);
    let mut rng = Rng::new(config.seed);
    let (bundle, history, coverage) = fit(
        &dataset.examples,
        &dataset.labels,
        &args.hyper.source(),
        &args.hyper.shape(),
        &config,
        &mut rng,
    )?;
    println!(
        "vocabulary: {} tokens ({} with pretrained vectors, {} randomly initialized)",
        bundle.vocab.len(),
        coverage.found,
        coverage.missing
    );
    print_history(&history);
    save_model(&bundle, &args.out)
        .with_context(|| format!("writing model {}", args.out.display()))?;
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_cv(args: CvArgs) -> anyhow::Result<()> {
    let dataset = load_and_describe(&args.data)?;
    let config = args.hyper.train_config(args.folds);
    let report = cross_validate(
        &dataset.examples,
        &args.hyper.source(),
        &args.hyper.shape(),
        &config,
        args.jobs,
    )?;
    print_cv(&report);
    let json = serde_json::to_string_pretty(&report).context("serializing report")?;
    fs::write(&args.report, json + "\n")
        .with_context(|| format!("writing report {}", args.report.display()))?;
    println!("report written to {}", args.report.display());
    Ok(())
}

fn print_cv(report: &CvReport) {
    for fold in &report.per_fold {
        println!(
            "fold {:>2}: weighted F1 {:.4}  (train {}, test {})",
            fold.fold, fold.weighted_f1, fold.train_examples, fold.test_examples
        );
    }
    println!("mean weighted F1 over folds: {:.4}", report.mean_weighted_f1);
    println!("pooled weighted F1:          {:.4}", report.pooled_weighted_f1);
    if let Some(first) = report.per_fold.first() {
        print_confusion(&first.metrics.labels, &report.confusion);
    }
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let bundle =
        load_model(&args.model).with_context(|| format!("reading model {}", args.model.display()))?;
    let dataset = load_and_describe(&args.data)?;
    let report = evaluate(&bundle, &dataset.examples)?;
    print_metrics(&report);
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).context("serializing report")?;
        fs::write(path, json + "\n")
            .with_context(|| format!("writing report {}", path.display()))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> anyhow::Result<()> {
    let bundle =
        load_model(&args.model).with_context(|| format!("reading model {}", args.model.display()))?;
    let prediction = predict(&args.text, &bundle)?;
    println!("label: {}", prediction.label);
    println!("probabilities:");
    for (name, p) in bundle.label_names.iter().zip(&prediction.probs) {
        println!("  {name}: {p:.6}");
    }
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> anyhow::Result<()> {
    let bundle =
        load_model(&args.model).with_context(|| format!("reading model {}", args.model.display()))?;
    let prediction = predict(&args.text, &bundle)?;
    let doc = HeatmapDoc::from_prediction(&prediction, bundle.config.attention_norm)?;
    let rendered = match args.format {
        Format::Json => caat_core::to_json(&doc)?,
        Format::Html => caat_core::to_html(&doc)?,
        Format::Ansi => {
            let color = std::env::var_os("NO_COLOR").is_none();
            let line = caat_core::to_ansi(&doc, color)?;
            format!("{line}\nlabel: {}", doc.label)
        }
    };
    match &args.out {
        Some(path) => {
            fs::write(path, rendered.as_bytes())
                .with_context(|| format!("writing {}", path.display()))?;
            println!("written to {}", path.display());
        }
        None => println!("{rendered}"),
    }
    Ok(())
}
