//! Command-line front end for the n-gram toolkit: builds vocabularies and
//! count tables, trains and dumps smoothed models, scores held-out text,
//! runs k-fold cross-validation, audits marginal preservation and renders
//! pseudo-count tables.
//!
//! All data output goes to `--out` or standard output and is byte-stable
//! for identical inputs and seeds. Diagnostics go to standard error and are
//! controlled by `NGS_LOG` (`quiet`, `info` or `debug`; default `quiet`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};
use ngs_core::{
    count_ngrams, cross_validate, dump_model, evaluate, marginal_report, pad_corpus, parse_model,
    raw_joint_counts, render_table, smoothed_joint_counts, tokenize_and_normalize, train_model,
    trigram_marginal_report, CountTable, CrossvalOptions, Error, Method, RawCorpus, Result,
    TrainOptions, Vocabulary,
};

#[derive(Parser)]
#[command(
    name = "ngs",
    version,
    about = "n-gram language modeling: counting, smoothing, evaluation and marginal audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a vocabulary from a text corpus and write it one token per line.
    Vocab(VocabArgs),
    /// Count n-grams over a corpus and write them as TSV.
    Count(CountArgs),
    /// Train a smoothed model and write its dump.
    Train(TrainArgs),
    /// Score a held-out corpus with a dumped model.
    Score(ScoreArgs),
    /// K-fold cross-validated entropy and perplexity.
    Crossval(CrossvalArgs),
    /// Check how well a smoothing method preserves the word marginals.
    Audit(AuditArgs),
    /// Render a bigram count table as an aligned pseudo-count matrix.
    Render(RenderArgs),
}

#[derive(Args)]
struct VocabArgs {
    /// Input text corpus, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Model order the vocabulary should support.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Keep only tokens occurring at least this often.
    #[arg(long = "min-count", default_value_t = 1)]
    min_count: u64,
    /// Output path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    /// Input text corpus, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// N-gram order to count.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Frequency threshold when building the vocabulary on the fly.
    #[arg(long = "min-count", default_value_t = 1)]
    min_count: u64,
    /// Reuse a vocabulary file instead of building one.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Train from a text corpus.
    #[arg(long, conflicts_with = "counts")]
    corpus: Option<PathBuf>,
    /// Train from a pre-built count TSV.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Model order (defaults to 2 with --corpus; read from the file with --counts).
    #[arg(long)]
    order: Option<usize>,
    /// Smoothing method: addk, gt, abs, kns, mkns or mdknspomd.
    #[arg(long)]
    method: Method,
    /// Frequency threshold when building the vocabulary on the fly.
    #[arg(long = "min-count", default_value_t = 1)]
    min_count: u64,
    /// Additive pseudo-count for the addk method.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Manual discounts as comma-separated floats, overriding estimation.
    #[arg(long)]
    discounts: Option<String>,
    /// Output path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Model dump produced by the train subcommand.
    #[arg(long)]
    model: PathBuf,
    /// Held-out text corpus to score.
    #[arg(long)]
    test: PathBuf,
    /// Output path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrossvalArgs {
    /// Input text corpus, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Model order.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Smoothing method: addk, gt, abs, kns, mkns or mdknspomd.
    #[arg(long)]
    method: Method,
    /// Number of folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Seed for the fold assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shuffle sentences before splitting into folds.
    #[arg(long)]
    shuffle: bool,
    /// Frequency threshold for each fold's vocabulary.
    #[arg(long = "min-count", default_value_t = 1)]
    min_count: u64,
    /// Additive pseudo-count for the addk method.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Manual discounts as comma-separated floats, overriding estimation.
    #[arg(long)]
    discounts: Option<String>,
    /// Worker threads (default: all processors).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Audit a text corpus.
    #[arg(long, conflicts_with = "counts")]
    corpus: Option<PathBuf>,
    /// Audit a pre-built count TSV.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Model order (defaults to 2 with --corpus; read from the file with --counts).
    #[arg(long)]
    order: Option<usize>,
    /// Smoothing method: addk, gt, abs, kns, mkns or mdknspomd.
    #[arg(long)]
    method: Method,
    /// Frequency threshold when building the vocabulary on the fly.
    #[arg(long = "min-count", default_value_t = 1)]
    min_count: u64,
    /// Additive pseudo-count for the addk method.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Manual discounts as comma-separated floats, overriding estimation.
    #[arg(long)]
    discounts: Option<String>,
    /// Maximum relative marginal deviation that still counts as preserved.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Decimal places in the rendered matrix.
    #[arg(long, default_value_t = 2)]
    decimals: usize,
    /// Output path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Bigram count TSV to render.
    #[arg(long)]
    counts: PathBuf,
    /// Decimal places in the rendered matrix.
    #[arg(long, default_value_t = 0)]
    decimals: usize,
    /// Output path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum LogLevel {
    Quiet,
    Info,
    Debug,
}

static LOG_LEVEL: OnceLock<LogLevel> = OnceLock::new();

fn init_logging() -> Result<()> {
    let level = match std::env::var("NGS_LOG") {
        Err(_) => LogLevel::Quiet,
        Ok(value) => match value.as_str() {
            "" | "quiet" => LogLevel::Quiet,
            "info" => LogLevel::Info,
            "debug" => LogLevel::Debug,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "NGS_LOG must be quiet, info or debug, got {other:?}"
                )))
            }
        },
    };
    let _ = LOG_LEVEL.set(level);
    Ok(())
}

fn log_enabled(level: LogLevel) -> bool {
    LOG_LEVEL.get().copied().unwrap_or(LogLevel::Quiet) >= level
}

fn info(message: &str) {
    if log_enabled(LogLevel::Info) {
        eprintln!("[info] {message}");
    }
}

fn debug(message: &str) {
    if log_enabled(LogLevel::Debug) {
        eprintln!("[debug] {message}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let status = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(status);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_internal() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    init_logging()?;
    match cli.command {
        Command::Vocab(args) => run_vocab(args),
        Command::Count(args) => run_count(args),
        Command::Train(args) => run_train(args),
        Command::Score(args) => run_score(args),
        Command::Crossval(args) => run_crossval(args),
        Command::Audit(args) => run_audit(args),
        Command::Render(args) => run_render(args),
    }
}

fn run_vocab(args: VocabArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let vocab = Vocabulary::build(&corpus, args.order, args.min_count)?;
    info(&format!("vocabulary has {} tokens ({} predictable)", vocab.len(), vocab.predictable_count()));
    write_out(args.out.as_deref(), &vocab.to_file_string())
}

fn run_count(args: CountArgs) -> Result<()> {
    let (table, vocab) = build_table(&args.corpus, args.order, args.min_count, args.vocab.as_deref())?;
    write_out(args.out.as_deref(), &table.dump_tsv(&vocab))
}

fn run_train(args: TrainArgs) -> Result<()> {
    let (table, vocab) = table_from_source(args.corpus.as_deref(), args.counts.as_deref(), args.order, args.min_count)?;
    let options = TrainOptions { delta: args.delta, discounts: parse_discounts(args.discounts.as_deref())? };
    let model = train_model(&table, &vocab, args.method, &options)?;
    info(&format!(
        "trained {} at order {} (discounts: {:?}, floored: {})",
        model.method(),
        model.order(),
        model.discounts(),
        model.floored_count()
    ));
    write_out(args.out.as_deref(), &dump_model(&model, &vocab)?)
}

fn run_score(args: ScoreArgs) -> Result<()> {
    let text = read_text(&args.model)?;
    let (model, vocab) = parse_model(&text)?;
    info(&format!("loaded {} model of order {}", model.method(), model.order()));
    let raw = load_corpus(&args.test)?;
    let ids = vocab.apply(&raw);
    let padded = pad_corpus(&ids, model.order(), &vocab)?;
    let report = evaluate(&model, &padded, &vocab)?;
    write_out(args.out.as_deref(), &report.to_tsv())
}

fn run_crossval(args: CrossvalArgs) -> Result<()> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("cannot size the worker pool: {e}")))?;
    }
    let corpus = load_corpus(&args.corpus)?;
    let options = CrossvalOptions {
        seed: args.seed,
        shuffle: args.shuffle,
        min_count: args.min_count,
        train: TrainOptions { delta: args.delta, discounts: parse_discounts(args.discounts.as_deref())? },
    };
    let report = cross_validate(&corpus, args.folds, args.order, args.method, &options)?;
    info(&format!(
        "{}-fold {} at order {}: entropy {} bits/word, perplexity {}",
        args.folds, args.method, args.order, report.entropy, report.perplexity
    ));
    write_out(args.out.as_deref(), &report.to_tsv())
}

fn run_audit(args: AuditArgs) -> Result<()> {
    let (table, vocab) = table_from_source(args.corpus.as_deref(), args.counts.as_deref(), args.order, args.min_count)?;
    let options = TrainOptions { delta: args.delta, discounts: parse_discounts(args.discounts.as_deref())? };
    let model = train_model(&table, &vocab, args.method, &options)?;
    let output = match table.order() {
        2 => {
            let matrix = smoothed_joint_counts(&model, &table, &vocab)?;
            let report = marginal_report(&matrix, &table, &vocab, args.tolerance)?;
            format!("{}\n{}", render_table(&matrix, args.decimals), report.to_tsv())
        }
        3 => trigram_marginal_report(&model, &table, &vocab, args.tolerance)?.to_tsv(),
        order => {
            return Err(Error::InvalidArgument(format!(
                "the audit works on bigram or trigram counts, got order {order}"
            )))
        }
    };
    write_out(args.out.as_deref(), &output)
}

fn run_render(args: RenderArgs) -> Result<()> {
    let text = read_text(&args.counts)?;
    let (table, vocab) = CountTable::parse_tsv(&text)?;
    if table.order() != 2 {
        return Err(Error::InvalidArgument(format!(
            "rendering works on bigram count tables, got order {}",
            table.order()
        )));
    }
    let matrix = raw_joint_counts(&table, &vocab)?;
    info(&format!("rendered a {0} x {0} matrix", matrix.size()));
    write_out(args.out.as_deref(), &render_table(&matrix, args.decimals))
}

/// Reads a corpus or counts file depending on which flag was given, and
/// returns the count table plus the vocabulary it is expressed in.
fn table_from_source(
    corpus: Option<&Path>,
    counts: Option<&Path>,
    order: Option<usize>,
    min_count: u64,
) -> Result<(CountTable, Vocabulary)> {
    match (corpus, counts) {
        (Some(corpus), None) => build_table(corpus, order.unwrap_or(2), min_count, None),
        (None, Some(counts)) => {
            let text = read_text(counts)?;
            let (table, vocab) = CountTable::parse_tsv(&text)?;
            debug(&format!("parsed {} distinct {}-grams", table.entry_count(), table.order()));
            if let Some(requested) = order {
                if requested != table.order() {
                    return Err(Error::InvalidArgument(format!(
                        "--order {requested} does not match the count file's order {}",
                        table.order()
                    )));
                }
            }
            Ok((table, vocab))
        }
        (None, None) => Err(Error::InvalidArgument("provide --corpus or --counts".into())),
        (Some(_), Some(_)) => {
            Err(Error::InvalidArgument("--corpus and --counts are mutually exclusive".into()))
        }
    }
}

fn build_table(
    corpus_path: &Path,
    order: usize,
    min_count: u64,
    vocab_path: Option<&Path>,
) -> Result<(CountTable, Vocabulary)> {
    let raw = load_corpus(corpus_path)?;
    let vocab = match vocab_path {
        Some(path) => Vocabulary::parse(&read_text(path)?)?,
        None => Vocabulary::build(&raw, order, min_count)?,
    };
    info(&format!("vocabulary has {} tokens ({} predictable)", vocab.len(), vocab.predictable_count()));
    let ids = vocab.apply(&raw);
    let padded = pad_corpus(&ids, order, &vocab)?;
    let table = count_ngrams(&padded, order, &vocab)?;
    info(&format!("counted {} distinct {order}-grams over {} windows", table.entry_count(), table.total()));
    Ok((table, vocab))
}

fn load_corpus(path: &Path) -> Result<RawCorpus> {
    let bytes = read_bytes(path)?;
    let corpus = tokenize_and_normalize(&bytes)?;
    info(&format!(
        "read {} sentences / {} tokens from {}",
        corpus.sentences.len(),
        corpus.token_total,
        path.display()
    ));
    Ok(corpus)
}

fn parse_discounts(raw: Option<&str>) -> Result<Option<Vec<f64>>> {
    let Some(raw) = raw else { return Ok(None) };
    let mut values = Vec::new();
    for part in raw.split(',') {
        let value: f64 = part.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("--discounts expects comma-separated numbers, got {part:?}"))
        })?;
        values.push(value);
    }
    Ok(Some(values))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| with_path(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(path, e))
}

fn write_out(out: Option<&Path>, data: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, data).map_err(|e| with_path(path, e))?;
            info(&format!("wrote {} bytes to {}", data.len(), path.display()));
        }
        None => print!("{data}"),
    }
    Ok(())
}

fn with_path(path: &Path, err: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(err.kind(), format!("{}: {err}", path.display())))
}
