//! `cswitch` — code-switching data augmentation for task-oriented
//! semantic parsing corpora.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use cswitch_core::aligner::{self, AlignTask, Provenance};
use cswitch_core::config::{ConfigError, PipelineConfig};
use cswitch_core::corpus::{self, CorpusError, IngestOptions, Split, Utterance};
use cswitch_core::eval::{self, EvalError};
use cswitch_core::filter::{self, RuleConfig};
use cswitch_core::genclient::{generate_batch, GenClientError, GenerationRecord, GenerationRequest};
use cswitch_core::marker::{self, ExportError, MarkError};
use cswitch_core::pipeline::{self, MarkedRow, PipelineError};
use cswitch_core::report;
use cswitch_core::sample::SampleError;
use cswitch_core::splits;
use cswitch_core::stats::{self, LexiconPair, StatsError};

#[derive(Parser)]
#[command(
    name = "cswitch",
    version,
    about = "Code-switching data augmentation for hierarchical semantic parsing corpora"
)]
struct Cli {
    /// TOML config file with paths, backend, and flag settings.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the RNG seed used for sampling.
    #[arg(long, global = true, value_name = "N")]
    rng_seed: Option<u64>,

    /// Corpus files start with a header row.
    #[arg(long, global = true, conflicts_with = "no_header")]
    header: bool,

    /// Corpus files have no header row (the default).
    #[arg(long, global = true)]
    no_header: bool,

    /// Drop exact duplicate rows on ingest.
    #[arg(long, global = true)]
    dedup: bool,

    /// Enable or disable the span containment filter rule.
    #[arg(long, global = true, value_name = "BOOL")]
    strict_containment: Option<bool>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus TSV, routing bad rows to a rejects report.
    Ingest(IngestArgs),
    /// Convert a labeled corpus into span-marked generation inputs.
    Mark(MarkArgs),
    /// Export a stratified seed set of (marked English, marked CS) pairs.
    ExportSeed(ExportSeedArgs),
    /// Send marked inputs through the generation backend.
    Generate(GenerateArgs),
    /// Filter raw generation records by span structure.
    Filter(FilterArgs),
    /// Reconstruct parses for filter-accepted records.
    Align(AlignArgs),
    /// Compute corpus statistics with a lexicon pair.
    Stats(StatsArgs),
    /// Exact-match evaluation of predictions against gold parses.
    Eval(EvalArgs),
    /// Run the full pipeline: ingest, mark, generate, filter, align, stats.
    Augment(AugmentArgs),
    /// Write nested stratified seed-set files.
    Splits(SplitsArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, value_name = "TSV")]
    input: PathBuf,
    /// Split tag applied to every row: train, validation, or test.
    #[arg(long, default_value = "train")]
    split: String,
    /// Where to write rejected rows as JSONL.
    #[arg(long, value_name = "JSONL")]
    rejects: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct MarkArgs {
    #[arg(long, value_name = "TSV")]
    input: PathBuf,
    /// Marked output: id, domain, marked_text, semantic_parse.
    #[arg(long, value_name = "TSV")]
    output: PathBuf,
    #[arg(long, value_name = "JSONL")]
    rejects: Option<PathBuf>,
}

#[derive(Args)]
struct ExportSeedArgs {
    /// Labeled English corpus TSV.
    #[arg(long, value_name = "TSV")]
    corpus: PathBuf,
    /// Marked code-switched annotations, one per corpus row.
    #[arg(long, value_name = "FILE")]
    cs: PathBuf,
    #[arg(long)]
    size: usize,
    /// Seed pairs TSV: marked_english, marked_cs, domain.
    #[arg(long, value_name = "TSV")]
    output: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_name = "TSV")]
    marked: PathBuf,
    /// Raw generation records JSONL; also the resume checkpoint.
    #[arg(long, value_name = "JSONL")]
    output: PathBuf,
    /// Backend kind override: http, replay, or mock.
    #[arg(long)]
    backend_kind: Option<String>,
    #[arg(long)]
    url: Option<String>,
    #[arg(long, value_name = "JSONL")]
    replay_file: Option<PathBuf>,
    #[arg(long)]
    mock_mode: Option<String>,
    #[arg(long, value_name = "TSV")]
    mock_table: Option<PathBuf>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    timeout_s: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
}

#[derive(Args)]
struct FilterArgs {
    /// Raw generation records JSONL.
    #[arg(long, value_name = "JSONL")]
    records: PathBuf,
    /// Marked TSV the records were generated from.
    #[arg(long, value_name = "TSV")]
    marked: PathBuf,
    /// Directory for accepted/rejected/throughput artifacts.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AlignArgs {
    /// Filter-accepted records JSONL.
    #[arg(long, value_name = "JSONL")]
    accepted: PathBuf,
    #[arg(long, value_name = "TSV")]
    marked: PathBuf,
    /// Augmented corpus TSV: domain, cs_text, semantic_parse.
    #[arg(long, value_name = "TSV")]
    output: PathBuf,
    #[arg(long, value_name = "JSONL")]
    rejects: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Corpus TSV (uses the utterance column) or plain-text lines.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Input format: tsv or lines.
    #[arg(long, default_value = "tsv")]
    format: String,
    #[arg(long, value_name = "FILE")]
    lexicon_a: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    lexicon_b: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "TSV")]
    pred: PathBuf,
    #[arg(long, value_name = "TSV")]
    gold: PathBuf,
    #[arg(long, value_name = "JSON")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Override paths.corpus_in from the config.
    #[arg(long, value_name = "TSV")]
    corpus: Option<PathBuf>,
    /// Override paths.out_dir from the config.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SplitsArgs {
    #[arg(long, value_name = "TSV")]
    input: PathBuf,
    /// Comma-separated seed sizes; defaults to the config's seed_sizes.
    #[arg(long, value_name = "N,N,...")]
    sizes: Option<String>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

enum CliError {
    Usage(String),
    Data(String),
    Backend(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MarkError> for CliError {
    fn from(e: MarkError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        match &e {
            ExportError::InvalidPairs(report) => {
                let mut msg = e.to_string();
                for violation in report.iter().take(5) {
                    msg.push_str(&format!(
                        "\n  pair {} ({}): {:?}",
                        violation.index, violation.domain, violation.violations
                    ));
                }
                CliError::Data(msg)
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GenClientError> for CliError {
    fn from(e: GenClientError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Generation(inner) => CliError::Backend(inner.to_string()),
            PipelineError::Config(inner) => CliError::Usage(inner.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                std::process::exit(0);
            }
            _ => {
                let _ = e.print();
                std::process::exit(1);
            }
        },
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Backend(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
    }
}

/// Config file merged with the global CLI overrides.
fn effective_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.rng_seed {
        config.rng_seed = seed;
    }
    if cli.header {
        config.flags.header = true;
    }
    if cli.no_header {
        config.flags.header = false;
    }
    if cli.dedup {
        config.flags.dedup = true;
    }
    if let Some(containment) = cli.strict_containment {
        config.flags.containment_rule = containment;
    }
    Ok(config)
}

fn ingest_options(config: &PipelineConfig, split: Split) -> IngestOptions {
    IngestOptions {
        header: config.flags.header,
        dedup: config.flags.dedup,
        split,
    }
}

fn rule_config(config: &PipelineConfig) -> RuleConfig {
    RuleConfig {
        containment: config.flags.containment_rule,
    }
}

fn parse_split(s: &str) -> Result<Split, CliError> {
    s.parse().map_err(CliError::Usage)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = effective_config(&cli)?;
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(&config, args),
        Command::Mark(args) => cmd_mark(&config, args),
        Command::ExportSeed(args) => cmd_export_seed(&config, args),
        Command::Generate(args) => cmd_generate(&config, args),
        Command::Filter(args) => cmd_filter(&config, args),
        Command::Align(args) => cmd_align(&config, args),
        Command::Stats(args) => cmd_stats(&config, args),
        Command::Eval(args) => cmd_eval(&config, args),
        Command::Augment(args) => cmd_augment(&config, args),
        Command::Splits(args) => cmd_splits(&config, args),
    }
}

fn cmd_ingest(config: &PipelineConfig, args: &IngestArgs) -> Result<(), CliError> {
    let split = parse_split(&args.split)?;
    let result = corpus::ingest(&args.input, &ingest_options(config, split))?;
    if let Some(path) = &args.rejects {
        corpus::write_jsonl(path, &result.rejects)?;
    }
    let summary = serde_json::json!({
        "accepted": result.utterances.len(),
        "rejected": result.rejects.len(),
        "duplicates_dropped": result.duplicates_dropped,
    });
    if let Some(path) = &args.json_out {
        write_json(path, &summary)?;
    }
    print!(
        "{}",
        report::render_kv_table(&[
            ("accepted".into(), result.utterances.len().to_string()),
            ("rejected".into(), result.rejects.len().to_string()),
            (
                "duplicates dropped".into(),
                result.duplicates_dropped.to_string()
            ),
        ])
    );
    for reject in result.rejects.iter().take(10) {
        println!("reject line {}: {:?}", reject.line, reject.reason);
    }
    Ok(())
}

fn cmd_mark(config: &PipelineConfig, args: &MarkArgs) -> Result<(), CliError> {
    let result = corpus::ingest(&args.input, &ingest_options(config, Split::Train))?;
    if let Some(path) = &args.rejects {
        corpus::write_jsonl(path, &result.rejects)?;
    }
    let mut rows = Vec::with_capacity(result.utterances.len());
    for (i, utterance) in result.utterances.iter().enumerate() {
        let marked = marker::mark_utterance(utterance)?;
        rows.push(MarkedRow {
            id: format!("u{:06}", i + 1),
            domain: utterance.domain.clone(),
            marked_text: marked.text(),
            parse: utterance
                .parse
                .as_ref()
                .expect("ingested rows are labeled")
                .serialize(),
        });
    }
    pipeline::write_marked_tsv(&args.output, rows.iter().cloned())?;
    println!(
        "marked {} utterance(s) ({} rejected) -> {}",
        rows.len(),
        result.rejects.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_export_seed(config: &PipelineConfig, args: &ExportSeedArgs) -> Result<(), CliError> {
    let result = corpus::ingest(&args.corpus, &ingest_options(config, Split::Train))?;
    if !result.rejects.is_empty() {
        let lines: Vec<String> = result
            .rejects
            .iter()
            .map(|r| r.line.to_string())
            .collect();
        return Err(CliError::Data(format!(
            "seed corpus has {} unusable row(s) at line(s) {}; fix them before export",
            result.rejects.len(),
            lines.join(", ")
        )));
    }
    let cs_lines = read_lines(&args.cs)?;
    if cs_lines.len() != result.utterances.len() {
        return Err(CliError::Data(format!(
            "corpus has {} rows but `{}` has {} lines; they must pair 1:1",
            result.utterances.len(),
            args.cs.display(),
            cs_lines.len()
        )));
    }
    let pairs: Vec<(Utterance, String)> = result
        .utterances
        .into_iter()
        .zip(cs_lines)
        .collect();
    let seed_pairs =
        marker::export_seed_pairs(&pairs, args.size, config.rng_seed, &rule_config(config))?;
    let mut out = BufWriter::new(File::create(&args.output)?);
    for pair in &seed_pairs {
        writeln!(out, "{}", pair.tsv_row())?;
    }
    out.flush()?;
    println!(
        "wrote {} seed pair(s) -> {}",
        seed_pairs.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_generate(config: &PipelineConfig, args: &GenerateArgs) -> Result<(), CliError> {
    let mut config = config.clone();
    if let Some(kind) = &args.backend_kind {
        config.backend.kind = kind.clone();
    }
    if let Some(url) = &args.url {
        config.backend.url = Some(url.clone());
    }
    if let Some(path) = &args.replay_file {
        config.backend.replay_file = Some(path.clone());
    }
    if let Some(mode) = &args.mock_mode {
        config.backend.mock_mode = mode.clone();
    }
    if let Some(path) = &args.mock_table {
        config.backend.mock_table = Some(path.clone());
    }
    if let Some(n) = args.batch_size {
        config.backend.batch_size = n;
    }
    if let Some(s) = args.timeout_s {
        config.backend.timeout_s = s;
    }
    if let Some(r) = args.retries {
        config.backend.retries = r;
    }
    let backend = config.build_backend()?;

    let rows = pipeline::read_marked_tsv(&args.marked)?;
    let done = pipeline::load_checkpoint(&args.output)?;
    let pending: Vec<GenerationRequest> = rows
        .iter()
        .filter(|row| !done.contains_key(&row.id))
        .map(|row| GenerationRequest {
            id: row.id.clone(),
            domain: row.domain.clone(),
            marked_text: row.marked_text.clone(),
        })
        .collect();
    let resumed = rows.len() - pending.len();

    let mut out = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.output)?;
    let chunk_size = config.backend.batch_size.max(1) * 8;
    let mut written = 0usize;
    for chunk in pending.chunks(chunk_size) {
        let records = generate_batch(chunk, backend.as_ref())?;
        for record in &records {
            writeln!(
                out,
                "{}",
                serde_json::to_string(record).map_err(std::io::Error::other)?
            )?;
        }
        out.flush()?;
        written += records.len();
    }
    println!(
        "generated {written} record(s) ({resumed} already in checkpoint) -> {}",
        args.output.display()
    );
    Ok(())
}

/// Loads records JSONL in file order; the first record per id wins.
fn read_records(path: &Path) -> Result<Vec<GenerationRecord>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot read `{}`: {e}", path.display())))?;
    let mut seen = std::collections::BTreeSet::new();
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GenerationRecord = serde_json::from_str(&line).map_err(|e| {
            CliError::Data(format!("`{}` line {}: {e}", path.display(), idx + 1))
        })?;
        if seen.insert(record.request.id.clone()) {
            records.push(record);
        }
    }
    Ok(records)
}

/// id -> (utterance, marked) from a marked TSV.
fn marked_index(
    path: &Path,
) -> Result<BTreeMap<String, (Utterance, marker::MarkedUtterance)>, CliError> {
    let rows = pipeline::read_marked_tsv(path)?;
    let mut index = BTreeMap::new();
    for row in &rows {
        let entry = pipeline::item_from_marked_row(row)?;
        index.insert(row.id.clone(), entry);
    }
    Ok(index)
}

fn cmd_filter(config: &PipelineConfig, args: &FilterArgs) -> Result<(), CliError> {
    let records = read_records(&args.records)?;
    let index = marked_index(&args.marked)?;
    std::fs::create_dir_all(&args.out_dir)?;

    let mut failures: Vec<&GenerationRecord> = Vec::new();
    let mut pairs: Vec<(&marker::MarkedUtterance, &str)> = Vec::new();
    let mut pair_records: Vec<&GenerationRecord> = Vec::new();
    for record in &records {
        match record.candidate() {
            Some(candidate) => {
                let (_, marked) = index.get(&record.request.id).ok_or_else(|| {
                    CliError::Data(format!(
                        "record `{}` has no row in `{}`",
                        record.request.id,
                        args.marked.display()
                    ))
                })?;
                pairs.push((marked, candidate));
                pair_records.push(record);
            }
            None => failures.push(record),
        }
    }

    let outcome = filter::filter_corpus(&pairs, &rule_config(config));
    corpus::write_jsonl(args.out_dir.join("gen_failures.jsonl"), failures.iter())?;
    corpus::write_jsonl(
        args.out_dir.join("accepted.jsonl"),
        outcome.accepted.iter().map(|&i| pair_records[i]),
    )?;
    corpus::write_jsonl(
        args.out_dir.join("rejected.jsonl"),
        outcome.rejected.iter().map(|reject| {
            let record = pair_records[reject.index];
            serde_json::json!({
                "id": record.request.id,
                "candidate": record.candidate().unwrap_or_default(),
                "violations": reject.verdict.violations,
            })
        }),
    )?;
    write_json(&args.out_dir.join("throughput.json"), &outcome.report)?;
    std::fs::write(
        args.out_dir.join("throughput.txt"),
        report::render_throughput(&outcome.report),
    )?;
    print!("{}", report::render_throughput(&outcome.report));
    Ok(())
}

fn cmd_align(config: &PipelineConfig, args: &AlignArgs) -> Result<(), CliError> {
    let records = read_records(&args.accepted)?;
    let index = marked_index(&args.marked)?;
    let rules = rule_config(config);

    let mut tasks = Vec::with_capacity(records.len());
    for record in &records {
        let candidate = record.candidate().ok_or_else(|| {
            CliError::Data(format!(
                "record `{}` carries no candidate; run `filter` first",
                record.request.id
            ))
        })?;
        let (utterance, marked) = index.get(&record.request.id).ok_or_else(|| {
            CliError::Data(format!(
                "record `{}` has no row in `{}`",
                record.request.id,
                args.marked.display()
            ))
        })?;
        let verdict = filter::validate_pair(marked, candidate, &rules);
        if !verdict.pass {
            return Err(CliError::Data(format!(
                "record `{}` does not pass the filter ({:?}); run `filter` first",
                record.request.id, verdict.violations
            )));
        }
        tasks.push(AlignTask {
            id: record.request.id.clone(),
            english: utterance.clone(),
            marked: marked.clone(),
            candidate: candidate.to_string(),
            provenance: Provenance::Generated,
        });
    }

    let outcome = aligner::align_corpus(&tasks);
    corpus::write_corpus(
        &args.output,
        outcome.aligned.iter().map(|record| {
            (
                record.english.domain.clone(),
                record.cs_text.clone(),
                record.cs_parse.serialize(),
            )
        }),
    )?;
    if let Some(path) = &args.rejects {
        corpus::write_jsonl(path, &outcome.rejects)?;
    }
    println!(
        "aligned {} record(s), {} reject(s) -> {}",
        outcome.aligned.len(),
        outcome.rejects.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_stats(config: &PipelineConfig, args: &StatsArgs) -> Result<(), CliError> {
    let path_a = args
        .lexicon_a
        .clone()
        .or_else(|| config.paths.lexicon_a.clone())
        .ok_or_else(|| CliError::Usage("--lexicon-a (or paths.lexicon_a) is required".into()))?;
    let path_b = args
        .lexicon_b
        .clone()
        .or_else(|| config.paths.lexicon_b.clone())
        .ok_or_else(|| CliError::Usage("--lexicon-b (or paths.lexicon_b) is required".into()))?;
    let lexicons = LexiconPair::load(
        lexicon_name(&path_a),
        &path_a,
        lexicon_name(&path_b),
        &path_b,
    )?;

    let texts: Vec<String> = match args.format.as_str() {
        "tsv" => {
            let mut texts = Vec::new();
            let file = File::open(&args.input).map_err(|e| {
                CliError::Data(format!("cannot read `{}`: {e}", args.input.display()))
            })?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| CliError::Data(e.to_string()))?;
                if config.flags.header && idx == 0 {
                    continue;
                }
                if line.trim().is_empty() {
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() < 2 {
                    return Err(CliError::Data(format!(
                        "line {}: expected at least 2 tab-separated columns",
                        idx + 1
                    )));
                }
                texts.push(cols[1].to_string());
            }
            texts
        }
        "lines" => read_lines(&args.input)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown --format `{other}` (expected tsv or lines)"
            )))
        }
    };

    let stats = stats::corpus_stats(texts.iter().map(|s| s.as_str()), &lexicons)?;
    if let Some(path) = &args.json_out {
        write_json(path, &stats)?;
    }
    print!("{}", stats.render_table());
    Ok(())
}

fn cmd_eval(config: &PipelineConfig, args: &EvalArgs) -> Result<(), CliError> {
    let pred = eval::read_eval_rows(&args.pred, config.flags.header)?;
    let gold = eval::read_eval_rows(&args.gold, config.flags.header)?;
    let report = eval::evaluate(&pred, &gold)?;
    if let Some(path) = &args.json_out {
        write_json(path, &report)?;
    }
    print!("{}", report.render_table());
    Ok(())
}

fn cmd_augment(config: &PipelineConfig, args: &AugmentArgs) -> Result<(), CliError> {
    let mut config = config.clone();
    if let Some(corpus) = &args.corpus {
        config.paths.corpus_in = Some(corpus.clone());
    }
    if let Some(out_dir) = &args.out_dir {
        config.paths.out_dir = Some(out_dir.clone());
    }
    let summary = pipeline::run_augment_from_config(&config)?;
    print!(
        "{}",
        report::render_kv_table(&[
            ("inputs".into(), summary.inputs.to_string()),
            ("ingest rejects".into(), summary.ingest_rejects.to_string()),
            (
                "generation failures".into(),
                summary.generation_failures.to_string()
            ),
            ("filter accepted".into(), summary.filter_accepted.to_string()),
            ("filter rejected".into(), summary.filter_rejected.to_string()),
            ("aligned".into(), summary.aligned.to_string()),
            ("align rejects".into(), summary.align_rejects.to_string()),
            (
                "throughput".into(),
                report::format_percent(summary.throughput)
            ),
        ])
    );
    Ok(())
}

fn cmd_splits(config: &PipelineConfig, args: &SplitsArgs) -> Result<(), CliError> {
    let result = corpus::ingest(&args.input, &ingest_options(config, Split::Train))?;
    let sizes: Vec<usize> = match &args.sizes {
        Some(text) => text
            .split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad size `{part}`")))
            })
            .collect::<Result<_, _>>()?,
        None => config.seed_sizes.clone(),
    };
    let seed_splits = splits::make_splits(&result.utterances, &sizes, config.rng_seed)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let paths = splits::write_splits(&result.utterances, &seed_splits, &args.out_dir)?;
    for (split, path) in seed_splits.iter().zip(&paths) {
        println!("seed {} -> {}", split.size, path.display());
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot read `{}`: {e}", path.display())))?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if !line.is_empty() {
            lines.push(line.to_string());
        }
    }
    Ok(lines)
}

fn lexicon_name(path: &Path) -> String {
    path.file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .unwrap_or_else(|| "lexicon".to_string())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::write(path, format!("{text}\n"))?;
    Ok(())
}
