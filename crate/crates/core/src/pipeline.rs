//! End-to-end augmentation: ingest -> mark -> generate -> filter -> align
//! -> stats, with per-stage artifacts and a conservation summary.
//!
//! Generation is checkpointed: raw records append to `records.jsonl` as
//! batches complete, and a rerun with the same output directory resumes
//! from that file, re-requesting only ids it has not seen. Filtering and
//! alignment are cheap and always recomputed.
//!
//! Every input utterance lands in exactly one artifact: the augmented
//! corpus, the filter rejects, the alignment rejects, or the generation
//! failures. The run fails loudly if that partition does not add up.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligner::{self, AlignTask, Provenance};
use crate::config::{ConfigError, PipelineConfig};
use crate::corpus::{self, CorpusError, IngestOptions, Utterance};
use crate::filter::{self, FilterRule, RuleConfig};
use crate::genclient::{generate_batch, Backend, GenClientError, GenerationRecord, GenerationRequest};
use crate::marker::{self, MarkError, MarkedUtterance};
use crate::report;
use crate::stats::{self, LexiconPair, StatsError};
use crate::top::ParseTree;

pub const INGEST_REJECTS_JSONL: &str = "ingest_rejects.jsonl";
pub const MARKED_TSV: &str = "marked.tsv";
pub const RECORDS_JSONL: &str = "records.jsonl";
pub const GEN_FAILURES_JSONL: &str = "gen_failures.jsonl";
pub const FILTER_REJECTED_JSONL: &str = "filter_rejected.jsonl";
pub const THROUGHPUT_JSON: &str = "throughput.json";
pub const THROUGHPUT_TXT: &str = "throughput.txt";
pub const AUGMENTED_TSV: &str = "augmented.tsv";
pub const ALIGN_REJECTS_JSONL: &str = "align_rejects.jsonl";
pub const STATS_JSON: &str = "stats.json";
pub const STATS_TXT: &str = "stats.txt";
pub const SUMMARY_JSON: &str = "summary.json";

/// How many backend batches go into one checkpoint append.
const CHECKPOINT_BATCHES: usize = 8;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Mark(#[from] MarkError),
    #[error(transparent)]
    Generation(#[from] GenClientError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("pipeline defect: {0}")]
    Defect(String),
}

/// One prepared input: id, source record, and its marked form.
struct Item {
    id: String,
    utterance: Utterance,
    marked: MarkedUtterance,
}

/// Filter-reject sidecar line.
#[derive(Debug, Serialize, Deserialize)]
struct FilterRejectLine {
    id: String,
    candidate: String,
    violations: Vec<FilterRule>,
}

/// Counts and outcomes of one augment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub inputs: usize,
    pub ingest_rejects: usize,
    pub duplicates_dropped: usize,
    pub generation_failures: usize,
    pub filter_accepted: usize,
    pub filter_rejected: usize,
    pub aligned: usize,
    pub align_rejects: usize,
    pub throughput: f64,
    pub stats_computed: bool,
    pub conservation_ok: bool,
}

/// Builds the backend from config and runs the full pipeline.
pub fn run_augment_from_config(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    let backend = config.build_backend()?;
    run_augment(config, backend.as_ref())
}

/// Runs the full pipeline against an explicit backend.
pub fn run_augment(
    config: &PipelineConfig,
    backend: &dyn Backend,
) -> Result<RunSummary, PipelineError> {
    let corpus_in = config.paths.corpus_in.as_ref().ok_or_else(|| {
        PipelineError::Config(ConfigError::Invalid("paths.corpus_in is required".into()))
    })?;
    let out_dir = config.paths.out_dir.as_ref().ok_or_else(|| {
        PipelineError::Config(ConfigError::Invalid("paths.out_dir is required".into()))
    })?;
    std::fs::create_dir_all(out_dir)?;

    // Ingest.
    let ingested = corpus::ingest(
        corpus_in,
        &IngestOptions {
            header: config.flags.header,
            dedup: config.flags.dedup,
            split: Default::default(),
        },
    )?;
    corpus::write_jsonl(out_dir.join(INGEST_REJECTS_JSONL), &ingested.rejects)?;

    // Mark.
    let mut items = Vec::with_capacity(ingested.utterances.len());
    for (i, utterance) in ingested.utterances.into_iter().enumerate() {
        let marked = marker::mark_utterance(&utterance)?;
        items.push(Item {
            id: format!("u{:06}", i + 1),
            utterance,
            marked,
        });
    }
    write_marked_tsv(
        out_dir.join(MARKED_TSV),
        items.iter().map(|item| MarkedRow {
            id: item.id.clone(),
            domain: item.utterance.domain.clone(),
            marked_text: item.marked.text(),
            parse: item
                .utterance
                .parse
                .as_ref()
                .expect("ingested utterances are labeled")
                .serialize(),
        }),
    )?;

    // Generate with checkpoint/resume.
    let checkpoint_path = out_dir.join(RECORDS_JSONL);
    let mut done = load_checkpoint(&checkpoint_path)?;
    if !done.is_empty() {
        let current: BTreeMap<&str, String> = items
            .iter()
            .map(|item| (item.id.as_str(), item.marked.text()))
            .collect();
        for record in done.values() {
            if let Some(marked_text) = current.get(record.request.id.as_str()) {
                if record.request.marked_text != *marked_text {
                    return Err(PipelineError::Defect(format!(
                        "checkpoint record `{}` does not match the current inputs; \
                         remove `{}` to regenerate",
                        record.request.id,
                        checkpoint_path.display()
                    )));
                }
            }
        }
    }
    let pending: Vec<GenerationRequest> = items
        .iter()
        .filter(|item| !done.contains_key(&item.id))
        .map(|item| GenerationRequest {
            id: item.id.clone(),
            domain: item.utterance.domain.clone(),
            marked_text: item.marked.text(),
        })
        .collect();
    if !pending.is_empty() {
        let mut checkpoint = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&checkpoint_path)?;
        let chunk_size = config.backend.batch_size.max(1) * CHECKPOINT_BATCHES;
        for chunk in pending.chunks(chunk_size) {
            let records = generate_batch(chunk, backend)?;
            for record in &records {
                writeln!(
                    checkpoint,
                    "{}",
                    serde_json::to_string(record).map_err(io::Error::other)?
                )?;
            }
            checkpoint.flush()?;
            for record in records {
                done.entry(record.request.id.clone()).or_insert(record);
            }
        }
    }
    let records: Vec<&GenerationRecord> = items
        .iter()
        .map(|item| {
            done.get(&item.id).ok_or_else(|| {
                PipelineError::Defect(format!("no generation record for `{}`", item.id))
            })
        })
        .collect::<Result<_, _>>()?;

    // Partition generation failures from candidates.
    let mut failures: Vec<&GenerationRecord> = Vec::new();
    let mut candidate_indices: Vec<usize> = Vec::new();
    for (i, record) in records.iter().enumerate() {
        if record.candidate().is_some() {
            candidate_indices.push(i);
        } else {
            failures.push(record);
        }
    }
    corpus::write_jsonl(out_dir.join(GEN_FAILURES_JSONL), failures.iter())?;

    // Filter.
    let rules = RuleConfig {
        containment: config.flags.containment_rule,
    };
    let pairs: Vec<(&MarkedUtterance, &str)> = candidate_indices
        .iter()
        .map(|&i| {
            (
                &items[i].marked,
                records[i].candidate().expect("candidate present"),
            )
        })
        .collect();
    let outcome = filter::filter_corpus(&pairs, &rules);
    corpus::write_jsonl(
        out_dir.join(FILTER_REJECTED_JSONL),
        outcome.rejected.iter().map(|reject| {
            let input = candidate_indices[reject.index];
            FilterRejectLine {
                id: items[input].id.clone(),
                candidate: records[input].candidate().unwrap_or_default().to_string(),
                violations: reject.verdict.violations.clone(),
            }
        }),
    )?;
    write_text(
        out_dir.join(THROUGHPUT_JSON),
        &serde_json::to_string_pretty(&outcome.report).map_err(io::Error::other)?,
    )?;
    write_text(
        out_dir.join(THROUGHPUT_TXT),
        &report::render_throughput(&outcome.report),
    )?;

    // Align.
    let tasks: Vec<AlignTask> = outcome
        .accepted
        .iter()
        .map(|&pair_index| {
            let input = candidate_indices[pair_index];
            AlignTask {
                id: items[input].id.clone(),
                english: items[input].utterance.clone(),
                marked: items[input].marked.clone(),
                candidate: records[input].candidate().expect("accepted").to_string(),
                provenance: Provenance::Generated,
            }
        })
        .collect();
    let align_outcome = aligner::align_corpus(&tasks);
    corpus::write_corpus(
        out_dir.join(AUGMENTED_TSV),
        align_outcome.aligned.iter().map(|record| {
            (
                record.english.domain.clone(),
                record.cs_text.clone(),
                record.cs_parse.serialize(),
            )
        }),
    )?;
    corpus::write_jsonl(out_dir.join(ALIGN_REJECTS_JSONL), &align_outcome.rejects)?;

    // Stats over the augmented corpus, when lexicons are configured.
    let mut stats_computed = false;
    if let (Some(path_a), Some(path_b)) = (&config.paths.lexicon_a, &config.paths.lexicon_b) {
        if !align_outcome.aligned.is_empty() {
            let lexicons = LexiconPair::load(
                lexicon_name(path_a),
                path_a,
                lexicon_name(path_b),
                path_b,
            )?;
            let corpus_stats = stats::corpus_stats(
                align_outcome.aligned.iter().map(|r| r.cs_text.as_str()),
                &lexicons,
            )?;
            write_text(
                out_dir.join(STATS_JSON),
                &serde_json::to_string_pretty(&corpus_stats).map_err(io::Error::other)?,
            )?;
            write_text(out_dir.join(STATS_TXT), &corpus_stats.render_table())?;
            stats_computed = true;
        }
    }

    // Conservation.
    let inputs = items.len();
    let accounted = failures.len()
        + outcome.rejected.len()
        + align_outcome.aligned.len()
        + align_outcome.rejects.len();
    let conservation_ok = inputs == accounted;
    let summary = RunSummary {
        inputs,
        ingest_rejects: ingested.rejects.len(),
        duplicates_dropped: ingested.duplicates_dropped,
        generation_failures: failures.len(),
        filter_accepted: outcome.accepted.len(),
        filter_rejected: outcome.rejected.len(),
        aligned: align_outcome.aligned.len(),
        align_rejects: align_outcome.rejects.len(),
        throughput: outcome.report.throughput,
        stats_computed,
        conservation_ok,
    };
    write_text(
        out_dir.join(SUMMARY_JSON),
        &serde_json::to_string_pretty(&summary).map_err(io::Error::other)?,
    )?;
    if !conservation_ok {
        return Err(PipelineError::Defect(format!(
            "conservation violated: {inputs} inputs vs {accounted} accounted outputs"
        )));
    }
    Ok(summary)
}

fn lexicon_name(path: &Path) -> String {
    path.file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .unwrap_or_else(|| "lexicon".to_string())
}

fn write_text(path: PathBuf, text: &str) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// One row of the intermediate marked file:
/// `id<TAB>domain<TAB>marked_text<TAB>semantic_parse`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedRow {
    pub id: String,
    pub domain: String,
    pub marked_text: String,
    pub parse: String,
}

pub fn write_marked_tsv(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = MarkedRow>,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    for row in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            row.id, row.domain, row.marked_text, row.parse
        )?;
    }
    out.flush()
}

pub fn read_marked_tsv(path: impl AsRef<Path>) -> Result<Vec<MarkedRow>, PipelineError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(CorpusError::ColumnCountMismatch {
                line: idx + 1,
                found: cols.len(),
            }
            .into());
        }
        rows.push(MarkedRow {
            id: cols[0].to_string(),
            domain: cols[1].to_string(),
            marked_text: cols[2].to_string(),
            parse: cols[3].to_string(),
        });
    }
    Ok(rows)
}

/// Rebuilds the in-memory item a marked row describes, checking that the
/// stored marked text matches what the parse produces.
pub fn item_from_marked_row(
    row: &MarkedRow,
) -> Result<(Utterance, MarkedUtterance), PipelineError> {
    let tree = ParseTree::parse(&row.parse)
        .map_err(|e| PipelineError::Defect(format!("row `{}`: bad parse: {e}", row.id)))?;
    let utterance = Utterance::labeled(
        row.domain.clone(),
        Default::default(),
        tree.utterance(),
        tree,
    )?;
    let marked = marker::mark_utterance(&utterance)?;
    if marked.text() != row.marked_text {
        return Err(PipelineError::Defect(format!(
            "row `{}`: marked text does not match its parse",
            row.id
        )));
    }
    Ok((utterance, marked))
}

/// Loads a generation checkpoint, keeping the first record per id.
pub fn load_checkpoint(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<String, GenerationRecord>, PipelineError> {
    let path = path.as_ref();
    let mut done = BTreeMap::new();
    let file = match File::open(path) {
        Ok(file) => file,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(e.into()),
    };
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GenerationRecord = serde_json::from_str(&line).map_err(|e| {
            PipelineError::Defect(format!(
                "checkpoint `{}` line {}: {e}",
                path.display(),
                idx + 1
            ))
        })?;
        done.entry(record.request.id.clone()).or_insert(record);
    }
    Ok(done)
}
