//! Corpus records and TSV ingestion/emission.
//!
//! The corpus file format is UTF-8 TSV with one record per line:
//! `domain<TAB>utterance<TAB>semantic_parse`, optional header row.
//! Reading is streaming: files at the 100k+ row scale are never held in
//! memory at once.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::top::{ParseTree, TopError};

/// Which original dataset split a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Validation => write!(f, "validation"),
            Split::Test => write!(f, "test"),
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "valid" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// One corpus record. `parse` is absent only for unlabeled generation
/// inputs built programmatically; file rows always carry a parse.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub domain: String,
    pub split: Split,
    pub text: String,
    pub parse: Option<ParseTree>,
}

impl Utterance {
    /// Builds a labeled record, checking that the utterance tokenizes to
    /// exactly the parse's token sequence.
    pub fn labeled(
        domain: impl Into<String>,
        split: Split,
        text: impl Into<String>,
        parse: ParseTree,
    ) -> Result<Self, CorpusError> {
        let text = text.into();
        let text_tokens: Vec<&str> = text.split_whitespace().collect();
        if text_tokens != parse.tokens() {
            return Err(CorpusError::MisalignedParse {
                text: text.clone(),
                parse: parse.serialize(),
            });
        }
        Ok(Utterance {
            domain: domain.into(),
            split,
            text,
            parse: Some(parse),
        })
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read `{path}`: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: expected 3 tab-separated columns, found {found}")]
    ColumnCountMismatch { line: usize, found: usize },
    #[error("utterance `{text}` does not tokenize to the parse `{parse}`")]
    MisalignedParse { text: String, parse: String },
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
}

/// Why an ingested row was routed to the rejects report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    UnparseableParse { error: String },
    MisalignedParse,
    EmptyParse,
}

/// A rejected row with its 1-based line number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestReject {
    pub line: usize,
    pub domain: String,
    pub text: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

/// One streamed row: a valid record or a soft reject.
#[derive(Debug)]
pub enum IngestRow {
    Accepted(Utterance),
    Rejected(IngestReject),
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Skip a header row before the first record.
    pub header: bool,
    /// Drop exact duplicate (domain, text, parse) rows.
    pub dedup: bool,
    /// Split tag applied to every row of the file.
    pub split: Split,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            header: false,
            dedup: false,
            split: Split::Train,
        }
    }
}

/// Streaming corpus reader; yields rows one at a time.
pub struct CorpusReader<R: BufRead> {
    lines: io::Lines<R>,
    line_no: usize,
    split: Split,
}

impl CorpusReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CorpusError::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        CorpusReader::from_reader(BufReader::new(file), options)
    }
}

impl<R: BufRead> CorpusReader<R> {
    pub fn from_reader(reader: R, options: &IngestOptions) -> Result<Self, CorpusError> {
        let mut lines = reader.lines();
        let mut line_no = 0;
        if options.header {
            line_no = 1;
            match lines.next() {
                Some(Ok(_)) | None => {}
                Some(Err(source)) => {
                    return Err(CorpusError::FileUnreadable {
                        path: PathBuf::new(),
                        source,
                    })
                }
            }
        }
        Ok(CorpusReader {
            lines,
            line_no,
            split: options.split,
        })
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<IngestRow, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(CorpusError::FileUnreadable {
                        path: PathBuf::new(),
                        source,
                    }))
                }
            };
            self.line_no += 1;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Some(Err(CorpusError::ColumnCountMismatch {
                    line: self.line_no,
                    found: cols.len(),
                }));
            }
            let (domain, text, parse_str) = (cols[0], cols[1], cols[2]);
            if parse_str.trim().is_empty() {
                return Some(Ok(IngestRow::Rejected(IngestReject {
                    line: self.line_no,
                    domain: domain.to_string(),
                    text: text.to_string(),
                    reason: RejectReason::EmptyParse,
                })));
            }
            let row = match ParseTree::parse(parse_str) {
                Ok(tree) => match Utterance::labeled(domain, self.split, text, tree) {
                    Ok(utterance) => IngestRow::Accepted(utterance),
                    Err(CorpusError::MisalignedParse { .. }) => {
                        IngestRow::Rejected(IngestReject {
                            line: self.line_no,
                            domain: domain.to_string(),
                            text: text.to_string(),
                            reason: RejectReason::MisalignedParse,
                        })
                    }
                    Err(other) => return Some(Err(other)),
                },
                Err(err @ TopError::UnbalancedBrackets(_))
                | Err(err @ TopError::UnknownNodePrefix { .. })
                | Err(err @ TopError::EmptyNode { .. })
                | Err(err @ TopError::RootNotIntent)
                | Err(err @ TopError::SlotInsideSlot { .. })
                | Err(err @ TopError::IntentInsideIntent { .. })
                | Err(err @ TopError::EmptyLabel { .. })
                | Err(err @ TopError::InvalidToken { .. }) => {
                    IngestRow::Rejected(IngestReject {
                        line: self.line_no,
                        domain: domain.to_string(),
                        text: text.to_string(),
                        reason: RejectReason::UnparseableParse {
                            error: err.to_string(),
                        },
                    })
                }
            };
            return Some(Ok(row));
        }
    }
}

/// Everything `ingest` collected from one file.
#[derive(Debug)]
pub struct IngestResult {
    pub utterances: Vec<Utterance>,
    pub rejects: Vec<IngestReject>,
    pub duplicates_dropped: usize,
}

/// Reads a whole corpus file, routing bad rows to the rejects list and
/// optionally dropping exact duplicates.
pub fn ingest(path: impl AsRef<Path>, options: &IngestOptions) -> Result<IngestResult, CorpusError> {
    let reader = CorpusReader::open(path, options)?;
    let mut utterances = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut duplicates_dropped = 0;
    for row in reader {
        match row? {
            IngestRow::Accepted(utterance) => {
                if options.dedup {
                    let key = (
                        utterance.domain.clone(),
                        utterance.text.clone(),
                        utterance.parse.as_ref().map(|p| p.serialize()),
                    );
                    if !seen.insert(key) {
                        duplicates_dropped += 1;
                        continue;
                    }
                }
                utterances.push(utterance);
            }
            IngestRow::Rejected(reject) => rejects.push(reject),
        }
    }
    Ok(IngestResult {
        utterances,
        rejects,
        duplicates_dropped,
    })
}

/// Writes records back out in the corpus TSV schema.
pub fn write_corpus(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (String, String, String)>,
) -> Result<(), CorpusError> {
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    for (domain, text, parse) in rows {
        writeln!(out, "{domain}\t{text}\t{parse}")?;
    }
    out.flush()?;
    Ok(())
}

/// Appends JSON lines to a sidecar file, one value per line.
pub fn write_jsonl<T: Serialize>(
    path: impl AsRef<Path>,
    items: impl IntoIterator<Item = T>,
) -> Result<(), io::Error> {
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(&item).map_err(io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reader(data: &str, options: &IngestOptions) -> Vec<Result<IngestRow, CorpusError>> {
        CorpusReader::from_reader(BufReader::new(data.as_bytes()), options)
            .unwrap()
            .collect()
    }

    const THREE_ROWS: &str = "alarm\thello there\t[IN:A hello there ]\n\
                              weather\train today\t[IN:B rain today ]\n\
                              alarm\twake me\t[IN:C wake me ]\n";

    #[test]
    fn reads_three_valid_rows() {
        let rows = reader(THREE_ROWS, &IngestOptions::default());
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert!(matches!(row.unwrap(), IngestRow::Accepted(_)));
        }
    }

    #[test]
    fn routes_bad_parse_to_rejects_with_line_number() {
        let data = "alarm\thello\t[IN:A hello ]\n\
                    alarm\tbroken\t[IN:A broken\n\
                    alarm\tbye\t[IN:B bye ]\n";
        let result = {
            let mut utterances = 0;
            let mut rejects = Vec::new();
            for row in reader(data, &IngestOptions::default()) {
                match row.unwrap() {
                    IngestRow::Accepted(_) => utterances += 1,
                    IngestRow::Rejected(reject) => rejects.push(reject),
                }
            }
            (utterances, rejects)
        };
        assert_eq!(result.0, 2);
        assert_eq!(result.1.len(), 1);
        assert_eq!(result.1[0].line, 2);
        assert!(matches!(
            result.1[0].reason,
            RejectReason::UnparseableParse { .. }
        ));
    }

    #[test]
    fn rejects_misaligned_text() {
        let data = "alarm\thello world\t[IN:A hello ]\n";
        let rows = reader(data, &IngestOptions::default());
        match rows[0].as_ref().unwrap() {
            IngestRow::Rejected(reject) => {
                assert!(matches!(reject.reason, RejectReason::MisalignedParse))
            }
            other => panic!("expected reject, got {other:?}"),
        }
    }

    #[test]
    fn column_count_mismatch_is_hard_error() {
        let data = "alarm\thello\n";
        let rows = reader(data, &IngestOptions::default());
        assert!(matches!(
            rows[0],
            Err(CorpusError::ColumnCountMismatch { line: 1, found: 2 })
        ));
    }

    #[test]
    fn header_row_is_skipped_when_flagged() {
        let data = format!("domain\tutterance\tsemantic_parse\n{THREE_ROWS}");
        let options = IngestOptions {
            header: true,
            ..Default::default()
        };
        assert_eq!(reader(&data, &options).len(), 3);
    }

    #[test]
    fn dedup_drops_exact_duplicates_only_when_enabled() {
        let data = "alarm\thi\t[IN:A hi ]\nalarm\thi\t[IN:A hi ]\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        std::fs::write(&path, data).unwrap();

        let kept = ingest(&path, &IngestOptions::default()).unwrap();
        assert_eq!(kept.utterances.len(), 2);
        assert_eq!(kept.duplicates_dropped, 0);

        let deduped = ingest(
            &path,
            &IngestOptions {
                dedup: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(deduped.utterances.len(), 1);
        assert_eq!(deduped.duplicates_dropped, 1);
    }

    #[test]
    fn split_tag_applies_to_all_rows() {
        let options = IngestOptions {
            split: Split::Test,
            ..Default::default()
        };
        for row in reader(THREE_ROWS, &options) {
            match row.unwrap() {
                IngestRow::Accepted(u) => assert_eq!(u.split, Split::Test),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn missing_file_is_file_unreadable() {
        let err = ingest("/nonexistent/corpus.tsv", &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::FileUnreadable { .. }));
    }
}
