//! Gateway to the code-switch generation backend.
//!
//! The generator itself is an external sequence-to-sequence service; this
//! module only speaks its wire protocol. Three backends are provided:
//!
//! - [`HttpBackend`] — POST `/generate` with a JSON-lines body, one
//!   `{"id", "domain", "marked_text"}` object per request; the response is
//!   JSON-lines of `{"id", "candidates": [...], "model_info": "..."}`.
//!   Batched, bounded-concurrency, with retries and exponential backoff.
//! - [`ReplayBackend`] — serves recorded response objects from a JSONL
//!   file keyed by request id.
//! - [`MockBackend`] — deterministic token substitution for tests, with
//!   corruption modes that each inject one class of structural error.
//!
//! Every backend returns exactly one record per request, in request
//! order; items that produced no usable candidate carry an error marker
//! instead of being dropped.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One generation input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub id: String,
    pub domain: String,
    pub marked_text: String,
}

/// Why a request produced no candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    MissingResponse,
    EmptyCandidates,
}

/// Raw backend output for one request. A candidate is unvalidated text;
/// structural checking is the filter's job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GenerationOutcome {
    Candidate { text: String },
    Failed { reason: FailureReason },
}

/// One request paired with its raw backend outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    #[serde(flatten)]
    pub request: GenerationRequest,
    #[serde(flatten)]
    pub outcome: GenerationOutcome,
    pub backend_info: String,
}

impl GenerationRecord {
    pub fn candidate(&self) -> Option<&str> {
        match &self.outcome {
            GenerationOutcome::Candidate { text } => Some(text),
            GenerationOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenClientError {
    #[error("backend unavailable after {attempts} attempt(s): {detail}")]
    BackendUnavailable { attempts: u32, detail: String },
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("batch timed out after {attempts} attempt(s): {detail}")]
    TimeoutPerBatch { attempts: u32, detail: String },
    #[error("cannot read replay file `{path}`: {detail}")]
    ReplayUnreadable { path: String, detail: String },
    #[error("backend returned no record for request `{id}`")]
    MissingRecord { id: String },
}

/// A code-switch generation backend.
pub trait Backend: Send + Sync {
    /// Exactly one record per request, in request order.
    fn generate(&self, requests: &[GenerationRequest])
        -> Result<Vec<GenerationRecord>, GenClientError>;

    fn describe(&self) -> String;
}

/// Runs a request list through a backend and enforces the one-record-per
/// request, input-order postcondition (re-sequencing by id if needed).
pub fn generate_batch(
    requests: &[GenerationRequest],
    backend: &dyn Backend,
) -> Result<Vec<GenerationRecord>, GenClientError> {
    let records = backend.generate(requests)?;
    let in_order = records.len() == requests.len()
        && records
            .iter()
            .zip(requests)
            .all(|(record, request)| record.request.id == request.id);
    if in_order {
        return Ok(records);
    }
    // Keep the first record per id, drop extras, resequence.
    let mut by_id: BTreeMap<&str, &GenerationRecord> = BTreeMap::new();
    for record in &records {
        by_id.entry(record.request.id.as_str()).or_insert(record);
    }
    requests
        .iter()
        .map(|request| {
            by_id
                .get(request.id.as_str())
                .map(|r| (*r).clone())
                .ok_or_else(|| GenClientError::MissingRecord {
                    id: request.id.clone(),
                })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

/// What the mock does to each input, named by the structural error it
/// injects. `Faithful` output always survives the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockMode {
    /// Substitute plain tokens only; brackets and span-IDs pass through.
    Faithful,
    /// Repeat the first top-level span, so one span-ID occurs twice.
    DuplicateSpan,
    /// Rewrite the first closing token to the unparseable `]_two`.
    MalformSpanId,
    /// Append a stray opening bracket.
    UnbalanceBrackets,
    /// Renumber the first closing token to an id the input never used.
    RenumberSpanId,
}

impl MockMode {
    pub fn parse(s: &str) -> Option<MockMode> {
        match s {
            "faithful" => Some(MockMode::Faithful),
            "duplicate-span" => Some(MockMode::DuplicateSpan),
            "malform-span-id" => Some(MockMode::MalformSpanId),
            "unbalance-brackets" => Some(MockMode::UnbalanceBrackets),
            "renumber-span-id" => Some(MockMode::RenumberSpanId),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            MockMode::Faithful => "faithful",
            MockMode::DuplicateSpan => "duplicate-span",
            MockMode::MalformSpanId => "malform-span-id",
            MockMode::UnbalanceBrackets => "unbalance-brackets",
            MockMode::RenumberSpanId => "renumber-span-id",
        }
    }
}

fn is_close_token(token: &str) -> bool {
    token.starts_with(']')
}

fn close_id(token: &str) -> Option<u32> {
    token.strip_prefix("]_")?.parse().ok()
}

/// Deterministic test double for the generation model: substitutes plain
/// tokens through `table` (identity when unmapped) and, in the corrupt
/// modes, injects exactly one structural error. The corrupt modes target
/// their named error precisely on span-bearing inputs; on inputs without
/// spans they fall back to appending a fresh span, which reads as a span
/// count mismatch.
pub fn mock_generate(
    request: &GenerationRequest,
    table: &BTreeMap<String, String>,
    mode: MockMode,
) -> GenerationRecord {
    let mut tokens: Vec<String> = request
        .marked_text
        .split_whitespace()
        .map(|token| {
            if token == "[" || is_close_token(token) {
                token.to_string()
            } else {
                table.get(token).cloned().unwrap_or_else(|| token.to_string())
            }
        })
        .collect();

    match mode {
        MockMode::Faithful => {}
        MockMode::DuplicateSpan => {
            if let Some(range) = first_top_level_span(&tokens) {
                let copy: Vec<String> = tokens[range.0..=range.1].to_vec();
                tokens.extend(copy);
            } else {
                tokens.extend(["[".into(), "extra".into(), "]_1".into()]);
            }
        }
        MockMode::MalformSpanId => {
            if let Some(pos) = tokens.iter().position(|t| is_close_token(t)) {
                tokens[pos] = "]_two".into();
            } else {
                tokens.extend(["[".into(), "extra".into(), "]_two".into()]);
            }
        }
        MockMode::UnbalanceBrackets => tokens.push("[".into()),
        MockMode::RenumberSpanId => {
            let max_id = tokens.iter().filter_map(|t| close_id(t)).max();
            match (
                tokens.iter().position(|t| is_close_token(t)),
                max_id,
            ) {
                (Some(pos), Some(max)) => tokens[pos] = format!("]_{}", max + 1),
                _ => tokens.extend(["[".into(), "extra".into(), "]_1".into()]),
            }
        }
    }

    GenerationRecord {
        request: request.clone(),
        outcome: GenerationOutcome::Candidate {
            text: tokens.join(" "),
        },
        backend_info: format!("mock:{}", mode.name()),
    }
}

/// Token index range (open ..= close) of the first span opening at depth 0.
fn first_top_level_span(tokens: &[String]) -> Option<(usize, usize)> {
    let mut depth = 0usize;
    let mut open_at = None;
    for (i, token) in tokens.iter().enumerate() {
        if token == "[" {
            if depth == 0 {
                open_at = Some(i);
            }
            depth += 1;
        } else if is_close_token(token) {
            depth = depth.saturating_sub(1);
            if depth == 0 {
                if let Some(start) = open_at {
                    return Some((start, i));
                }
            }
        }
    }
    None
}

/// Fixed-mode mock backend over a substitution table.
pub struct MockBackend {
    pub table: BTreeMap<String, String>,
    pub mode: MockMode,
}

impl MockBackend {
    pub fn faithful(table: BTreeMap<String, String>) -> Self {
        MockBackend {
            table,
            mode: MockMode::Faithful,
        }
    }
}

impl Backend for MockBackend {
    fn generate(
        &self,
        requests: &[GenerationRequest],
    ) -> Result<Vec<GenerationRecord>, GenClientError> {
        Ok(requests
            .iter()
            .map(|request| mock_generate(request, &self.table, self.mode))
            .collect())
    }

    fn describe(&self) -> String {
        format!("mock:{}", self.mode.name())
    }
}

// ---------------------------------------------------------------------------
// Replay backend
// ---------------------------------------------------------------------------

/// One response object of the wire protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseLine {
    pub id: String,
    pub candidates: Vec<String>,
    #[serde(default)]
    pub model_info: String,
}

/// Serves recorded responses from a JSONL file keyed by request id.
/// Duplicate ids keep the first occurrence.
pub struct ReplayBackend {
    responses: BTreeMap<String, ResponseLine>,
}

impl ReplayBackend {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GenClientError> {
        let path = path.as_ref();
        let unreadable = |detail: String| GenClientError::ReplayUnreadable {
            path: path.display().to_string(),
            detail,
        };
        let file = File::open(path).map_err(|e| unreadable(e.to_string()))?;
        let mut responses = BTreeMap::new();
        for (line_no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| unreadable(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let response: ResponseLine = serde_json::from_str(&line)
                .map_err(|e| unreadable(format!("line {}: {e}", line_no + 1)))?;
            responses.entry(response.id.clone()).or_insert(response);
        }
        Ok(ReplayBackend { responses })
    }
}

impl Backend for ReplayBackend {
    fn generate(
        &self,
        requests: &[GenerationRequest],
    ) -> Result<Vec<GenerationRecord>, GenClientError> {
        Ok(requests
            .iter()
            .map(|request| match self.responses.get(&request.id) {
                Some(response) => match response.candidates.first() {
                    Some(text) => GenerationRecord {
                        request: request.clone(),
                        outcome: GenerationOutcome::Candidate { text: text.clone() },
                        backend_info: if response.model_info.is_empty() {
                            "replay".to_string()
                        } else {
                            format!("replay:{}", response.model_info)
                        },
                    },
                    None => GenerationRecord {
                        request: request.clone(),
                        outcome: GenerationOutcome::Failed {
                            reason: FailureReason::EmptyCandidates,
                        },
                        backend_info: "replay".to_string(),
                    },
                },
                None => GenerationRecord {
                    request: request.clone(),
                    outcome: GenerationOutcome::Failed {
                        reason: FailureReason::MissingResponse,
                    },
                    backend_info: "replay".to_string(),
                },
            })
            .collect())
    }

    fn describe(&self) -> String {
        "replay".to_string()
    }
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HttpOptions {
    pub batch_size: usize,
    pub timeout: Duration,
    pub retries: u32,
    /// Base backoff; doubles after each failed attempt.
    pub backoff: Duration,
    /// Maximum in-flight batches.
    pub concurrency: usize,
}

impl Default for HttpOptions {
    fn default() -> Self {
        HttpOptions {
            batch_size: 64,
            timeout: Duration::from_secs(30),
            retries: 3,
            backoff: Duration::from_millis(200),
            concurrency: 4,
        }
    }
}

pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    options: HttpOptions,
}

enum AttemptError {
    Timeout(String),
    Transport(String),
    Protocol(String),
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, options: HttpOptions) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(options.timeout))
            .http_status_as_error(false)
            .build();
        HttpBackend {
            agent: config.into(),
            url: url.into(),
            options,
        }
    }

    fn send_attempt(
        &self,
        batch: &[&GenerationRequest],
    ) -> Result<BTreeMap<String, ResponseLine>, AttemptError> {
        let mut body = String::new();
        for request in batch {
            body.push_str(&serde_json::to_string(request).expect("request serializes"));
            body.push('\n');
        }
        let result = self
            .agent
            .post(&self.url)
            .header("content-type", "application/x-ndjson")
            .send(&body);
        let mut response = match result {
            Ok(response) => response,
            Err(ureq::Error::Timeout(reason)) => {
                return Err(AttemptError::Timeout(reason.to_string()))
            }
            Err(other) => return Err(AttemptError::Transport(other.to_string())),
        };
        if !response.status().is_success() {
            return Err(AttemptError::Transport(format!(
                "HTTP {}",
                response.status()
            )));
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| AttemptError::Transport(e.to_string()))?;

        let mut responses = BTreeMap::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ResponseLine = serde_json::from_str(line)
                .map_err(|e| AttemptError::Protocol(format!("bad response line: {e}")))?;
            // Duplicate delivery: keep the first response per id.
            responses.entry(parsed.id.clone()).or_insert(parsed);
        }
        Ok(responses)
    }

    fn run_batch(
        &self,
        batch: &[GenerationRequest],
    ) -> Result<Vec<GenerationRecord>, GenClientError> {
        let mut answered: BTreeMap<String, ResponseLine> = BTreeMap::new();
        let mut outstanding: Vec<&GenerationRequest> = batch.iter().collect();
        let mut last_error: Option<AttemptError> = None;
        let attempts = self.options.retries + 1;

        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.options.backoff * (1 << (attempt - 1).min(16)));
            }
            let started = Instant::now();
            match self.send_attempt(&outstanding) {
                Ok(mut responses) => {
                    let latency = started.elapsed().as_millis();
                    for response in responses.values_mut() {
                        if response.model_info.is_empty() {
                            response.model_info = "unknown".to_string();
                        }
                        response.model_info = format!("{} ({latency} ms)", response.model_info);
                    }
                    for request in &outstanding {
                        if let Some(response) = responses.remove(&request.id) {
                            answered.entry(request.id.clone()).or_insert(response);
                        }
                    }
                    outstanding.retain(|request| !answered.contains_key(&request.id));
                    last_error = None;
                    if outstanding.is_empty() {
                        break;
                    }
                }
                Err(error) => last_error = Some(error),
            }
        }

        if let Some(error) = last_error {
            return Err(match error {
                AttemptError::Timeout(detail) => GenClientError::TimeoutPerBatch {
                    attempts,
                    detail,
                },
                AttemptError::Transport(detail) => GenClientError::BackendUnavailable {
                    attempts,
                    detail,
                },
                AttemptError::Protocol(detail) => GenClientError::ProtocolError(detail),
            });
        }

        Ok(batch
            .iter()
            .map(|request| match answered.get(&request.id) {
                Some(response) => match response.candidates.first() {
                    Some(text) => GenerationRecord {
                        request: request.clone(),
                        outcome: GenerationOutcome::Candidate { text: text.clone() },
                        backend_info: response.model_info.clone(),
                    },
                    None => GenerationRecord {
                        request: request.clone(),
                        outcome: GenerationOutcome::Failed {
                            reason: FailureReason::EmptyCandidates,
                        },
                        backend_info: response.model_info.clone(),
                    },
                },
                None => GenerationRecord {
                    request: request.clone(),
                    outcome: GenerationOutcome::Failed {
                        reason: FailureReason::MissingResponse,
                    },
                    backend_info: "http".to_string(),
                },
            })
            .collect())
    }
}

impl Backend for HttpBackend {
    fn generate(
        &self,
        requests: &[GenerationRequest],
    ) -> Result<Vec<GenerationRecord>, GenClientError> {
        type BatchResult = Result<Vec<GenerationRecord>, GenClientError>;
        let batches: Vec<&[GenerationRequest]> =
            requests.chunks(self.options.batch_size.max(1)).collect();
        let results: Vec<Mutex<Option<BatchResult>>> =
            batches.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.options.concurrency.max(1).min(batches.len().max(1));

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= batches.len() {
                        break;
                    }
                    let outcome = self.run_batch(batches[i]);
                    *results[i].lock().unwrap() = Some(outcome);
                });
            }
        });

        let mut records = Vec::with_capacity(requests.len());
        for cell in results {
            records.extend(cell.into_inner().unwrap().expect("batch processed")?);
        }
        Ok(records)
    }

    fn describe(&self) -> String {
        format!("http:{}", self.url)
    }
}
