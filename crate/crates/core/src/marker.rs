//! Span-ID marking of labeled utterances.
//!
//! Every non-root intent/slot node of the parse becomes a numbered bracket
//! pair in the utterance, assigned pre-order left to right:
//!
//! ```text
//! Set alarm [ for 4:30 am on Tuesday ]_1 and [ Thursday ]_2 of next week
//! ```
//!
//! The open bracket is a standalone `[` token, the close is the fused
//! token `]_k`. Nested nodes are marked recursively; on depth-1 trees this
//! degenerates to flat span marking. Stripping all bracket tokens recovers
//! the original utterance exactly.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Utterance;
use crate::filter::{self, FilterRule, RuleConfig};
use crate::sample::{SampleError, StratifiedSampler};
use crate::top::{Interior, NodeKind, ParseNode, ParseTree};

/// One token of a marked utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkedToken {
    Plain(String),
    Open,
    Close(u32),
}

impl fmt::Display for MarkedToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkedToken::Plain(text) => f.write_str(text),
            MarkedToken::Open => f.write_str("["),
            MarkedToken::Close(id) => write!(f, "]_{id}"),
        }
    }
}

/// What a span-ID refers to in the source parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTarget {
    /// Child-index path from the root.
    pub path: Vec<usize>,
    pub kind: NodeKind,
    pub label: String,
}

/// An utterance with numbered span brackets plus the map from span-ID to
/// the source tree node it marks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedUtterance {
    pub tokens: Vec<MarkedToken>,
    pub span_map: BTreeMap<u32, SpanTarget>,
}

impl MarkedUtterance {
    /// Single-space-joined wire form.
    pub fn text(&self) -> String {
        let parts: Vec<String> = self.tokens.iter().map(|t| t.to_string()).collect();
        parts.join(" ")
    }

    /// The unmarked utterance token sequence.
    pub fn plain_tokens(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .filter_map(|t| match t {
                MarkedToken::Plain(text) => Some(text.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn span_count(&self) -> usize {
        self.span_map.len()
    }
}

#[derive(Debug, Error)]
pub enum MarkError {
    #[error("utterance has no parse to mark")]
    UnlabeledUtterance,
    #[error("parse tokens do not match utterance tokens for `{text}`")]
    MisalignedParse { text: String },
    #[error("marked text is structurally invalid: {rules:?}")]
    Structural { rules: Vec<FilterRule> },
}

/// Marks every non-root intent/slot node of the parse with a numbered
/// bracket pair, IDs assigned pre-order.
pub fn mark_utterance(utterance: &Utterance) -> Result<MarkedUtterance, MarkError> {
    let parse = utterance
        .parse
        .as_ref()
        .ok_or(MarkError::UnlabeledUtterance)?;
    let text_tokens: Vec<&str> = utterance.text.split_whitespace().collect();
    if text_tokens != parse.tokens() {
        return Err(MarkError::MisalignedParse {
            text: utterance.text.clone(),
        });
    }
    Ok(mark_tree(parse))
}

/// Marks a parse tree directly; the utterance text is the tree's token
/// sequence.
pub fn mark_tree(parse: &ParseTree) -> MarkedUtterance {
    let mut tokens = Vec::new();
    let mut span_map = BTreeMap::new();
    let mut next_id = 1u32;
    let mut path = Vec::new();
    for (idx, child) in parse.root().children.iter().enumerate() {
        path.push(idx);
        mark_node(child, &mut path, &mut next_id, &mut tokens, &mut span_map);
        path.pop();
    }
    MarkedUtterance { tokens, span_map }
}

fn mark_node(
    node: &ParseNode,
    path: &mut Vec<usize>,
    next_id: &mut u32,
    tokens: &mut Vec<MarkedToken>,
    span_map: &mut BTreeMap<u32, SpanTarget>,
) {
    match node {
        ParseNode::Token(text) => tokens.push(MarkedToken::Plain(text.clone())),
        ParseNode::Interior(Interior {
            kind,
            label,
            children,
        }) => {
            let id = *next_id;
            *next_id += 1;
            span_map.insert(
                id,
                SpanTarget {
                    path: path.clone(),
                    kind: *kind,
                    label: label.clone(),
                },
            );
            tokens.push(MarkedToken::Open);
            for (idx, child) in children.iter().enumerate() {
                path.push(idx);
                mark_node(child, path, next_id, tokens, span_map);
                path.pop();
            }
            tokens.push(MarkedToken::Close(id));
        }
    }
}

/// Removes all bracket tokens from marked text, preserving token order.
/// The text must be structurally well formed; violations surface as
/// [`MarkError::Structural`].
pub fn strip_marks(marked: &str) -> Result<String, MarkError> {
    match filter::extract_spans(marked) {
        Ok(span_set) => Ok(span_set.plain_tokens.join(" ")),
        Err(rules) => Err(MarkError::Structural { rules }),
    }
}

/// One fine-tuning pair: a marked English input and its human-annotated
/// marked code-switched target.
#[derive(Debug, Clone)]
pub struct SeedPair {
    pub input: MarkedUtterance,
    pub target: String,
    pub domain: String,
}

impl SeedPair {
    /// TSV row in the seed-file schema
    /// `marked_english<TAB>marked_cs<TAB>domain`.
    pub fn tsv_row(&self) -> String {
        format!("{}\t{}\t{}", self.input.text(), self.target, self.domain)
    }
}

/// A pair that failed validation during seed export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairViolation {
    pub index: usize,
    pub domain: String,
    pub violations: Vec<FilterRule>,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{0}")]
    Sample(#[from] SampleError),
    #[error("{} pair(s) failed structural validation", .0.len())]
    InvalidPairs(Vec<PairViolation>),
    #[error("{0}")]
    Mark(#[from] MarkError),
}

/// Selects a deterministic, domain-stratified sample of seed pairs.
///
/// Every input pair is validated first; any structural failure aborts the
/// export with a per-pair report. Selected pairs are returned in input
/// order.
pub fn export_seed_pairs(
    corpus: &[(Utterance, String)],
    size: usize,
    seed: u64,
    rules: &RuleConfig,
) -> Result<Vec<SeedPair>, ExportError> {
    let mut marked = Vec::with_capacity(corpus.len());
    let mut bad = Vec::new();
    for (index, (utterance, cs_text)) in corpus.iter().enumerate() {
        let m = mark_utterance(utterance)?;
        let verdict = filter::validate_pair(&m, cs_text, rules);
        if !verdict.pass {
            bad.push(PairViolation {
                index,
                domain: utterance.domain.clone(),
                violations: verdict.violations,
            });
        }
        marked.push(m);
    }
    if !bad.is_empty() {
        return Err(ExportError::InvalidPairs(bad));
    }

    let sampler = StratifiedSampler::new(corpus.iter().map(|(u, _)| u.domain.as_str()), seed);
    let selected = sampler.take(size)?;
    Ok(selected
        .into_iter()
        .map(|i| SeedPair {
            input: marked[i].clone(),
            target: corpus[i].1.clone(),
            domain: corpus[i].0.domain.clone(),
        })
        .collect())
}
