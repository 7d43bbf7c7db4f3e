//! Parse reconstruction for validated marked code-switched text.
//!
//! Span-IDs give a 1:1 mapping between English parse nodes and
//! code-switched spans, so the full semantic parse transfers: each span
//! `k` becomes a node with the kind and label of English node `k`, plain
//! tokens become token children at their level, and sibling order follows
//! the code-switched surface order (spans may legitimately reorder).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Utterance;
use crate::marker::MarkedUtterance;
use crate::top::{NodeKind, ParseNode, ParseTree};

/// Where a code-switched utterance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Human,
    Generated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Human => write!(f, "human"),
            Provenance::Generated => write!(f, "generated"),
        }
    }
}

/// A code-switched utterance with its reconstructed parse.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedRecord {
    pub english: Utterance,
    pub cs_text: String,
    pub cs_parse: ParseTree,
    pub provenance: Provenance,
    pub span_count: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    /// The candidate has no tokens, or a span encloses none.
    #[error("reconstruction yielded an empty {0}")]
    EmptyReconstruction(&'static str),
    /// Violated a precondition the filter is supposed to guarantee.
    /// Reachable only for inputs that did not pass `validate_pair` with
    /// the containment rule enabled, or for plain tokens shaped like
    /// bracket syntax.
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
}

/// Rebuilds the full parse of a validated marked candidate from the
/// English marked utterance and its source parse.
pub fn reconstruct_parse(
    english: &MarkedUtterance,
    source: &ParseTree,
    cs: &str,
) -> Result<ParseTree, AlignError> {
    let defect = |detail: String| AlignError::InternalInvariantViolation(detail);

    // Stack of child lists; the bottom frame collects the root's children.
    let mut frames: Vec<Vec<ParseNode>> = vec![Vec::new()];
    for token in cs.split_whitespace() {
        if token == "[" {
            frames.push(Vec::new());
        } else if token.starts_with(']') {
            let id: u32 = token
                .strip_prefix("]_")
                .and_then(|digits| digits.parse().ok())
                .ok_or_else(|| defect(format!("unextractable span-ID in `{token}`")))?;
            let children = frames
                .pop()
                .filter(|_| !frames.is_empty())
                .ok_or_else(|| defect("closing bracket without an open span".into()))?;
            if children.is_empty() {
                return Err(AlignError::EmptyReconstruction("span"));
            }
            let target = english
                .span_map
                .get(&id)
                .ok_or_else(|| defect(format!("span-ID {id} is not in the English parse")))?;
            let node = match target.kind {
                NodeKind::Intent => ParseNode::intent(target.label.clone(), children),
                NodeKind::Slot => ParseNode::slot(target.label.clone(), children),
            };
            frames.last_mut().expect("frame present").push(node);
        } else {
            frames
                .last_mut()
                .expect("frame present")
                .push(ParseNode::token(token));
        }
    }

    if frames.len() != 1 {
        return Err(defect(format!("{} span(s) left open", frames.len() - 1)));
    }
    let children = frames.pop().expect("root frame");
    if children.is_empty() {
        return Err(AlignError::EmptyReconstruction("parse"));
    }
    ParseTree::new(ParseNode::intent(source.root().label.clone(), children))
        .map_err(|e| defect(e.to_string()))
}

/// One candidate queued for alignment.
#[derive(Debug, Clone)]
pub struct AlignTask {
    pub id: String,
    pub english: Utterance,
    pub marked: MarkedUtterance,
    pub candidate: String,
    pub provenance: Provenance,
}

/// A candidate that failed reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignReject {
    pub id: String,
    pub candidate: String,
    pub error: String,
}

#[derive(Debug)]
pub struct AlignOutcome {
    pub aligned: Vec<AlignedRecord>,
    pub rejects: Vec<AlignReject>,
}

/// Aligns every task, routing per-record failures to the rejects list.
/// Output order follows input order.
pub fn align_corpus(tasks: &[AlignTask]) -> AlignOutcome {
    let mut aligned = Vec::new();
    let mut rejects = Vec::new();
    for task in tasks {
        let source = task
            .english
            .parse
            .as_ref()
            .expect("alignment tasks carry labeled utterances");
        match reconstruct_parse(&task.marked, source, &task.candidate) {
            Ok(cs_parse) => {
                let cs_text = cs_parse.utterance();
                aligned.push(AlignedRecord {
                    english: task.english.clone(),
                    cs_text,
                    cs_parse,
                    provenance: task.provenance,
                    span_count: task.marked.span_count(),
                });
            }
            Err(error) => rejects.push(AlignReject {
                id: task.id.clone(),
                candidate: task.candidate.clone(),
                error: error.to_string(),
            }),
        }
    }
    AlignOutcome { aligned, rejects }
}

/// Multiset of non-root (kind, label) pairs, for label-preservation checks.
pub fn label_multiset(tree: &ParseTree) -> BTreeMap<(NodeKind, String), usize> {
    let mut counts = BTreeMap::new();
    for span in tree.labeled_spans() {
        *counts.entry((span.kind, span.label)).or_insert(0) += 1;
    }
    counts
}
