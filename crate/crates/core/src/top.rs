//! Hierarchical intent/slot parse trees in bracketed TOP syntax.
//!
//! A tree is written as whitespace-separated tokens where `[IN:LABEL` opens
//! an intent, `[SL:LABEL` opens a slot, `]` closes the innermost node, and
//! every other token is a word of the utterance:
//!
//! ```text
//! [IN:CREATE_ALARM Set alarm [SL:DATE_TIME for 4:30 am on Tuesday ] ]
//! ```
//!
//! Well-formedness: the root is an intent, intents contain only tokens and
//! slots, slots contain only tokens and intents, and every node covers at
//! least one token. Labels are normalized to upper case.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether an interior node names an intent or a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Intent,
    Slot,
}

impl NodeKind {
    fn prefix(self) -> &'static str {
        match self {
            NodeKind::Intent => "IN:",
            NodeKind::Slot => "SL:",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Intent => write!(f, "intent"),
            NodeKind::Slot => write!(f, "slot"),
        }
    }
}

/// One node of a parse tree: an interior intent/slot or a single token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseNode {
    Interior(Interior),
    Token(String),
}

/// An intent or slot node with its ordered children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interior {
    pub kind: NodeKind,
    pub label: String,
    pub children: Vec<ParseNode>,
}

impl ParseNode {
    pub fn intent(label: impl Into<String>, children: Vec<ParseNode>) -> Self {
        ParseNode::Interior(Interior {
            kind: NodeKind::Intent,
            label: label.into(),
            children,
        })
    }

    pub fn slot(label: impl Into<String>, children: Vec<ParseNode>) -> Self {
        ParseNode::Interior(Interior {
            kind: NodeKind::Slot,
            label: label.into(),
            children,
        })
    }

    pub fn token(text: impl Into<String>) -> Self {
        ParseNode::Token(text.into())
    }

    fn write_to(&self, out: &mut String) {
        match self {
            ParseNode::Token(text) => out.push_str(text),
            ParseNode::Interior(node) => {
                out.push('[');
                out.push_str(node.kind.prefix());
                out.push_str(&node.label);
                for child in &node.children {
                    out.push(' ');
                    child.write_to(out);
                }
                out.push_str(" ]");
            }
        }
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ParseNode::Token(text) => out.push(text),
            ParseNode::Interior(node) => {
                for child in &node.children {
                    child.collect_tokens(out);
                }
            }
        }
    }

    fn validate(&self, parent: Option<NodeKind>) -> Result<(), TopError> {
        match self {
            ParseNode::Token(text) => {
                if !is_valid_token(text) {
                    return Err(TopError::InvalidToken {
                        token: text.clone(),
                    });
                }
                Ok(())
            }
            ParseNode::Interior(node) => {
                if node.label.is_empty() {
                    return Err(TopError::EmptyLabel { kind: node.kind });
                }
                if node.children.is_empty() {
                    return Err(TopError::EmptyNode {
                        label: node.label.clone(),
                    });
                }
                match (parent, node.kind) {
                    (Some(NodeKind::Intent), NodeKind::Intent) => {
                        return Err(TopError::IntentInsideIntent {
                            inner: node.label.clone(),
                        })
                    }
                    (Some(NodeKind::Slot), NodeKind::Slot) => {
                        return Err(TopError::SlotInsideSlot {
                            inner: node.label.clone(),
                        })
                    }
                    _ => {}
                }
                for child in &node.children {
                    child.validate(Some(node.kind))?;
                }
                Ok(())
            }
        }
    }
}

/// Token text that can survive a serialize/parse round trip: non-empty,
/// no whitespace, and not shaped like a bracket or close-span token.
pub fn is_valid_token(text: &str) -> bool {
    !text.is_empty()
        && !text.chars().any(char::is_whitespace)
        && !text.starts_with('[')
        && text != "]"
        && !text.starts_with("]_")
}

/// A validated parse tree rooted at an intent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    root: Interior,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopError {
    #[error("unbalanced brackets: {0}")]
    UnbalancedBrackets(String),
    #[error("token `{token}` opens a node without an IN:/SL: prefix")]
    UnknownNodePrefix { token: String },
    #[error("node `{label}` has no children")]
    EmptyNode { label: String },
    #[error("root node must be an intent")]
    RootNotIntent,
    #[error("slot `{inner}` nested directly inside a slot")]
    SlotInsideSlot { inner: String },
    #[error("intent `{inner}` nested directly inside an intent")]
    IntentInsideIntent { inner: String },
    #[error("{kind} node has an empty label")]
    EmptyLabel { kind: NodeKind },
    #[error("token `{token}` is reserved bracket syntax")]
    InvalidToken { token: String },
}

impl ParseTree {
    /// Wraps a root node, checking every tree invariant.
    pub fn new(root: ParseNode) -> Result<Self, TopError> {
        let root = match root {
            ParseNode::Interior(node) if node.kind == NodeKind::Intent => node,
            _ => return Err(TopError::RootNotIntent),
        };
        let wrapped = ParseNode::Interior(root);
        wrapped.validate(None)?;
        match wrapped {
            ParseNode::Interior(node) => Ok(ParseTree { root: node }),
            ParseNode::Token(_) => unreachable!(),
        }
    }

    /// Parses the bracketed form. Labels are upper-cased; tokens are kept
    /// verbatim. The input is whitespace-tokenized, so any run of spaces
    /// collapses in the canonical serialization.
    pub fn parse(text: &str) -> Result<Self, TopError> {
        parse_top(text)
    }

    pub fn root(&self) -> &Interior {
        &self.root
    }

    pub fn root_node(&self) -> ParseNode {
        ParseNode::Interior(self.root.clone())
    }

    /// Canonical single-space bracketed form.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        ParseNode::Interior(self.root.clone()).write_to(&mut out);
        out
    }

    /// In-order token sequence of the covered utterance.
    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for child in &self.root.children {
            child.collect_tokens(&mut out);
        }
        out
    }

    /// Utterance text reassembled from the token sequence.
    pub fn utterance(&self) -> String {
        self.tokens().join(" ")
    }

    /// All non-root intent/slot nodes in pre-order, each with its path of
    /// child indices from the root and the half-open range of token
    /// offsets it covers in the flat utterance.
    pub fn labeled_spans(&self) -> Vec<NodeSpan> {
        let mut spans = Vec::new();
        let mut offset = 0usize;
        let mut path = Vec::new();
        for (idx, child) in self.root.children.iter().enumerate() {
            path.push(idx);
            collect_spans(child, &mut path, &mut offset, &mut spans);
            path.pop();
        }
        spans
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl std::str::FromStr for ParseTree {
    type Err = TopError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParseTree::parse(s)
    }
}

/// A non-root intent/slot node located within its tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpan {
    /// Child-index path from the root to this node.
    pub path: Vec<usize>,
    pub kind: NodeKind,
    pub label: String,
    /// Covered token offsets in the flat utterance, half-open.
    pub start: usize,
    pub end: usize,
}

fn collect_spans(
    node: &ParseNode,
    path: &mut Vec<usize>,
    offset: &mut usize,
    spans: &mut Vec<NodeSpan>,
) {
    match node {
        ParseNode::Token(_) => *offset += 1,
        ParseNode::Interior(interior) => {
            let start = *offset;
            let slot = spans.len();
            spans.push(NodeSpan {
                path: path.clone(),
                kind: interior.kind,
                label: interior.label.clone(),
                start,
                end: start,
            });
            for (idx, child) in interior.children.iter().enumerate() {
                path.push(idx);
                collect_spans(child, path, offset, spans);
                path.pop();
            }
            spans[slot].end = *offset;
        }
    }
}

/// True iff the canonical serializations are byte-identical.
pub fn exact_match(a: &ParseTree, b: &ParseTree) -> bool {
    a.serialize() == b.serialize()
}

fn parse_top(text: &str) -> Result<ParseTree, TopError> {
    // Stack of open nodes; each frame holds (kind, label, children so far).
    let mut stack: Vec<Interior> = Vec::new();
    let mut finished: Option<Interior> = None;

    for token in text.split_whitespace() {
        if finished.is_some() {
            return Err(TopError::UnbalancedBrackets(format!(
                "content after the root node closed, near `{token}`"
            )));
        }
        if let Some(rest) = token.strip_prefix('[') {
            let (kind, label) = if let Some(label) = rest.strip_prefix("IN:") {
                (NodeKind::Intent, label)
            } else if let Some(label) = rest.strip_prefix("SL:") {
                (NodeKind::Slot, label)
            } else {
                return Err(TopError::UnknownNodePrefix {
                    token: token.to_string(),
                });
            };
            if label.is_empty() {
                return Err(TopError::UnknownNodePrefix {
                    token: token.to_string(),
                });
            }
            match (stack.last().map(|n| n.kind), kind) {
                (None, NodeKind::Slot) => return Err(TopError::RootNotIntent),
                (Some(NodeKind::Intent), NodeKind::Intent) => {
                    return Err(TopError::IntentInsideIntent {
                        inner: label.to_uppercase(),
                    })
                }
                (Some(NodeKind::Slot), NodeKind::Slot) => {
                    return Err(TopError::SlotInsideSlot {
                        inner: label.to_uppercase(),
                    })
                }
                _ => {}
            }
            stack.push(Interior {
                kind,
                label: label.to_uppercase(),
                children: Vec::new(),
            });
        } else if token == "]" {
            let node = stack.pop().ok_or_else(|| {
                TopError::UnbalancedBrackets("closing bracket without an open node".into())
            })?;
            if node.children.is_empty() {
                return Err(TopError::EmptyNode { label: node.label });
            }
            match stack.last_mut() {
                Some(parent) => parent.children.push(ParseNode::Interior(node)),
                None => finished = Some(node),
            }
        } else {
            match stack.last_mut() {
                Some(parent) => parent.children.push(ParseNode::Token(token.to_string())),
                None => return Err(TopError::RootNotIntent),
            }
        }
    }

    if !stack.is_empty() {
        return Err(TopError::UnbalancedBrackets(format!(
            "{} node(s) left open at end of input",
            stack.len()
        )));
    }
    match finished {
        Some(root) => ParseTree::new(ParseNode::Interior(root)),
        None => Err(TopError::RootNotIntent),
    }
}
