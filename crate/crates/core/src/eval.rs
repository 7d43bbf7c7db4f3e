//! Exact-match evaluation of predicted parses against gold, with a
//! per-domain breakdown.
//!
//! Predictions and gold are keyed 1:1 by line order. Gold parses must be
//! valid; an unparseable prediction scores as a non-match and is counted
//! separately.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report;
use crate::top::{exact_match, ParseTree};

/// One evaluation row: `domain<TAB>utterance<TAB>semantic_parse`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRow {
    pub domain: String,
    pub text: String,
    pub parse: String,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read `{path}`: {detail}")]
    FileUnreadable { path: String, detail: String },
    #[error("line {line}: expected 3 tab-separated columns, found {found}")]
    ColumnCountMismatch { line: usize, found: usize },
    #[error("prediction/gold key mismatch: {detail}")]
    KeyMismatch { detail: String },
    #[error("gold parse on line {line} is invalid: {detail}")]
    UnparseableGold { line: usize, detail: String },
}

/// Reads evaluation rows without validating the parse column.
pub fn read_eval_rows(path: impl AsRef<Path>, header: bool) -> Result<Vec<EvalRow>, EvalError> {
    let path = path.as_ref();
    let unreadable = |detail: String| EvalError::FileUnreadable {
        path: path.display().to_string(),
        detail,
    };
    let file = File::open(path).map_err(|e| unreadable(e.to_string()))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| unreadable(e.to_string()))?;
        if header && idx == 0 {
            continue;
        }
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(EvalError::ColumnCountMismatch {
                line: idx + 1,
                found: cols.len(),
            });
        }
        rows.push(EvalRow {
            domain: cols[0].to_string(),
            text: cols[1].to_string(),
            parse: cols[2].to_string(),
        });
    }
    Ok(rows)
}

/// Exact-match report: overall, per-domain, and unparseable-prediction
/// accounting. Overall matched/total always equals the per-domain sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall_em: f64,
    pub per_domain_em: BTreeMap<String, f64>,
    /// domain -> (matched, total)
    pub counts: BTreeMap<String, (usize, usize)>,
    /// domain -> predictions that did not parse (scored as non-matches)
    pub unparseable: BTreeMap<String, usize>,
}

impl EvalReport {
    pub fn matched_total(&self) -> (usize, usize) {
        self.counts
            .values()
            .fold((0, 0), |(m, t), (dm, dt)| (m + dm, t + dt))
    }

    pub fn render_table(&self) -> String {
        let mut table =
            report::render_domain_ratios(self.overall_em, &self.per_domain_em, &self.counts);
        let bad: usize = self.unparseable.values().sum();
        if bad > 0 {
            table.push_str(&format!("unparseable predictions  {bad}\n"));
        }
        table
    }
}

/// Scores predictions against gold by canonical-parse exact match.
pub fn evaluate(pred: &[EvalRow], gold: &[EvalRow]) -> Result<EvalReport, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::KeyMismatch {
            detail: format!("{} prediction rows vs {} gold rows", pred.len(), gold.len()),
        });
    }
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut unparseable: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, (p, g)) in pred.iter().zip(gold).enumerate() {
        let line = idx + 1;
        if p.domain != g.domain {
            return Err(EvalError::KeyMismatch {
                detail: format!(
                    "line {line}: prediction domain `{}` vs gold domain `{}`",
                    p.domain, g.domain
                ),
            });
        }
        let gold_tree = ParseTree::parse(&g.parse).map_err(|e| EvalError::UnparseableGold {
            line,
            detail: e.to_string(),
        })?;
        let entry = counts.entry(g.domain.clone()).or_insert((0, 0));
        entry.1 += 1;
        match ParseTree::parse(&p.parse) {
            Ok(pred_tree) => {
                if exact_match(&pred_tree, &gold_tree) {
                    entry.0 += 1;
                }
            }
            Err(_) => {
                *unparseable.entry(g.domain.clone()).or_insert(0) += 1;
            }
        }
    }

    let per_domain_em: BTreeMap<String, f64> = counts
        .iter()
        .map(|(domain, (matched, total))| (domain.clone(), *matched as f64 / *total as f64))
        .collect();
    let (matched, total) = counts
        .values()
        .fold((0usize, 0usize), |(m, t), (dm, dt)| (m + dm, t + dt));
    let overall_em = if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    };
    Ok(EvalReport {
        overall_em,
        per_domain_em,
        counts,
        unparseable,
    })
}
