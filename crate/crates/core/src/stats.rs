//! Lexicon-based corpus statistics: per-language vocabulary sizes, average
//! token counts, and average code-switch points per utterance.
//!
//! Token language identification is deliberately pluggable-simple: a token
//! is looked up case-insensitively in two word lists. Tokens in neither
//! list, or made purely of digits and punctuation, are tagged `Other` and
//! excluded from both vocabulary and switch counting.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report;

/// Language tag of one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LangTag {
    LangA,
    LangB,
    Other,
}

/// Two word lists with a priority for tokens present in both.
#[derive(Debug, Clone)]
pub struct LexiconPair {
    pub name_a: String,
    pub name_b: String,
    set_a: BTreeSet<String>,
    set_b: BTreeSet<String>,
    /// Tag applied when a token is in both lexicons.
    pub priority: LangTag,
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("missing lexicon `{path}`: {detail}")]
    MissingLexicon { path: String, detail: String },
    #[error("corpus is empty")]
    EmptyCorpus,
}

impl LexiconPair {
    pub fn new(
        name_a: impl Into<String>,
        words_a: impl IntoIterator<Item = impl AsRef<str>>,
        name_b: impl Into<String>,
        words_b: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Self {
        let fold = |words: &mut dyn Iterator<Item = String>| -> BTreeSet<String> {
            words.map(|w| w.to_lowercase()).collect()
        };
        LexiconPair {
            name_a: name_a.into(),
            name_b: name_b.into(),
            set_a: fold(&mut words_a.into_iter().map(|w| w.as_ref().to_string())),
            set_b: fold(&mut words_b.into_iter().map(|w| w.as_ref().to_string())),
            priority: LangTag::LangA,
        }
    }

    /// Loads both lexicons from one-word-per-line UTF-8 files.
    pub fn load(
        name_a: impl Into<String>,
        path_a: impl AsRef<Path>,
        name_b: impl Into<String>,
        path_b: impl AsRef<Path>,
    ) -> Result<Self, StatsError> {
        let read = |path: &Path| -> Result<Vec<String>, StatsError> {
            let file = File::open(path).map_err(|e| StatsError::MissingLexicon {
                path: path.display().to_string(),
                detail: e.to_string(),
            })?;
            let mut words = Vec::new();
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| StatsError::MissingLexicon {
                    path: path.display().to_string(),
                    detail: e.to_string(),
                })?;
                let word = line.trim();
                if !word.is_empty() {
                    words.push(word.to_string());
                }
            }
            Ok(words)
        };
        let words_a = read(path_a.as_ref())?;
        let words_b = read(path_b.as_ref())?;
        Ok(LexiconPair::new(name_a, words_a, name_b, words_b))
    }

    fn tag(&self, token: &str) -> LangTag {
        if !token.chars().any(char::is_alphabetic) {
            return LangTag::Other;
        }
        let folded = token.to_lowercase();
        match (self.set_a.contains(&folded), self.set_b.contains(&folded)) {
            (true, true) => self.priority,
            (true, false) => LangTag::LangA,
            (false, true) => LangTag::LangB,
            (false, false) => LangTag::Other,
        }
    }
}

/// Per-token language tags for one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageTagging {
    pub tokens: Vec<(String, LangTag)>,
}

/// Tags each whitespace token of `text` against the lexicon pair.
pub fn tag_tokens(text: &str, lexicons: &LexiconPair) -> LanguageTagging {
    LanguageTagging {
        tokens: text
            .split_whitespace()
            .map(|token| (token.to_string(), lexicons.tag(token)))
            .collect(),
    }
}

/// Number of adjacent differing tags after dropping `Other` tokens.
pub fn cs_points(tagging: &LanguageTagging) -> usize {
    let tags: Vec<LangTag> = tagging
        .tokens
        .iter()
        .map(|(_, tag)| *tag)
        .filter(|tag| *tag != LangTag::Other)
        .collect();
    tags.windows(2).filter(|pair| pair[0] != pair[1]).count()
}

/// Corpus-level statistics over tagged utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub lang_a: String,
    pub lang_b: String,
    pub vocab_a: usize,
    pub vocab_b: usize,
    pub total_utterances: usize,
    pub avg_tokens_a: f64,
    pub avg_tokens_b: f64,
    pub avg_cs_points: f64,
}

impl CorpusStats {
    /// Fixed-layout text table.
    pub fn render_table(&self) -> String {
        report::render_kv_table(&[
            (
                format!("{} vocabulary size", self.lang_a),
                self.vocab_a.to_string(),
            ),
            (
                format!("{} vocabulary size", self.lang_b),
                self.vocab_b.to_string(),
            ),
            ("Total utterances".to_string(), self.total_utterances.to_string()),
            (
                format!("Avg. # of {} tokens per utterance", self.lang_b),
                format!("{:.2}", self.avg_tokens_b),
            ),
            (
                format!("Avg. # of {} tokens per utterance", self.lang_a),
                format!("{:.2}", self.avg_tokens_a),
            ),
            (
                "Avg. # of CS points per utterance".to_string(),
                format!("{:.2}", self.avg_cs_points),
            ),
        ])
    }
}

/// Aggregates statistics over a corpus of plain code-switched strings.
pub fn corpus_stats<'a>(
    corpus: impl IntoIterator<Item = &'a str>,
    lexicons: &LexiconPair,
) -> Result<CorpusStats, StatsError> {
    let mut vocab_a = BTreeSet::new();
    let mut vocab_b = BTreeSet::new();
    let mut total_utterances = 0usize;
    let mut tokens_a = 0usize;
    let mut tokens_b = 0usize;
    let mut switch_points = 0usize;

    for text in corpus {
        total_utterances += 1;
        let tagging = tag_tokens(text, lexicons);
        switch_points += cs_points(&tagging);
        for (token, tag) in &tagging.tokens {
            match tag {
                LangTag::LangA => {
                    tokens_a += 1;
                    vocab_a.insert(token.to_lowercase());
                }
                LangTag::LangB => {
                    tokens_b += 1;
                    vocab_b.insert(token.to_lowercase());
                }
                LangTag::Other => {}
            }
        }
    }
    if total_utterances == 0 {
        return Err(StatsError::EmptyCorpus);
    }
    let n = total_utterances as f64;
    Ok(CorpusStats {
        lang_a: lexicons.name_a.clone(),
        lang_b: lexicons.name_b.clone(),
        vocab_a: vocab_a.len(),
        vocab_b: vocab_b.len(),
        total_utterances,
        avg_tokens_a: tokens_a as f64 / n,
        avg_tokens_b: tokens_b as f64 / n,
        avg_cs_points: switch_points as f64 / n,
    })
}
