//! Random corpus generation for tests and scale fixtures.
//!
//! Trees are built directly from the node constructors (never through the
//! parser), so round-trip and marking properties are checked against an
//! independent construction path.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Split, Utterance};
use crate::top::{ParseNode, ParseTree};

/// The eight corpus domains.
pub const DOMAINS: [&str; 8] = [
    "alarm",
    "event",
    "messaging",
    "music",
    "navigation",
    "reminder",
    "timer",
    "weather",
];

const INTENT_LABELS: [&str; 8] = [
    "CREATE_ALARM",
    "GET_WEATHER",
    "PLAY_MUSIC",
    "CREATE_REMINDER",
    "GET_DIRECTIONS",
    "SEND_MESSAGE",
    "CREATE_TIMER",
    "GET_EVENT",
];

const SLOT_LABELS: [&str; 8] = [
    "DATE_TIME",
    "LOCATION",
    "ALARM_NAME",
    "MUSIC_TRACK",
    "RECIPIENT",
    "TODO",
    "DURATION",
    "ORDINAL",
];

const TOKENS: [&str; 24] = [
    "set", "alarm", "for", "morning", "nine", "am", "play", "song", "on", "repeat", "remind",
    "me", "about", "the", "meeting", "today", "tomorrow", "weather", "in", "paris", "next",
    "week", "at", "five",
];

const CS_TOKENS: [&str; 16] = [
    "karo", "mausam", "kaisa", "hai", "muje", "bajao", "yaad", "dilaayen", "kal", "subah",
    "baje", "ke", "liye", "ka", "agle", "hafte",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Maximum nesting depth of interior nodes below the root.
    pub max_depth: usize,
    /// Maximum children per interior node.
    pub max_children: usize,
    /// Force at least one non-root node into every tree.
    pub require_span: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_depth: 3,
            max_children: 5,
            require_span: true,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random well-formed parse tree.
pub fn random_tree(rng: &mut ChaCha8Rng, config: &SynthConfig) -> ParseTree {
    let children = random_children(rng, config, true, config.max_depth);
    let mut children = children;
    if config.require_span
        && !children
            .iter()
            .any(|c| matches!(c, ParseNode::Interior(_)))
    {
        children.push(random_interior(rng, config, true, 1));
    }
    let label = *INTENT_LABELS.choose(rng).expect("nonempty pool");
    ParseTree::new(ParseNode::intent(label, children)).expect("generated tree is valid")
}

fn random_children(
    rng: &mut ChaCha8Rng,
    config: &SynthConfig,
    inside_intent: bool,
    depth_left: usize,
) -> Vec<ParseNode> {
    let count = rng.random_range(1..=config.max_children.max(1));
    (0..count)
        .map(|_| {
            if depth_left > 0 && rng.random_bool(0.3) {
                random_interior(rng, config, inside_intent, depth_left)
            } else {
                ParseNode::token(*TOKENS.choose(rng).expect("nonempty pool"))
            }
        })
        .collect()
}

fn random_interior(
    rng: &mut ChaCha8Rng,
    config: &SynthConfig,
    inside_intent: bool,
    depth_left: usize,
) -> ParseNode {
    let children = {
        let mut children = random_children(rng, config, !inside_intent, depth_left - 1);
        if !children.iter().any(|c| matches!(c, ParseNode::Token(_))) {
            children.push(ParseNode::token(*TOKENS.choose(rng).expect("pool")));
        }
        children
    };
    if inside_intent {
        let label = *SLOT_LABELS.choose(rng).expect("nonempty pool");
        ParseNode::slot(label, children)
    } else {
        let label = *INTENT_LABELS.choose(rng).expect("nonempty pool");
        ParseNode::intent(label, children)
    }
}

/// A random labeled utterance over the standard domain pool.
pub fn random_utterance(rng: &mut ChaCha8Rng, config: &SynthConfig) -> Utterance {
    let tree = random_tree(rng, config);
    let domain = *DOMAINS.choose(rng).expect("nonempty pool");
    Utterance::labeled(domain, Split::Train, tree.utterance(), tree)
        .expect("generated utterance is aligned")
}

/// A token substitution table mapping a random subset of the English pool
/// to code-switch tokens; used with the faithful mock backend.
pub fn random_substitution_table(
    rng: &mut ChaCha8Rng,
) -> std::collections::BTreeMap<String, String> {
    let mut table = std::collections::BTreeMap::new();
    for token in TOKENS {
        if rng.random_bool(0.6) {
            let replacement = *CS_TOKENS.choose(rng).expect("nonempty pool");
            table.insert(token.to_string(), replacement.to_string());
        }
    }
    table
}

/// Streams a random corpus TSV of `rows` records to `path`.
pub fn write_random_corpus(
    path: impl AsRef<Path>,
    rows: usize,
    seed: u64,
    config: &SynthConfig,
) -> io::Result<()> {
    let mut rng = rng(seed);
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    for _ in 0..rows {
        let tree = random_tree(&mut rng, config);
        let domain = *DOMAINS.choose(&mut rng).expect("nonempty pool");
        writeln!(out, "{domain}\t{}\t{}", tree.utterance(), tree.serialize())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_trees_are_valid_and_varied() {
        let config = SynthConfig::default();
        let mut rng = rng(1);
        let mut serializations = std::collections::HashSet::new();
        for _ in 0..50 {
            let tree = random_tree(&mut rng, &config);
            assert!(!tree.tokens().is_empty());
            assert!(!tree.labeled_spans().is_empty());
            serializations.insert(tree.serialize());
        }
        assert!(serializations.len() > 10);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let config = SynthConfig::default();
        let a = random_tree(&mut rng(9), &config).serialize();
        let b = random_tree(&mut rng(9), &config).serialize();
        assert_eq!(a, b);
    }

    #[test]
    fn corpus_file_has_requested_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.tsv");
        write_random_corpus(&path, 37, 3, &SynthConfig::default()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 37);
    }
}
