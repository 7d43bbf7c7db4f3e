//! Syntactic validation of generated marked text.
//!
//! Generated code-switched utterances are kept only when their span
//! structure can be aligned back to the English parse. Checks run in a
//! fixed order:
//!
//! 1. `UnbalancedBrackets` — open/close tokens violate stack discipline.
//! 2. `MalformedSpanId` — a closing token's span-ID cannot be extracted.
//!    (Either structural failure aborts the remaining checks.)
//! 3. `UnequalSpanCount` — some span-ID shared by both sides occurs a
//!    different number of times, or exactly one side has no spans at all.
//! 4. `MismatchedSpanIds` — the sets of span-IDs differ.
//! 5. `MismatchedContainment` — the parent/child relation among span-IDs
//!    differs from the English side. Only meaningful for nested spans, so
//!    it can be disabled to reproduce flat four-rule filtering; it is also
//!    skipped when rules 3 or 4 already fired, since containment is not
//!    well defined across mismatched ID sets.
//!
//! A rejection is attributed to the first violated rule in this order;
//! the full verdict keeps every violation that applied.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::marker::MarkedUtterance;

/// The filter rules, in check order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum FilterRule {
    UnbalancedBrackets,
    MalformedSpanId,
    UnequalSpanCount,
    MismatchedSpanIds,
    MismatchedContainment,
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FilterRule::UnbalancedBrackets => "UnbalancedBrackets",
            FilterRule::MalformedSpanId => "MalformedSpanId",
            FilterRule::UnequalSpanCount => "UnequalSpanCount",
            FilterRule::MismatchedSpanIds => "MismatchedSpanIds",
            FilterRule::MismatchedContainment => "MismatchedContainment",
        };
        f.write_str(name)
    }
}

/// Which rules are active.
#[derive(Debug, Clone, Copy)]
pub struct RuleConfig {
    /// Check parent/child relations among span-IDs (rule 5). Disable for
    /// the flat four-rule behavior; on flat data the rule never fires
    /// either way.
    pub containment: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig { containment: true }
    }
}

/// One extracted span of a marked utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub id: u32,
    /// Number of enclosing spans (top level = 0).
    pub depth: usize,
    /// ID of the innermost enclosing span, if any.
    pub parent: Option<u32>,
    /// Half-open plain-token offsets of the interior.
    pub start: usize,
    pub end: usize,
}

/// The span structure of one marked utterance, spans listed in order of
/// their opening bracket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanSet {
    pub spans: Vec<Span>,
    pub plain_tokens: Vec<String>,
}

impl SpanSet {
    pub fn ids(&self) -> Vec<u32> {
        self.spans.iter().map(|s| s.id).collect()
    }

    fn id_multiset(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for span in &self.spans {
            *counts.entry(span.id).or_insert(0) += 1;
        }
        counts
    }

    fn parent_map(&self) -> BTreeMap<u32, Option<u32>> {
        self.spans.iter().map(|s| (s.id, s.parent)).collect()
    }
}

/// Extracts the span structure of marked text. Total: structural failures
/// are reported in-band as the violated rules (`UnbalancedBrackets`,
/// `MalformedSpanId`), collected over the whole token stream.
pub fn extract_spans(text: &str) -> Result<SpanSet, Vec<FilterRule>> {
    struct Pending {
        depth: usize,
        parent_slot: Option<usize>,
        start: usize,
    }

    let mut spans: Vec<(Pending, Option<u32>, usize)> = Vec::new(); // (open info, id, end)
    let mut stack: Vec<usize> = Vec::new();
    let mut plain_tokens: Vec<String> = Vec::new();
    let mut unbalanced = false;
    let mut malformed = false;

    for token in text.split_whitespace() {
        if token == "[" {
            let pending = Pending {
                depth: stack.len(),
                parent_slot: stack.last().copied(),
                start: plain_tokens.len(),
            };
            stack.push(spans.len());
            spans.push((pending, None, 0));
        } else if token.starts_with(']') {
            // Close attempt; the well-formed shape is `]_<digits>`.
            let id = token
                .strip_prefix("]_")
                .and_then(|digits| digits.parse::<u32>().ok());
            if id.is_none() {
                malformed = true;
            }
            match stack.pop() {
                Some(slot) => {
                    spans[slot].1 = id;
                    spans[slot].2 = plain_tokens.len();
                }
                None => unbalanced = true,
            }
        } else {
            plain_tokens.push(token.to_string());
        }
    }
    if !stack.is_empty() {
        unbalanced = true;
    }

    if unbalanced || malformed {
        let mut rules = Vec::new();
        if unbalanced {
            rules.push(FilterRule::UnbalancedBrackets);
        }
        if malformed {
            rules.push(FilterRule::MalformedSpanId);
        }
        return Err(rules);
    }

    let ids: Vec<u32> = spans
        .iter()
        .map(|(_, id, _)| id.expect("all closes well-formed"))
        .collect();
    let spans = spans
        .into_iter()
        .enumerate()
        .map(|(i, (pending, _, end))| Span {
            id: ids[i],
            depth: pending.depth,
            parent: pending.parent_slot.map(|slot| ids[slot]),
            start: pending.start,
            end,
        })
        .collect();
    Ok(SpanSet {
        spans,
        plain_tokens,
    })
}

/// Pass/fail with every violated rule, in check order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub pass: bool,
    pub violations: Vec<FilterRule>,
}

impl ValidationVerdict {
    fn from_violations(violations: Vec<FilterRule>) -> Self {
        ValidationVerdict {
            pass: violations.is_empty(),
            violations,
        }
    }

    /// The rule a rejection is attributed to: first in check order.
    pub fn primary(&self) -> Option<FilterRule> {
        self.violations.first().copied()
    }
}

/// Validates a generated candidate against its English marked utterance.
pub fn validate_pair(english: &MarkedUtterance, cs: &str, rules: &RuleConfig) -> ValidationVerdict {
    let english_spans = extract_spans(&english.text())
        .expect("marker output is structurally valid by construction");
    let cs_spans = match extract_spans(cs) {
        Ok(spans) => spans,
        Err(violations) => return ValidationVerdict::from_violations(violations),
    };

    let mut violations = Vec::new();
    let en_counts = english_spans.id_multiset();
    let cs_counts = cs_spans.id_multiset();

    let common_multiplicity_differs = en_counts
        .iter()
        .any(|(id, &n)| cs_counts.get(id).is_some_and(|&m| m != n));
    let one_side_empty = (en_counts.is_empty()) != (cs_counts.is_empty());
    if common_multiplicity_differs || one_side_empty {
        violations.push(FilterRule::UnequalSpanCount);
    }

    let en_ids: BTreeSet<u32> = en_counts.keys().copied().collect();
    let cs_ids: BTreeSet<u32> = cs_counts.keys().copied().collect();
    if en_ids != cs_ids {
        violations.push(FilterRule::MismatchedSpanIds);
    }

    if rules.containment
        && violations.is_empty()
        && english_spans.parent_map() != cs_spans.parent_map()
    {
        violations.push(FilterRule::MismatchedContainment);
    }

    ValidationVerdict::from_violations(violations)
}

/// Accept/reject accounting for one filtered corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub total: usize,
    pub accepted: usize,
    pub rejected_by_rule: BTreeMap<FilterRule, usize>,
    /// accepted / total; 0 when the corpus is empty.
    pub throughput: f64,
}

impl ThroughputReport {
    pub fn rejected_total(&self) -> usize {
        self.rejected_by_rule.values().sum()
    }
}

/// A rejected record: input index plus the full verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRecord {
    pub index: usize,
    pub verdict: ValidationVerdict,
}

/// Exhaustive partition of a candidate corpus into accepted and rejected
/// records, with throughput accounting. Indices refer to the input slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub accepted: Vec<usize>,
    pub rejected: Vec<RejectedRecord>,
    pub report: ThroughputReport,
}

/// Validates `(english, candidate)` pairs record-independently.
pub fn filter_corpus(pairs: &[(&MarkedUtterance, &str)], rules: &RuleConfig) -> FilterOutcome {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let mut rejected_by_rule: BTreeMap<FilterRule, usize> = BTreeMap::new();
    for (index, (english, cs)) in pairs.iter().enumerate() {
        let verdict = validate_pair(english, cs, rules);
        if verdict.pass {
            accepted.push(index);
        } else {
            let primary = verdict.primary().expect("failed verdict has violations");
            *rejected_by_rule.entry(primary).or_insert(0) += 1;
            rejected.push(RejectedRecord { index, verdict });
        }
    }
    let total = pairs.len();
    let throughput = if total == 0 {
        0.0
    } else {
        accepted.len() as f64 / total as f64
    };
    FilterOutcome {
        report: ThroughputReport {
            total,
            accepted: accepted.len(),
            rejected_by_rule,
            throughput,
        },
        accepted,
        rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marker::mark_tree;
    use crate::top::ParseTree;

    fn marked(parse: &str) -> MarkedUtterance {
        mark_tree(&ParseTree::parse(parse).unwrap())
    }

    #[test]
    fn extracts_single_span() {
        let set = extract_spans("a [ b ]_1 c").unwrap();
        assert_eq!(set.plain_tokens, vec!["a", "b", "c"]);
        assert_eq!(set.spans.len(), 1);
        assert_eq!(set.spans[0].id, 1);
        assert_eq!((set.spans[0].start, set.spans[0].end), (1, 2));
        assert_eq!(set.spans[0].parent, None);
        assert_eq!(set.spans[0].depth, 0);
    }

    #[test]
    fn extracts_nested_spans_in_opening_order() {
        let set = extract_spans("x [ y [ z ]_2 ]_1 w").unwrap();
        assert_eq!(set.ids(), vec![1, 2]);
        assert_eq!(set.spans[0].parent, None);
        assert_eq!(set.spans[1].parent, Some(1));
        assert_eq!(set.spans[1].depth, 1);
        assert_eq!((set.spans[0].start, set.spans[0].end), (1, 3));
        assert_eq!((set.spans[1].start, set.spans[1].end), (2, 3));
    }

    #[test]
    fn malformed_span_id_fixture() {
        let err = extract_spans("[ spotify ]_3 par [ song ]_1 [ Heart is on fire ]_two ko bajao")
            .unwrap_err();
        assert_eq!(err, vec![FilterRule::MalformedSpanId]);
    }

    #[test]
    fn unbalanced_brackets_fixture() {
        let err = extract_spans("[ banking ]_1 reminders ko [ [ ek bar har week ]_3 [ dohrayen ]_4")
            .unwrap_err();
        assert_eq!(err, vec![FilterRule::UnbalancedBrackets]);
    }

    #[test]
    fn close_without_open_is_unbalanced() {
        let err = extract_spans("a ]_1 [ b ]_2").unwrap_err();
        assert!(err.contains(&FilterRule::UnbalancedBrackets));
    }

    #[test]
    fn bare_close_bracket_is_malformed() {
        let err = extract_spans("[ a ]").unwrap_err();
        assert_eq!(err, vec![FilterRule::MalformedSpanId]);
    }

    #[test]
    fn both_structural_rules_can_fire_together() {
        let err = extract_spans("[ a ]_x [ b").unwrap_err();
        assert_eq!(
            err,
            vec![FilterRule::UnbalancedBrackets, FilterRule::MalformedSpanId]
        );
    }

    fn row1_english() -> MarkedUtterance {
        marked(
            "[IN:X [SL:A 9 pm ] [SL:B appointment for photos ] and remind [SL:C me ] \
             [SL:D an hour before ] ]",
        )
    }

    #[test]
    fn duplicated_span_id_is_unequal_span_count() {
        let english = row1_english();
        assert_eq!(
            english.text(),
            "[ 9 pm ]_1 [ appointment for photos ]_2 and remind [ me ]_3 [ an hour before ]_4"
        );
        let cs = "[ mujhe ]_3 [ 9 pm ]_1 ko [ photos ke liye appointment ]_2 hai aur \
                  [ mujhe ]_3 [ ek ghante pehle ]_4 yaad dilaayen";
        let verdict = validate_pair(&english, cs, &RuleConfig::default());
        assert_eq!(verdict.violations, vec![FilterRule::UnequalSpanCount]);
    }

    #[test]
    fn novel_span_id_is_mismatched_span_ids() {
        let english = marked(
            "[IN:X Remind [SL:A me ] to [SL:B email ] [SL:C Michelle ] [SL:D on Tuesday ] \
             [SL:E about ] [SL:F the recital ] ]",
        );
        let cs = "[ Mujhe ]_1 [ Tuesday ko ]_7 [ Michelle ]_3 ko [ email ]_2 \
                  karne ke liye yaad dilaayen";
        let verdict = validate_pair(&english, cs, &RuleConfig::default());
        assert_eq!(verdict.violations, vec![FilterRule::MismatchedSpanIds]);
    }

    #[test]
    fn self_pair_passes() {
        let english = row1_english();
        let verdict = validate_pair(&english, &english.text(), &RuleConfig::default());
        assert!(verdict.pass);
        assert!(verdict.violations.is_empty());
    }

    #[test]
    fn empty_candidate_fails_span_count_when_english_has_spans() {
        let english = row1_english();
        let verdict = validate_pair(&english, "", &RuleConfig::default());
        assert!(!verdict.pass);
        assert_eq!(verdict.primary(), Some(FilterRule::UnequalSpanCount));
        assert!(verdict.violations.contains(&FilterRule::MismatchedSpanIds));
    }

    #[test]
    fn empty_candidate_passes_when_english_has_no_spans() {
        let english = marked("[IN:A hello there ]");
        let verdict = validate_pair(&english, "", &RuleConfig::default());
        assert!(verdict.pass);
    }

    #[test]
    fn containment_mismatch_detected_and_flag_controlled() {
        let english = marked("[IN:A [SL:B a [IN:C b ] ] ]");
        assert_eq!(english.text(), "[ a [ b ]_2 ]_1");
        let cs = "[ x ]_1 [ y ]_2";
        let strict = validate_pair(&english, cs, &RuleConfig::default());
        assert_eq!(strict.violations, vec![FilterRule::MismatchedContainment]);
        let relaxed = validate_pair(&english, cs, &RuleConfig { containment: false });
        assert!(relaxed.pass);
    }

    #[test]
    fn filter_corpus_partitions_and_counts() {
        let english = row1_english();
        let text = english.text();
        let corrupted = text.replace("]_2", "]_two");
        let mut pairs: Vec<(&MarkedUtterance, &str)> = Vec::new();
        for _ in 0..82 {
            pairs.push((&english, text.as_str()));
        }
        for _ in 0..18 {
            pairs.push((&english, corrupted.as_str()));
        }
        let outcome = filter_corpus(&pairs, &RuleConfig::default());
        assert_eq!(outcome.report.total, 100);
        assert_eq!(outcome.report.accepted, 82);
        assert_eq!(outcome.report.throughput, 0.82);
        assert_eq!(outcome.report.rejected_by_rule[&FilterRule::MalformedSpanId], 18);
        assert_eq!(outcome.accepted.len() + outcome.rejected.len(), 100);
    }

    #[test]
    fn filter_corpus_empty_input() {
        let outcome = filter_corpus(&[], &RuleConfig::default());
        assert_eq!(outcome.report.total, 0);
        assert_eq!(outcome.report.throughput, 0.0);
        assert!(outcome.accepted.is_empty());
        assert!(outcome.rejected.is_empty());
    }
}
