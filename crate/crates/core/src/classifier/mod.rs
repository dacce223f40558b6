//! Rule-based assignment of a note to one of the 46 categories, plus the
//! statement-versus-query polarity of any hepatitis B/C mention.

mod lexicon;
mod normalize;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use lexicon::{
    load_lexicon, CategoryRule, Lexicon, LexiconError, Pattern, PatternToken, PolarityMarkers,
    CATEGORY_COUNT, NON_SPECIFIC_CATEGORY, NO_NOTES_CATEGORY,
};
pub use normalize::{normalize_note, HEPATITIS_B, HEPATITIS_C};

use crate::model::{Condition, TestLabel};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CategoryMatch {
    pub category_id: u8,
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteClassification {
    pub category_id: u8,
    /// Pattern behind `category_id`; empty for the 45/46 fallbacks.
    pub matched_pattern: String,
    pub hbv_label: TestLabel,
    pub hcv_label: TestLabel,
    /// Matches that survived longest-span suppression, in text order.
    pub all_matches: Vec<CategoryMatch>,
    /// Polarity cues seen in the note, e.g. `query:screen`, `query-prefix:?`.
    pub cues: Vec<String>,
}

impl NoteClassification {
    pub fn label(&self, condition: Condition) -> TestLabel {
        match condition {
            Condition::HepatitisB => self.hbv_label,
            Condition::HepatitisC => self.hcv_label,
        }
    }

    /// Whether the note belongs to `category_id`, counting every surviving
    /// match and not only the reported category.
    pub fn belongs_to(&self, category_id: u8) -> bool {
        self.category_id == category_id || self.all_matches.iter().any(|m| m.category_id == category_id)
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    rule: usize,
    pattern: usize,
    start: usize,
    end: usize,
}

impl Span {
    fn len(&self) -> usize {
        self.end - self.start
    }

    fn strictly_inside(&self, other: &Span) -> bool {
        other.start <= self.start && self.end <= other.end && other.len() > self.len()
    }
}

/// A lexicon with a first-token index for fast matching. Immutable, `Send + Sync`.
#[derive(Debug, Clone)]
pub struct NoteClassifier {
    lexicon: Lexicon,
    by_first_token: HashMap<String, Vec<(usize, usize)>>,
    prefix_first: Vec<(usize, usize)>,
}

impl NoteClassifier {
    pub fn new(lexicon: Lexicon) -> Self {
        let mut by_first_token: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        let mut prefix_first = Vec::new();
        for (ri, rule) in lexicon.rules().iter().enumerate() {
            for (pi, pattern) in rule.patterns.iter().enumerate() {
                let first = &pattern.tokens[0];
                if first.prefix {
                    prefix_first.push((ri, pi));
                } else {
                    by_first_token.entry(first.text.clone()).or_default().push((ri, pi));
                }
            }
        }
        NoteClassifier {
            lexicon,
            by_first_token,
            prefix_first,
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn find_spans(&self, tokens: &[String]) -> Vec<Span> {
        let rules = self.lexicon.rules();
        let mut spans = Vec::new();
        for start in 0..tokens.len() {
            let exact = self.by_first_token.get(&tokens[start]).into_iter().flatten();
            for &(rule, pattern) in exact.chain(self.prefix_first.iter()) {
                let p = &rules[rule].patterns[pattern];
                if p.matches_at(tokens, start) {
                    spans.push(Span {
                        rule,
                        pattern,
                        start,
                        end: start + p.len(),
                    });
                }
            }
        }
        spans
    }

    pub fn classify(&self, text: &str) -> NoteClassification {
        let tokens = normalize_note(text);
        let rules = self.lexicon.rules();
        let polarity = self.lexicon.polarity();

        let mut cues = Vec::new();
        for (kind, list) in [
            ("query", &polarity.query_keywords),
            ("statement", &polarity.statement_keywords),
        ] {
            for p in list.iter().filter(|p| p.occurs_in(&tokens)) {
                cues.push(format!("{kind}:{p}"));
            }
        }
        let note_is_query = polarity.query_keywords.iter().any(|p| p.occurs_in(&tokens));

        if tokens.is_empty() {
            return NoteClassification {
                category_id: NO_NOTES_CATEGORY,
                matched_pattern: String::new(),
                hbv_label: TestLabel::Negative,
                hcv_label: TestLabel::Negative,
                all_matches: Vec::new(),
                cues,
            };
        }

        let spans = self.find_spans(&tokens);
        let is_condition = |rule: usize| {
            Condition::ALL
                .iter()
                .any(|c| c.category_id() == rules[rule].category_id)
        };
        // Drop a match nested inside a longer match of another category
        // (`food allergy` hides `allergy`). Hepatitis mentions are never hidden.
        let kept: Vec<Span> = spans
            .iter()
            .filter(|s| {
                is_condition(s.rule)
                    || !spans.iter().any(|o| {
                        rules[o.rule].category_id != rules[s.rule].category_id && s.strictly_inside(o)
                    })
            })
            .copied()
            .collect();

        let mut all_matches: Vec<CategoryMatch> = Vec::new();
        for s in &kept {
            let m = CategoryMatch {
                category_id: rules[s.rule].category_id,
                pattern: rules[s.rule].patterns[s.pattern].to_string(),
            };
            if !all_matches.contains(&m) {
                all_matches.push(m);
            }
        }

        let best = kept
            .iter()
            .min_by_key(|s| (rules[s.rule].priority, s.start, std::cmp::Reverse(s.len())));
        let (category_id, matched_pattern) = match best {
            Some(s) => (
                rules[s.rule].category_id,
                rules[s.rule].patterns[s.pattern].to_string(),
            ),
            None => (NON_SPECIFIC_CATEGORY, String::new()),
        };

        let mut label_for = |condition: Condition| -> TestLabel {
            let mut statement = false;
            for s in kept.iter().filter(|s| rules[s.rule].category_id == condition.category_id()) {
                let before = s.start.checked_sub(1).map(|i| tokens[i].as_str());
                let after = tokens.get(s.end).map(String::as_str);
                if before == Some("?") || after == Some("?") {
                    cues.push(format!("query-prefix:? ({})", condition.short_name()));
                    continue;
                }
                let negated = polarity.negation_keywords.iter().any(|n| {
                    n.matches_at(&tokens, s.end)
                        || (s.start >= n.len() && n.matches_at(&tokens, s.start - n.len()))
                });
                if negated {
                    cues.push(format!("negation ({})", condition.short_name()));
                    continue;
                }
                if !note_is_query {
                    statement = true;
                }
            }
            if statement {
                TestLabel::Positive
            } else {
                TestLabel::Negative
            }
        };
        let hbv_label = label_for(Condition::HepatitisB);
        let hcv_label = label_for(Condition::HepatitisC);

        NoteClassification {
            category_id,
            matched_pattern,
            hbv_label,
            hcv_label,
            all_matches,
            cues,
        }
    }
}

/// Classifies one note against a lexicon. Builds a throwaway index; prefer a
/// [`NoteClassifier`] when classifying many notes.
pub fn classify_note(text: &str, lexicon: &Lexicon) -> NoteClassification {
    NoteClassifier::new(lexicon.clone()).classify(text)
}
