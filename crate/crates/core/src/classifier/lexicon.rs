//! Category rules and polarity markers, loaded from a plain-text lexicon file.
//!
//! File layout: `[polarity]` and `[category N]` sections, `key = value`
//! scalars, and `key:` lists whose items follow on indented lines.
//!
//! ```text
//! [category 29]
//! label = Pre- and post-pregnancy screening
//! chapter = XV
//! priority = 29
//! flags = analysed
//! patterns:
//!     pregnancy
//!     rants
//! ```
//!
//! A trailing `*` on a pattern word makes it a prefix match (`letharg*`).

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::normalize::normalize_note;

pub const CATEGORY_COUNT: u8 = 46;
pub const NO_NOTES_CATEGORY: u8 = 45;
pub const NON_SPECIFIC_CATEGORY: u8 = 46;

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("lexicon is missing category {0}")]
    MissingCategory(u8),
    #[error("lexicon defines category {0} more than once")]
    DuplicateCategory(u8),
    #[error("category {0} has no patterns")]
    EmptyPatterns(u8),
    #[error("priority {priority} used by categories {first} and {second}")]
    DuplicatePriority { priority: u32, first: u8, second: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternToken {
    pub text: String,
    /// Matches any token starting with `text`.
    pub prefix: bool,
}

impl PatternToken {
    pub fn matches(&self, token: &str) -> bool {
        if self.prefix {
            token.starts_with(self.text.as_str())
        } else {
            token == self.text
        }
    }
}

/// A normalized phrase pattern matched against contiguous note tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub tokens: Vec<PatternToken>,
}

impl Pattern {
    /// Normalizes raw pattern text. Returns `None` when nothing remains.
    pub fn parse(raw: &str) -> Option<Pattern> {
        let mut tokens: Vec<PatternToken> = Vec::new();
        for tok in normalize_note(raw) {
            if tok == "*" {
                if let Some(last) = tokens.last_mut() {
                    last.prefix = true;
                    continue;
                }
            }
            tokens.push(PatternToken {
                text: tok,
                prefix: false,
            });
        }
        (!tokens.is_empty()).then_some(Pattern { tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// True when the pattern matches `tokens` starting at `start`.
    pub fn matches_at(&self, tokens: &[String], start: usize) -> bool {
        start + self.tokens.len() <= tokens.len()
            && self
                .tokens
                .iter()
                .zip(&tokens[start..])
                .all(|(p, t)| p.matches(t))
    }

    pub fn occurs_in(&self, tokens: &[String]) -> bool {
        (0..tokens.len()).any(|i| self.matches_at(tokens, i))
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&t.text)?;
            if t.prefix {
                f.write_str("*")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRule {
    pub category_id: u8,
    pub label: String,
    /// ICD-10 chapter label; `None` where the table shows `-`.
    pub icd10_chapter: Option<String>,
    /// Lower value wins when a note matches several categories.
    pub priority: u32,
    pub patterns: Vec<Pattern>,
    /// One of the categories reported in the accuracy tables.
    pub analysed: bool,
    /// Vaccination-response checks, removed before evaluation.
    pub vaccination: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityMarkers {
    /// Words or phrases anywhere in a note that turn hepatitis mentions into queries.
    pub query_keywords: Vec<Pattern>,
    /// Cues that assert a condition. A bare mention already counts as a statement,
    /// so these are recorded for audit only.
    pub statement_keywords: Vec<Pattern>,
    /// Words directly before or after a mention that deny it (`hep c neg`).
    pub negation_keywords: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    /// Ordered by category id; index `i` holds category `i + 1`.
    rules: Vec<CategoryRule>,
    polarity: PolarityMarkers,
}

impl Lexicon {
    pub fn new(mut rules: Vec<CategoryRule>, polarity: PolarityMarkers) -> Result<Self, LexiconError> {
        rules.sort_by_key(|r| r.category_id);
        let mut seen = HashSet::new();
        for rule in &rules {
            if !seen.insert(rule.category_id) {
                return Err(LexiconError::DuplicateCategory(rule.category_id));
            }
        }
        for id in 1..=CATEGORY_COUNT {
            if !seen.contains(&id) {
                return Err(LexiconError::MissingCategory(id));
            }
        }
        if let Some(extra) = rules.iter().find(|r| r.category_id == 0 || r.category_id > CATEGORY_COUNT) {
            return Err(LexiconError::Syntax {
                line: 0,
                message: format!("category id {} outside 1..={CATEGORY_COUNT}", extra.category_id),
            });
        }
        let mut priorities: BTreeMap<u32, u8> = BTreeMap::new();
        for rule in &rules {
            if rule.patterns.is_empty() {
                return Err(LexiconError::EmptyPatterns(rule.category_id));
            }
            if let Some(&first) = priorities.get(&rule.priority) {
                return Err(LexiconError::DuplicatePriority {
                    priority: rule.priority,
                    first,
                    second: rule.category_id,
                });
            }
            priorities.insert(rule.priority, rule.category_id);
        }
        Ok(Lexicon { rules, polarity })
    }

    /// The bundled lexicon transcribing the 46 note categories.
    pub fn default_lexicon() -> Lexicon {
        Lexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn default_source() -> &'static str {
        DEFAULT_LEXICON
    }

    pub fn rules(&self) -> &[CategoryRule] {
        &self.rules
    }

    pub fn rule(&self, category_id: u8) -> Option<&CategoryRule> {
        (1..=CATEGORY_COUNT)
            .contains(&category_id)
            .then(|| &self.rules[usize::from(category_id) - 1])
    }

    pub fn polarity(&self) -> &PolarityMarkers {
        &self.polarity
    }

    pub fn is_vaccination(&self, category_id: u8) -> bool {
        self.rule(category_id).is_some_and(|r| r.vaccination)
    }

    pub fn label(&self, category_id: u8) -> &str {
        self.rule(category_id).map(|r| r.label.as_str()).unwrap_or("")
    }

    pub fn parse(text: &str) -> Result<Lexicon, LexiconError> {
        let sections = parse_sections(text)?;
        let mut rules = Vec::new();
        let mut polarity = None;
        for section in sections {
            if section.name == "polarity" {
                polarity = Some(PolarityMarkers {
                    query_keywords: section.patterns("query")?,
                    statement_keywords: section.patterns("statement")?,
                    negation_keywords: section.patterns("negation")?,
                });
            } else if let Some(id) = section.name.strip_prefix("category ") {
                rules.push(section.to_rule(id.trim())?);
            } else {
                return Err(LexiconError::Syntax {
                    line: section.line,
                    message: format!("unknown section `[{}]`", section.name),
                });
            }
        }
        let polarity = polarity.ok_or(LexiconError::Syntax {
            line: 0,
            message: "missing [polarity] section".into(),
        })?;
        Lexicon::new(rules, polarity)
    }
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Lexicon::parse(&text)
}

/// `(item, line)` pairs of one `key:` list.
type ListItems = Vec<(String, usize)>;

struct Section {
    name: String,
    line: usize,
    scalars: Vec<(String, String, usize)>,
    lists: Vec<(String, ListItems, usize)>,
}

impl Section {
    fn scalar(&self, key: &str) -> Option<(&str, usize)> {
        self.scalars
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
    }

    fn patterns(&self, key: &str) -> Result<Vec<Pattern>, LexiconError> {
        let Some((_, items, _)) = self.lists.iter().find(|(k, _, _)| k == key) else {
            return Ok(Vec::new());
        };
        items
            .iter()
            .map(|(raw, line)| {
                Pattern::parse(raw).ok_or_else(|| LexiconError::Syntax {
                    line: *line,
                    message: format!("pattern `{raw}` is empty after normalization"),
                })
            })
            .collect()
    }

    fn to_rule(&self, id_text: &str) -> Result<CategoryRule, LexiconError> {
        let category_id: u8 = id_text
            .parse()
            .ok()
            .filter(|id| (1..=CATEGORY_COUNT).contains(id))
            .ok_or_else(|| LexiconError::Syntax {
                line: self.line,
                message: format!("category id `{id_text}` is not in 1..={CATEGORY_COUNT}"),
            })?;
        for (key, _, line) in &self.scalars {
            if !matches!(key.as_str(), "label" | "chapter" | "priority" | "flags") {
                return Err(LexiconError::Syntax {
                    line: *line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        let label = self.scalar("label").map(|(v, _)| v.to_string()).unwrap_or_default();
        let icd10_chapter = self
            .scalar("chapter")
            .map(|(v, _)| v.trim())
            .filter(|v| !v.is_empty() && *v != "-")
            .map(str::to_string);
        let priority = match self.scalar("priority") {
            Some((v, line)) => v.parse().map_err(|_| LexiconError::Syntax {
                line,
                message: format!("priority `{v}` is not an integer"),
            })?,
            None => u32::from(category_id),
        };
        let mut analysed = false;
        let mut vaccination = false;
        if let Some((flags, line)) = self.scalar("flags") {
            for flag in flags.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                match flag {
                    "analysed" => analysed = true,
                    "vaccination" => vaccination = true,
                    other => {
                        return Err(LexiconError::Syntax {
                            line,
                            message: format!("unknown flag `{other}`"),
                        })
                    }
                }
            }
        }
        let patterns = self.patterns("patterns")?;
        if patterns.is_empty() {
            return Err(LexiconError::EmptyPatterns(category_id));
        }
        Ok(CategoryRule {
            category_id,
            label,
            icd10_chapter,
            priority,
            patterns,
            analysed,
            vaccination,
        })
    }
}

fn parse_sections(text: &str) -> Result<Vec<Section>, LexiconError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut list_open = false;

    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indented = raw_line.starts_with([' ', '\t']);

        if indented && list_open {
            let section = sections.last_mut().expect("list belongs to a section");
            let list = section.lists.last_mut().expect("open list");
            list.1.push((trimmed.to_string(), line_no));
            continue;
        }
        list_open = false;

        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            sections.push(Section {
                name: name.trim().to_string(),
                line: line_no,
                scalars: Vec::new(),
                lists: Vec::new(),
            });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return Err(LexiconError::Syntax {
                line: line_no,
                message: "entry outside of a section".into(),
            });
        };
        if let Some(key) = trimmed.strip_suffix(':') {
            section.lists.push((key.trim().to_string(), Vec::new(), line_no));
            list_open = true;
        } else if let Some((key, value)) = trimmed.split_once('=') {
            section
                .scalars
                .push((key.trim().to_string(), value.trim().to_string(), line_no));
        } else {
            return Err(LexiconError::Syntax {
                line: line_no,
                message: format!("expected `key = value` or `key:`, found `{trimmed}`"),
            });
        }
    }
    Ok(sections)
}
