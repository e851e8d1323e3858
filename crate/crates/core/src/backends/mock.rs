//! Deterministic in-process backends.
//!
//! | name               | role       | behaviour                                                      |
//! |--------------------|------------|----------------------------------------------------------------|
//! | `oracle-ner`       | ner        | ground-truth entity surfaces per text, located in the text      |
//! | `heuristic-ner`    | ner        | maximal capitalized-token spans and `Month D, YYYY` / ISO dates |
//! | `jaccard-sim`      | similarity | Jaccard overlap of lowercased whitespace tokens                 |
//! | `oracle-sim`       | similarity | 1 for equal normalized strings, table lookups, else a default   |
//! | `oracle-nli`       | nli        | decides from a table of the triples each text expresses         |
//! | `template-augment` | augment    | appends one fabricated sentence chosen from the seed            |

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;

use super::{
    check_nli_inputs, non_overlapping, BackendError, EntailmentJudge, Entity, EntityExtractor,
    NliPair, NliVerdict, PromptId, SimilarityScorer, TextAugmenter,
};
use crate::model::{linearize_triple, normalize_surface, Dataset, NliLabel, TripleSet};
use crate::rng::{hash_str, SeedStream};

fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Ground-truth extractor: each known text maps to the entity surfaces it
/// mentions. Every occurrence of a surface in the text becomes a span;
/// unknown texts have no entities.
#[derive(Debug, Clone, Default)]
pub struct OracleNer {
    table: HashMap<String, Vec<String>>,
}

impl OracleNer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<S: Into<String>>(&mut self, text: impl Into<String>, surfaces: impl IntoIterator<Item = S>) {
        self.table
            .entry(text.into())
            .or_default()
            .extend(surfaces.into_iter().map(Into::into));
    }

    /// Entities are the normalized heads and tails of every triple a point is
    /// known to express (`triples ∪ missing_triples`).
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut oracle = Self::new();
        for point in ds.points() {
            let surfaces = point
                .expressed_triples()
                .iter()
                .flat_map(|t| [normalize_surface(t.head()), normalize_surface(t.tail())])
                .collect::<Vec<_>>();
            oracle.insert(point.text(), surfaces);
        }
        oracle
    }

    fn extract_one(&self, text: &str) -> Vec<Entity> {
        let Some(surfaces) = self.table.get(text) else {
            return Vec::new();
        };
        let unique: HashSet<&str> = surfaces.iter().map(String::as_str).collect();
        let mut found = Vec::new();
        for surface in unique {
            if surface.is_empty() {
                continue;
            }
            for (byte, _) in text.match_indices(surface) {
                let start = char_offset(text, byte);
                found.push(Entity {
                    surface: surface.to_owned(),
                    start,
                    end: start + surface.chars().count(),
                });
            }
        }
        non_overlapping(found)
    }
}

impl EntityExtractor for OracleNer {
    fn extract_entities(&self, texts: &[&str]) -> Result<Vec<Vec<Entity>>, BackendError> {
        Ok(texts.iter().map(|t| self.extract_one(t)).collect())
    }

    fn describe(&self) -> String {
        "oracle-ner".into()
    }
}

/// Rule-based extractor: dates (`March 15, 1932`, `1932-03-15`) and maximal
/// runs of capitalized tokens. A token ending in punctuation closes its run.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicNer;

fn date_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\b(?:January|February|March|April|May|June|July|August|September|October|November|December) \d{1,2}, \d{4}\b|\b\d{4}-\d{2}-\d{2}\b",
        )
        .expect("valid date regex")
    })
}

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\S+").expect("valid token regex"))
}

const LEADING: &[char] = &['(', '"', '\'', '[', '“', '‘'];
const TRAILING: &[char] = &[',', '.', ';', ':', '!', '?', ')', '"', '\'', ']', '”', '’'];

impl HeuristicNer {
    fn extract_one(text: &str) -> Vec<Entity> {
        let mut spans: Vec<(usize, usize)> = date_regex()
            .find_iter(text)
            .map(|m| (m.start(), m.end()))
            .collect();
        let dates = spans.clone();

        let mut run: Option<(usize, usize)> = None;
        for m in token_regex().find_iter(text) {
            let token = m.as_str();
            let lead = token.len() - token.trim_start_matches(LEADING).len();
            let core = token.trim_start_matches(LEADING).trim_end_matches(TRAILING);
            let start = m.start() + lead;
            let end = start + core.len();
            let capitalized = core.chars().next().is_some_and(char::is_uppercase);
            let closes = end < m.end() || lead > 0;
            if capitalized {
                let extended = match run {
                    Some((s, _)) if lead == 0 => (s, end),
                    Some(prev) => {
                        spans.push(prev);
                        (start, end)
                    }
                    None => (start, end),
                };
                run = Some(extended);
                if closes {
                    spans.extend(run.take());
                }
            } else {
                spans.extend(run.take());
            }
        }
        spans.extend(run);

        let overlaps_date =
            |(s, e): (usize, usize)| dates.iter().any(|&(ds, de)| s < de && ds < e);
        let entities = spans
            .into_iter()
            .enumerate()
            .filter(|&(i, span)| i < dates.len() || !overlaps_date(span))
            .map(|(_, (s, e))| Entity {
                surface: text[s..e].to_owned(),
                start: char_offset(text, s),
                end: char_offset(text, e),
            })
            .collect();
        non_overlapping(entities)
    }
}

impl EntityExtractor for HeuristicNer {
    fn extract_entities(&self, texts: &[&str]) -> Result<Vec<Vec<Entity>>, BackendError> {
        Ok(texts.iter().map(|t| Self::extract_one(t)).collect())
    }

    fn describe(&self) -> String {
        "heuristic-ner".into()
    }
}

/// Jaccard index of lowercased whitespace token sets. Two token-free strings
/// score 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardSimilarity;

impl JaccardSimilarity {
    pub fn score(a: &str, b: &str) -> f64 {
        let tokens = |s: &str| -> HashSet<String> {
            s.split_whitespace().map(str::to_lowercase).collect()
        };
        let (ta, tb) = (tokens(a), tokens(b));
        let union = ta.union(&tb).count();
        if union == 0 {
            return 1.0;
        }
        ta.intersection(&tb).count() as f64 / union as f64
    }
}

impl SimilarityScorer for JaccardSimilarity {
    fn score_similarity(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, BackendError> {
        Ok(pairs.iter().map(|&(a, b)| Self::score(a, b)).collect())
    }

    fn describe(&self) -> String {
        "jaccard-sim".into()
    }
}

/// Table-driven similarity. Strings equal after normalization score 1; listed
/// pairs (order-insensitive) score their table value; everything else scores
/// `default`.
#[derive(Debug, Clone, Default)]
pub struct OracleSimilarity {
    table: HashMap<(String, String), f64>,
    default: f64,
}

impl OracleSimilarity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_default(mut self, default: f64) -> Self {
        self.default = default.clamp(0.0, 1.0);
        self
    }

    fn key(a: &str, b: &str) -> (String, String) {
        let (a, b) = (normalize_surface(a), normalize_surface(b));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn insert(&mut self, a: &str, b: &str, score: f64) {
        self.table.insert(Self::key(a, b), score.clamp(0.0, 1.0));
    }

    pub fn score(&self, a: &str, b: &str) -> f64 {
        let key = Self::key(a, b);
        if key.0 == key.1 {
            return 1.0;
        }
        self.table.get(&key).copied().unwrap_or(self.default)
    }
}

impl SimilarityScorer for OracleSimilarity {
    fn score_similarity(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, BackendError> {
        Ok(pairs.iter().map(|&(a, b)| self.score(a, b)).collect())
    }

    fn describe(&self) -> String {
        "oracle-sim".into()
    }
}

/// Entailment oracle over a table mapping each known text to the triples it
/// expresses.
///
/// * If the premise is a known text, the hypothesis is entailed iff it is the
///   linearization of one of the premise's triples.
/// * Otherwise, if the hypothesis is a known text, the premise is read as a
///   linearized triple set and the hypothesis is entailed iff every triple it
///   expresses appears as an `" and "`-delimited segment of the premise.
/// * Anything else is neutral. Contradiction is never produced.
#[derive(Debug, Clone, Default)]
pub struct OracleNli {
    table: HashMap<String, TripleSet>,
}

impl OracleNli {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: impl Into<String>, expressed: TripleSet) {
        self.table.insert(text.into(), expressed);
    }

    /// Uses `triples ∪ missing_triples` as the expressed set of every point.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut oracle = Self::new();
        for point in ds.points() {
            oracle.insert(point.text(), point.expressed_triples());
        }
        oracle
    }

    fn judge_one(&self, pair: NliPair<'_>) -> NliLabel {
        if let Some(expressed) = self.table.get(pair.premise) {
            let entailed = expressed
                .iter()
                .any(|t| linearize_triple(t) == pair.hypothesis);
            return if entailed { NliLabel::Entailment } else { NliLabel::Neutral };
        }
        if let Some(expressed) = self.table.get(pair.hypothesis) {
            let covered = expressed
                .iter()
                .all(|t| contains_segment(pair.premise, &linearize_triple(t)));
            return if covered { NliLabel::Entailment } else { NliLabel::Neutral };
        }
        NliLabel::Neutral
    }
}

/// Whether `segment` occurs in `sentence` delimited by the sentence bounds or
/// by `" and "`.
fn contains_segment(sentence: &str, segment: &str) -> bool {
    const AND: &str = " and ";
    sentence.match_indices(segment).any(|(start, _)| {
        let end = start + segment.len();
        let before_ok = start == 0 || sentence[..start].ends_with(AND);
        let after_ok = end == sentence.len() || sentence[end..].starts_with(AND);
        before_ok && after_ok
    })
}

impl EntailmentJudge for OracleNli {
    fn judge_entailment(&self, pairs: &[NliPair<'_>]) -> Result<Vec<NliVerdict>, BackendError> {
        check_nli_inputs(pairs)?;
        Ok(pairs
            .iter()
            .map(|&p| NliVerdict::certain(self.judge_one(p)))
            .collect())
    }

    fn describe(&self) -> String {
        "oracle-nli".into()
    }
}

/// Appends one fabricated sentence per text. The sentence depends only on
/// `(prompt, seed, text)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateAugmenter;

const NUMBERS: [&str; 8] = ["8.4", "2.7", "1.3", "0.6", "4.9", "3.1", "12.5", "7.2"];
const YEARS: [&str; 6] = ["1794", "1851", "1902", "1938", "1967", "1989"];
const NAMES: [&str; 6] = [
    "Margaret Holloway",
    "the Veldt Institute",
    "Port Arlen",
    "Henrik Saalfeld",
    "the Corvane Society",
    "Lake Tessary",
];

impl TemplateAugmenter {
    fn sentence(prompt: PromptId, stream: &mut SeedStream) -> String {
        let mut pick = |items: &[&'static str]| items[stream.index(items.len())];
        match prompt {
            PromptId::Verbose => format!(
                "It has a long history that goes back to {} and today has a population of {} million inhabitants.",
                pick(&YEARS),
                pick(&NUMBERS)
            ),
            PromptId::Concise => format!("It was first recorded in {}.", pick(&YEARS)),
            PromptId::NumericFacts => format!(
                "It has a population of {} million inhabitants.",
                pick(&NUMBERS)
            ),
            PromptId::RelatedEntities => {
                format!("It is often mentioned together with {}.", pick(&NAMES))
            }
            PromptId::Free => format!(
                "It was visited by {} in {}.",
                pick(&NAMES),
                pick(&YEARS)
            ),
        }
    }

    pub fn augment_one(text: &str, prompt: PromptId, seed: u64) -> String {
        let mut stream = SeedStream::for_point(seed ^ hash_str(prompt.as_str()), hash_str(text));
        let sentence = Self::sentence(prompt, &mut stream);
        let trimmed = text.trim_end();
        let joiner = if trimmed.ends_with(['.', '!', '?']) { " " } else { ". " };
        format!("{trimmed}{joiner}{sentence}")
    }
}

impl TextAugmenter for TemplateAugmenter {
    fn augment_text(&self, texts: &[&str], prompt: PromptId, seed: u64) -> Result<Vec<String>, BackendError> {
        Ok(texts
            .iter()
            .map(|t| Self::augment_one(t, prompt, seed))
            .collect())
    }

    fn describe(&self) -> String {
        "template-augment".into()
    }
}
