//! Canonical domain model: triples, data points, datasets and the
//! arithmetic that relates annotated triples to the triples a text expresses.
//!
//! A data point pairs a text with its annotation, the set of triples the text
//! is supposed to express. Anything the text expresses beyond the annotation is
//! a hallucination. For synthetic corruptions the removed triples are recorded
//! as `missing_triples`, so the full set expressed by the text is
//! `triples ∪ missing_triples`.

use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("triple field `{field}` is empty")]
    EmptyField { field: &'static str },
    #[error("data point `{0}` has empty text")]
    EmptyText(String),
    #[error("data point id must not be empty")]
    EmptyId,
    #[error("data point `{id}`: missing triple {triple} is also annotated")]
    OverlappingMissing { id: String, triple: Triple },
    #[error("duplicate data point id `{0}`")]
    DuplicateId(String),
    #[error("cannot linearize an empty triple set")]
    EmptyTripleSet,
    #[error("relation schema must list at least one relation")]
    EmptySchema,
    #[error("annotation triple count is zero")]
    ZeroAnnotation,
    #[error("text triple count {text} is below annotation triple count {annotation}")]
    NegativeExcess { text: u64, annotation: u64 },
    #[error("unknown split `{0}` (expected train or test)")]
    UnknownSplit(String),
}

/// A `(head, relation, tail)` fact. Fields are trimmed on construction and
/// compared by exact, case-sensitive string equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawTriple")]
pub struct Triple {
    head: String,
    relation: String,
    tail: String,
}

#[derive(Deserialize)]
struct RawTriple {
    head: String,
    relation: String,
    tail: String,
}

impl TryFrom<RawTriple> for Triple {
    type Error = ModelError;

    fn try_from(raw: RawTriple) -> Result<Self, Self::Error> {
        Triple::new(raw.head, raw.relation, raw.tail)
    }
}

impl Triple {
    pub fn new(
        head: impl AsRef<str>,
        relation: impl AsRef<str>,
        tail: impl AsRef<str>,
    ) -> Result<Self, ModelError> {
        let field = |value: &str, name: &'static str| {
            let trimmed = value.trim();
            if trimmed.is_empty() {
                Err(ModelError::EmptyField { field: name })
            } else {
                Ok(trimmed.to_owned())
            }
        };
        Ok(Triple {
            head: field(head.as_ref(), "head")?,
            relation: field(relation.as_ref(), "relation")?,
            tail: field(tail.as_ref(), "tail")?,
        })
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn tail(&self) -> &str {
        &self.tail
    }

    /// The triple with every field normalized the way linearization does it
    /// (underscores become spaces, whitespace runs collapse).
    pub fn normalized(&self) -> Triple {
        Triple {
            head: normalize_surface(&self.head),
            relation: normalize_surface(&self.relation),
            tail: normalize_surface(&self.tail),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} | {} | {})", self.head, self.relation, self.tail)
    }
}

/// Insertion-ordered set of triples. Equality ignores order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TripleSet(IndexSet<Triple>);

impl TripleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `false` when the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.0.insert(triple)
    }

    /// Removes a triple, keeping the order of the rest.
    pub fn remove(&mut self, triple: &Triple) -> bool {
        self.0.shift_remove(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.0.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get_index(&self, index: usize) -> Option<&Triple> {
        self.0.get_index(index)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Triple> + '_ {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &TripleSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// `self ⊊ other`
    pub fn is_strict_subset(&self, other: &TripleSet) -> bool {
        self.len() < other.len() && self.is_subset(other)
    }

    pub fn is_disjoint(&self, other: &TripleSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// Triples in lexicographic `(head, relation, tail)` order.
    pub fn sorted(&self) -> Vec<Triple> {
        let mut triples: Vec<Triple> = self.0.iter().cloned().collect();
        triples.sort();
        triples
    }

    pub fn union(&self, other: &TripleSet) -> TripleSet {
        self.iter().chain(other.iter()).cloned().collect()
    }
}

impl FromIterator<Triple> for TripleSet {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        TripleSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a TripleSet {
    type Item = &'a Triple;
    type IntoIter = indexmap::set::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A text with its annotation and, for synthetic data, the triples that were
/// deliberately removed from the annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPoint {
    id: String,
    text: String,
    triples: TripleSet,
    missing_triples: TripleSet,
}

impl DataPoint {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        triples: TripleSet,
    ) -> Result<Self, ModelError> {
        Self::with_missing(id, text, triples, TripleSet::new())
    }

    pub fn with_missing(
        id: impl Into<String>,
        text: impl Into<String>,
        triples: TripleSet,
        missing_triples: TripleSet,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        let text = text.into();
        if id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if text.trim().is_empty() {
            return Err(ModelError::EmptyText(id));
        }
        if let Some(triple) = missing_triples.iter().find(|t| triples.contains(t)) {
            return Err(ModelError::OverlappingMissing {
                triple: triple.clone(),
                id,
            });
        }
        Ok(DataPoint {
            id,
            text,
            triples,
            missing_triples,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn triples(&self) -> &TripleSet {
        &self.triples
    }

    pub fn missing_triples(&self) -> &TripleSet {
        &self.missing_triples
    }

    /// Every triple known to be expressed by the text: `triples ∪ missing_triples`.
    /// Only meaningful for synthetic data where the missing triples were recorded.
    pub fn expressed_triples(&self) -> TripleSet {
        self.triples.union(&self.missing_triples)
    }

    /// Moves a triple from the annotation into `missing_triples`.
    pub(crate) fn drop_triple(&mut self, triple: &Triple) -> bool {
        if self.triples.remove(triple) {
            self.missing_triples.insert(triple.clone());
            true
        } else {
            false
        }
    }

    pub(crate) fn set_text(&mut self, text: String) {
        self.text = text;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(ModelError::UnknownSplit(other.to_owned())),
        }
    }
}

/// One step in a dataset's history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    /// Per-point notes such as donor ids or quality flags, keyed by point id.
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub details: std::collections::BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub source: String,
    pub step: String,
}

impl ProvenanceRecord {
    pub fn new(step: impl Into<String>, seed: Option<u64>, source: impl Into<String>) -> Self {
        ProvenanceRecord {
            details: Default::default(),
            seed,
            source: source.into(),
            step: step.into(),
        }
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.details.insert(key.into(), value.into());
        self
    }
}

/// An ordered collection of data points with unique ids and an append-only
/// provenance log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    points: Vec<DataPoint>,
    provenance: Vec<ProvenanceRecord>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        split: Split,
        points: Vec<DataPoint>,
    ) -> Result<Self, ModelError> {
        Self::with_provenance(name, split, points, Vec::new())
    }

    pub fn with_provenance(
        name: impl Into<String>,
        split: Split,
        points: Vec<DataPoint>,
        provenance: Vec<ProvenanceRecord>,
    ) -> Result<Self, ModelError> {
        let mut seen = std::collections::HashSet::with_capacity(points.len());
        for point in &points {
            if !seen.insert(point.id()) {
                return Err(ModelError::DuplicateId(point.id().to_owned()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            split,
            points,
            provenance,
        })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn provenance(&self) -> &[ProvenanceRecord] {
        &self.provenance
    }

    pub fn record(&mut self, record: ProvenanceRecord) {
        self.provenance.push(record);
    }

    /// A new dataset carrying this one's history plus `record`.
    pub fn derive(
        &self,
        points: Vec<DataPoint>,
        record: ProvenanceRecord,
    ) -> Result<Dataset, ModelError> {
        let mut provenance = self.provenance.clone();
        provenance.push(record);
        Dataset::with_provenance(self.name.clone(), self.split, points, provenance)
    }

    pub fn total_triples(&self) -> u64 {
        self.points.iter().map(|p| p.triples().len() as u64).sum()
    }

    pub fn total_missing(&self) -> u64 {
        self.points
            .iter()
            .map(|p| p.missing_triples().len() as u64)
            .sum()
    }

    /// Hallucination rate over the known expressed triples
    /// (`Σ|T ∪ MT|` against `Σ|T|`).
    pub fn hallucination_rate(&self) -> Result<f64, ModelError> {
        hallucination_rate(self.total_triples() + self.total_missing(), self.total_triples())
    }
}

/// Relation types an extraction model targets. Order is kept as given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema(IndexSet<String>);

impl RelationSchema {
    pub fn new<I, S>(relations: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set: IndexSet<String> = relations
            .into_iter()
            .map(|r| r.as_ref().trim().to_owned())
            .filter(|r| !r.is_empty())
            .collect();
        if set.is_empty() {
            Err(ModelError::EmptySchema)
        } else {
            Ok(RelationSchema(set))
        }
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.0.contains(relation)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }
}

/// Outcome classes of a textual-entailment model. The declaration order is
/// the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliLabel {
    pub const ALL: [NliLabel; 3] = [NliLabel::Entailment, NliLabel::Neutral, NliLabel::Contradiction];

    pub fn as_str(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Replaces underscores with spaces and collapses whitespace runs.
pub fn normalize_surface(value: &str) -> String {
    value
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a triple as `"head relation tail"`.
///
/// ```
/// use hallu_core::model::{linearize_triple, Triple};
/// let t = Triple::new("Alan_Bean", "birthDate", "March 15, 1932").unwrap();
/// assert_eq!(linearize_triple(&t), "Alan Bean birthDate March 15, 1932");
/// ```
pub fn linearize_triple(triple: &Triple) -> String {
    normalize_surface(&format!(
        "{} {} {}",
        triple.head, triple.relation, triple.tail
    ))
}

/// Joins the linearized triples with `" and "`, keeping the given order.
pub fn linearize_triple_set<'a, I>(triples: I) -> Result<String, ModelError>
where
    I: IntoIterator<Item = &'a Triple>,
{
    let parts: Vec<String> = triples.into_iter().map(linearize_triple).collect();
    if parts.is_empty() {
        return Err(ModelError::EmptyTripleSet);
    }
    Ok(parts.join(" and "))
}

/// Excess of text-expressed triples over annotated triples:
/// `n_text / n_annotation - 1`.
///
/// Deleting a fraction `d` of the triples from otherwise complete annotations
/// yields a rate of `d / (1 - d)`.
pub fn hallucination_rate(n_text_triples: u64, n_annotation_triples: u64) -> Result<f64, ModelError> {
    if n_annotation_triples == 0 {
        return Err(ModelError::ZeroAnnotation);
    }
    if n_text_triples < n_annotation_triples {
        return Err(ModelError::NegativeExcess {
            text: n_text_triples,
            annotation: n_annotation_triples,
        });
    }
    let excess = n_text_triples - n_annotation_triples;
    Ok(excess as f64 / n_annotation_triples as f64)
}
