//! Model capabilities behind a pluggable interface.
//!
//! Detection and quantification need four capabilities: entity extraction,
//! pairwise similarity, entailment judgment and text augmentation. Each is a
//! batch trait. A [`BackendSuite`] bundles one implementation per role; the
//! implementation is either the HTTP client in [`remote`] or one of the
//! deterministic mocks in [`mock`].
//!
//! Every capability returns exactly one result per input item, in input order.

pub mod mock;
pub mod prompts;
pub mod protocol;
pub mod remote;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NliLabel;
pub use prompts::PromptId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable at {url}: {reason}")]
    BackendUnavailable { url: String, reason: String },
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("backend returned HTTP {status}: {message}")]
    Remote { status: u16, message: String },
    #[error("entailment inputs must be non-empty (pair {index})")]
    EmptyInput { index: usize },
    #[error("unknown prompt id `{0}`")]
    UnknownPrompt(String),
    #[error("augmentation rejected: {0}")]
    AugmentationRejected(String),
    #[error("no backend configured for capability `{0}`")]
    Unsupported(Capability),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capability {
    Ner,
    Similarity,
    Nli,
    Augment,
}

impl Capability {
    pub const ALL: [Capability; 4] = [
        Capability::Ner,
        Capability::Similarity,
        Capability::Nli,
        Capability::Augment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Ner => "ner",
            Capability::Similarity => "similarity",
            Capability::Nli => "nli",
            Capability::Augment => "augment",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A span of a text, in character (not byte) offsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

impl Entity {
    /// Builds the entity covering `start..end` of `text`, or `None` if the
    /// range is empty or out of bounds.
    pub fn from_span(text: &str, start: usize, end: usize) -> Option<Entity> {
        if start >= end {
            return None;
        }
        let surface: String = text.chars().skip(start).take(end - start).collect();
        if surface.chars().count() != end - start {
            return None;
        }
        Some(Entity { surface, start, end })
    }
}

/// Sorts by start (longer span first on ties) and drops spans that overlap an
/// earlier kept one.
pub(crate) fn non_overlapping(mut entities: Vec<Entity>) -> Vec<Entity> {
    entities.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut kept: Vec<Entity> = Vec::with_capacity(entities.len());
    for entity in entities {
        if kept.last().is_none_or(|last| entity.start >= last.end) {
            kept.push(entity);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NliPair<'a> {
    pub premise: &'a str,
    pub hypothesis: &'a str,
}

impl<'a> NliPair<'a> {
    pub fn new(premise: &'a str, hypothesis: &'a str) -> Self {
        NliPair { premise, hypothesis }
    }
}

/// Label plus the class distribution it was taken from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NliVerdict {
    pub label: NliLabel,
    pub scores: BTreeMap<NliLabel, f64>,
}

impl NliVerdict {
    /// Validates a distribution and takes its argmax. Ties go to the label
    /// declared first (entailment, then neutral, then contradiction).
    pub fn from_scores(scores: BTreeMap<NliLabel, f64>) -> Result<Self, BackendError> {
        let mut sum = 0.0;
        for label in NliLabel::ALL {
            let p = *scores.get(&label).ok_or_else(|| {
                BackendError::ProtocolError(format!("missing score for `{label}`"))
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(BackendError::ProtocolError(format!(
                    "score for `{label}` out of range: {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(BackendError::ProtocolError(format!(
                "scores sum to {sum}, expected 1"
            )));
        }
        let mut label = NliLabel::Entailment;
        for candidate in NliLabel::ALL {
            if scores[&candidate] > scores[&label] {
                label = candidate;
            }
        }
        Ok(NliVerdict { label, scores })
    }

    /// All probability mass on one label.
    pub fn certain(label: NliLabel) -> Self {
        let scores = NliLabel::ALL
            .into_iter()
            .map(|l| (l, if l == label { 1.0 } else { 0.0 }))
            .collect();
        NliVerdict { label, scores }
    }

    pub fn is_entailment(&self) -> bool {
        self.label == NliLabel::Entailment
    }
}

pub trait EntityExtractor: Send + Sync {
    /// Non-overlapping entities per text, in ascending start order.
    fn extract_entities(&self, texts: &[&str]) -> Result<Vec<Vec<Entity>>, BackendError>;

    fn describe(&self) -> String;
}

pub trait SimilarityScorer: Send + Sync {
    /// Symmetric scores in `[0, 1]`.
    fn score_similarity(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, BackendError>;

    fn describe(&self) -> String;
}

pub trait EntailmentJudge: Send + Sync {
    fn judge_entailment(&self, pairs: &[NliPair<'_>]) -> Result<Vec<NliVerdict>, BackendError>;

    fn describe(&self) -> String;
}

pub trait TextAugmenter: Send + Sync {
    fn augment_text(
        &self,
        texts: &[&str],
        prompt: PromptId,
        seed: u64,
    ) -> Result<Vec<String>, BackendError>;

    fn describe(&self) -> String;
}

pub(crate) fn check_nli_inputs(pairs: &[NliPair<'_>]) -> Result<(), BackendError> {
    match pairs
        .iter()
        .position(|p| p.premise.is_empty() || p.hypothesis.is_empty())
    {
        Some(index) => Err(BackendError::EmptyInput { index }),
        None => Ok(()),
    }
}

/// Placeholder for a role nobody filled.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unsupported;

impl EntityExtractor for Unsupported {
    fn extract_entities(&self, _: &[&str]) -> Result<Vec<Vec<Entity>>, BackendError> {
        Err(BackendError::Unsupported(Capability::Ner))
    }
    fn describe(&self) -> String {
        "unsupported".into()
    }
}

impl SimilarityScorer for Unsupported {
    fn score_similarity(&self, _: &[(&str, &str)]) -> Result<Vec<f64>, BackendError> {
        Err(BackendError::Unsupported(Capability::Similarity))
    }
    fn describe(&self) -> String {
        "unsupported".into()
    }
}

impl EntailmentJudge for Unsupported {
    fn judge_entailment(&self, _: &[NliPair<'_>]) -> Result<Vec<NliVerdict>, BackendError> {
        Err(BackendError::Unsupported(Capability::Nli))
    }
    fn describe(&self) -> String {
        "unsupported".into()
    }
}

impl TextAugmenter for Unsupported {
    fn augment_text(&self, _: &[&str], _: PromptId, _: u64) -> Result<Vec<String>, BackendError> {
        Err(BackendError::Unsupported(Capability::Augment))
    }
    fn describe(&self) -> String {
        "unsupported".into()
    }
}

/// One implementation per capability.
#[derive(Clone)]
pub struct BackendSuite {
    pub extractor: Arc<dyn EntityExtractor>,
    pub similarity: Arc<dyn SimilarityScorer>,
    pub entailment: Arc<dyn EntailmentJudge>,
    pub augmenter: Arc<dyn TextAugmenter>,
    remote: Option<Arc<remote::RemoteBackend>>,
}

impl fmt::Debug for BackendSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.describe()).finish()
    }
}

impl Default for BackendSuite {
    fn default() -> Self {
        BackendSuite {
            extractor: Arc::new(Unsupported),
            similarity: Arc::new(Unsupported),
            entailment: Arc::new(Unsupported),
            augmenter: Arc::new(Unsupported),
            remote: None,
        }
    }
}

impl BackendSuite {
    /// Every role served by the HTTP backend at `base_url`.
    pub fn remote(config: remote::RemoteConfig) -> Self {
        let backend = Arc::new(remote::RemoteBackend::new(config));
        BackendSuite {
            extractor: backend.clone(),
            similarity: backend.clone(),
            entailment: backend.clone(),
            augmenter: backend.clone(),
            remote: Some(backend),
        }
    }

    pub fn with_extractor(mut self, extractor: impl EntityExtractor + 'static) -> Self {
        self.extractor = Arc::new(extractor);
        self
    }

    pub fn with_similarity(mut self, similarity: impl SimilarityScorer + 'static) -> Self {
        self.similarity = Arc::new(similarity);
        self
    }

    pub fn with_entailment(mut self, entailment: impl EntailmentJudge + 'static) -> Self {
        self.entailment = Arc::new(entailment);
        self
    }

    pub fn with_augmenter(mut self, augmenter: impl TextAugmenter + 'static) -> Self {
        self.augmenter = Arc::new(augmenter);
        self
    }

    /// Role → implementation name, for manifests.
    pub fn describe(&self) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("augment", self.augmenter.describe()),
            ("ner", self.extractor.describe()),
            ("nli", self.entailment.describe()),
            ("similarity", self.similarity.describe()),
        ])
    }

    /// Fails unless every role in `required` has an implementation and, for a
    /// remote backend, the service reports healthy and advertises the role.
    pub fn check_health(&self, required: &[Capability]) -> Result<(), BackendError> {
        let described = self.describe();
        for role in required {
            if described[role.as_str()] == "unsupported" {
                return Err(BackendError::Unsupported(*role));
            }
        }
        if let Some(remote) = &self.remote {
            let advertised = remote.health()?;
            for role in required {
                let served_remotely = described[role.as_str()].starts_with("remote:");
                if served_remotely && !advertised.contains(role) {
                    return Err(BackendError::Unsupported(*role));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_argmax_and_ties() {
        let scores = |e: f64, n: f64, c: f64| {
            BTreeMap::from([
                (NliLabel::Entailment, e),
                (NliLabel::Neutral, n),
                (NliLabel::Contradiction, c),
            ])
        };
        assert_eq!(
            NliVerdict::from_scores(scores(0.9, 0.08, 0.02)).unwrap().label,
            NliLabel::Entailment
        );
        assert_eq!(
            NliVerdict::from_scores(scores(0.2, 0.4, 0.4)).unwrap().label,
            NliLabel::Neutral
        );
        assert_eq!(
            NliVerdict::from_scores(scores(0.1, 0.2, 0.7)).unwrap().label,
            NliLabel::Contradiction
        );
        assert_eq!(
            NliVerdict::from_scores(scores(0.5, 0.5, 0.0)).unwrap().label,
            NliLabel::Entailment
        );
        assert!(NliVerdict::from_scores(scores(0.5, 0.4, 0.0)).is_err());
        assert!(NliVerdict::from_scores(scores(1.2, -0.2, 0.0)).is_err());
    }

    #[test]
    fn entity_span_uses_chars() {
        let text = "Zürich is in Switzerland";
        let e = Entity::from_span(text, 13, 24).unwrap();
        assert_eq!(e.surface, "Switzerland");
        assert_eq!(Entity::from_span(text, 0, 6).unwrap().surface, "Zürich");
        assert!(Entity::from_span(text, 20, 30).is_none());
        assert!(Entity::from_span(text, 3, 3).is_none());
    }

    #[test]
    fn overlaps_are_dropped() {
        let e = |s: usize, t: usize| Entity { surface: String::new(), start: s, end: t };
        let kept = non_overlapping(vec![e(5, 9), e(0, 4), e(0, 2), e(3, 6), e(9, 10)]);
        assert_eq!(kept, vec![e(0, 4), e(5, 9), e(9, 10)]);
    }

    #[test]
    fn empty_suite_is_unhealthy() {
        let suite = BackendSuite::default();
        assert_eq!(
            suite.check_health(&[Capability::Nli]),
            Err(BackendError::Unsupported(Capability::Nli))
        );
        assert!(suite.check_health(&[]).is_ok());
    }
}
