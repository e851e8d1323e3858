//! Hallucination detectors over `(annotation, text)` pairs.
//!
//! * **NER matching** extracts entities from the text and accepts the text as
//!   clean only if every entity is similar enough (score ≥ threshold) to some
//!   head or tail of the annotation.
//! * **Entailment** linearizes the annotation into one sentence and asks the
//!   entailment judge whether the text follows from it. Only `entailment`
//!   counts as clean; `neutral` and `contradiction` mean the text says more
//!   than (or something other than) the annotation.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::backends::{BackendError, BackendSuite, Entity, NliPair, NliVerdict};
use crate::corrupt::DetectionSample;
use crate::ingest::IngestError;
use crate::model::{linearize_triple_set, normalize_surface, DataPoint, Dataset, ModelError, TripleSet};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("point `{0}` has an empty annotation")]
    EmptyAnnotation(String),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionLabel {
    Clean,
    Hallucinated,
}

/// Gold role of a text: taken from a detection sample, or unknown for plain
/// dataset points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextRole {
    Clean,
    Hallucinated,
    Unlabeled,
}

/// An extracted entity with its closest annotation entity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityScore {
    pub best_match: Option<String>,
    pub best_score: f64,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Ner { threshold: f64, unmatched: Vec<EntityScore> },
    Nli(NliVerdict),
}

impl Evidence {
    pub fn to_json(&self) -> Value {
        match self {
            Evidence::Ner { threshold, unmatched } => json!({
                "method": "ner",
                "threshold": threshold,
                "unmatched": unmatched,
            }),
            Evidence::Nli(verdict) => json!({
                "label": verdict.label,
                "method": "nli",
                "scores": verdict.scores,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionVerdict {
    pub label: DetectionLabel,
    pub evidence: Evidence,
}

/// Annotation entities: every head and tail, normalized, first occurrence
/// order, without duplicates.
pub fn annotation_entities(triples: &TripleSet) -> Vec<String> {
    let mut pool: Vec<String> = Vec::new();
    for triple in triples {
        for surface in [triple.head(), triple.tail()] {
            let surface = normalize_surface(surface);
            if !pool.contains(&surface) {
                pool.push(surface);
            }
        }
    }
    pool
}

/// Threshold-independent part of NER detection: the best annotation match of
/// every extracted entity.
#[derive(Debug, Clone, PartialEq)]
pub struct NerScores {
    pub entities: Vec<EntityScore>,
}

impl NerScores {
    /// Lowest best-match score over the extracted entities (1 if none).
    pub fn worst_score(&self) -> f64 {
        self.entities
            .iter()
            .map(|e| e.best_score)
            .fold(1.0, f64::min)
    }

    pub fn verdict(&self, threshold: f64) -> DetectionVerdict {
        let unmatched: Vec<EntityScore> = self
            .entities
            .iter()
            .filter(|e| e.best_score < threshold)
            .cloned()
            .collect();
        let label = if unmatched.is_empty() {
            DetectionLabel::Clean
        } else {
            DetectionLabel::Hallucinated
        };
        DetectionVerdict {
            label,
            evidence: Evidence::Ner { threshold, unmatched },
        }
    }
}

fn check_threshold(threshold: f64) -> Result<(), DetectError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(DetectError::InvalidThreshold(threshold))
    }
}

/// Extracts entities from the text and scores each against the annotation
/// entities in one similarity batch of `|E| × |pool|` pairs.
pub fn ner_scores(point: &DataPoint, suite: &BackendSuite) -> Result<NerScores, DetectError> {
    if point.triples().is_empty() {
        return Err(DetectError::EmptyAnnotation(point.id().to_owned()));
    }
    let pool = annotation_entities(point.triples());
    let entities: Vec<Entity> = suite
        .extractor
        .extract_entities(&[point.text()])?
        .pop()
        .unwrap_or_default();
    if entities.is_empty() {
        return Ok(NerScores { entities: Vec::new() });
    }

    let pairs: Vec<(&str, &str)> = entities
        .iter()
        .flat_map(|e| pool.iter().map(move |p| (e.surface.as_str(), p.as_str())))
        .collect();
    let scores = suite.similarity.score_similarity(&pairs)?;
    if scores.len() != pairs.len() {
        return Err(BackendError::ProtocolError(format!(
            "expected {} similarity scores, got {}",
            pairs.len(),
            scores.len()
        ))
        .into());
    }

    let entities = entities
        .iter()
        .zip(scores.chunks(pool.len()))
        .map(|(entity, row)| {
            let mut best: Option<(usize, f64)> = None;
            for (i, &s) in row.iter().enumerate() {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
            let (best_index, best_score) = best.expect("pool is non-empty");
            EntityScore {
                best_match: Some(pool[best_index].clone()),
                best_score,
                surface: entity.surface.clone(),
            }
        })
        .collect();
    Ok(NerScores { entities })
}

/// Clean iff every extracted entity matches an annotation entity with score
/// at least `threshold`. A text without entities is clean.
pub fn detect_ner(
    point: &DataPoint,
    suite: &BackendSuite,
    threshold: f64,
) -> Result<DetectionVerdict, DetectError> {
    check_threshold(threshold)?;
    Ok(ner_scores(point, suite)?.verdict(threshold))
}

/// The premise sentence for a triple set: triples sorted, linearized and
/// joined with `" and "`.
pub fn premise_sentence(triples: &TripleSet) -> Result<String, ModelError> {
    linearize_triple_set(&triples.sorted())
}

/// Clean iff the judge finds the text entailed by the linearized annotation.
pub fn detect_nli(point: &DataPoint, suite: &BackendSuite) -> Result<DetectionVerdict, DetectError> {
    if point.triples().is_empty() {
        return Err(DetectError::EmptyAnnotation(point.id().to_owned()));
    }
    let premise = premise_sentence(point.triples())?;
    let verdict = suite
        .entailment
        .judge_entailment(&[NliPair::new(&premise, point.text())])?
        .pop()
        .ok_or_else(|| BackendError::ProtocolError("no verdict returned".into()))?;
    let label = if verdict.is_entailment() {
        DetectionLabel::Clean
    } else {
        DetectionLabel::Hallucinated
    };
    Ok(DetectionVerdict {
        label,
        evidence: Evidence::Nli(verdict),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Ner { threshold: f64 },
    Nli,
}

#[derive(Debug, Clone, Copy)]
pub enum DetectionInput<'a> {
    Dataset(&'a Dataset),
    Samples(&'a [DetectionSample]),
}

/// One classified text. `index` is the text's position within its role list
/// of the sample (always 0 for dataset points).
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRecord {
    pub id: String,
    pub role: TextRole,
    pub index: usize,
    pub verdict: DetectionVerdict,
}

impl VerdictRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "evidence": self.verdict.evidence.to_json(),
            "id": self.id,
            "index": self.index,
            "label": self.verdict.label,
            "role": self.role,
        })
    }
}

/// A text to classify, with the annotation it is checked against.
#[derive(Debug, Clone)]
pub struct DetectionItem {
    pub id: String,
    pub role: TextRole,
    pub index: usize,
    pub point: DataPoint,
}

/// Flattens the input into one item per text: for each sample its clean texts
/// first, then its hallucinated texts.
pub fn detection_items(input: DetectionInput<'_>) -> Result<Vec<DetectionItem>, DetectError> {
    let mut items = Vec::new();
    match input {
        DetectionInput::Dataset(ds) => {
            for point in ds.points() {
                items.push(DetectionItem {
                    id: point.id().to_owned(),
                    role: TextRole::Unlabeled,
                    index: 0,
                    point: point.clone(),
                });
            }
        }
        DetectionInput::Samples(samples) => {
            for sample in samples {
                let texts = sample
                    .clean_texts
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (TextRole::Clean, i, t))
                    .chain(
                        sample
                            .hallucinated_texts
                            .iter()
                            .enumerate()
                            .map(|(i, h)| (TextRole::Hallucinated, i, &h.text)),
                    );
                for (role, index, text) in texts {
                    items.push(DetectionItem {
                        id: sample.id.clone(),
                        role,
                        index,
                        point: DataPoint::new(sample.id.clone(), text.clone(), sample.triples.clone())?,
                    });
                }
            }
        }
    }
    Ok(items)
}

/// Classifies every text of the input, in input order.
pub fn detect_batch(
    input: DetectionInput<'_>,
    method: Method,
    suite: &BackendSuite,
) -> Result<Vec<VerdictRecord>, DetectError> {
    if let Method::Ner { threshold } = method {
        check_threshold(threshold)?;
    }
    detection_items(input)?
        .into_par_iter()
        .map(|item| {
            let verdict = match method {
                Method::Ner { threshold } => detect_ner(&item.point, suite, threshold)?,
                Method::Nli => detect_nli(&item.point, suite)?,
            };
            Ok(VerdictRecord {
                id: item.id,
                role: item.role,
                index: item.index,
                verdict,
            })
        })
        .collect()
}

/// The label-bearing part of a verdict line; evidence is not read back.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct VerdictLine {
    pub id: String,
    #[serde(default)]
    pub index: usize,
    pub label: DetectionLabel,
    pub role: TextRole,
}

pub fn write_verdicts_to<W: Write>(mut out: W, records: &[VerdictRecord]) -> Result<(), IngestError> {
    for record in records {
        out.write_all(record.to_json().to_string().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_verdicts_from<R: BufRead>(input: R) -> Result<Vec<VerdictLine>, IngestError> {
    let mut lines = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push(serde_json::from_str(&line).map_err(|e| IngestError::SchemaViolation {
            line: index + 1,
            message: e.to_string(),
        })?);
    }
    Ok(lines)
}
