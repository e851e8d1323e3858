//! Counting relevant hallucinations with entity extraction plus entailment.
//!
//! Every ordered pair of distinct extracted entities is combined with every
//! relation of the schema. Candidates the annotation already holds are
//! skipped; the rest are kept when the text entails them. What survives is
//! what the text says and the annotation lacks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, BackendSuite, NliPair};
use crate::ingest::IngestError;
use crate::model::{linearize_triple, DataPoint, Dataset, ModelError, RelationSchema, Triple, TripleSet};

#[derive(Debug, Error)]
pub enum QuantifyError {
    #[error("relation schema is empty")]
    EmptySchema,
    #[error("point `{0}` has an empty text")]
    EmptyText(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointQuant {
    /// `|E|·(|E|−1)·|R|`, including candidates skipped for being annotated.
    pub candidates: usize,
    pub found_missing: TripleSet,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantReport {
    pub absolute_missing: usize,
    pub points: Vec<PointQuant>,
    /// `absolute_missing` over the number of annotated triples.
    pub relative_missing: f64,
}

/// Candidate triples `(e1, r, e2)` for distinct entity surfaces, head-major,
/// relations in schema order.
pub fn candidate_triples(surfaces: &[String], schema: &RelationSchema) -> Result<Vec<Triple>, ModelError> {
    let mut out = Vec::with_capacity(surfaces.len() * surfaces.len().saturating_sub(1) * schema.iter().len());
    for (i, head) in surfaces.iter().enumerate() {
        for (j, tail) in surfaces.iter().enumerate() {
            if i == j {
                continue;
            }
            for relation in schema.iter() {
                out.push(Triple::new(head.as_str(), relation, tail.as_str())?);
            }
        }
    }
    Ok(out)
}

/// Runs the algorithm on one point. Makes one extraction call and, if any
/// candidate remains, one entailment batch.
pub fn ener(point: &DataPoint, schema: &RelationSchema, suite: &BackendSuite) -> Result<PointQuant, QuantifyError> {
    if schema.iter().len() == 0 {
        return Err(QuantifyError::EmptySchema);
    }
    if point.text().trim().is_empty() {
        return Err(QuantifyError::EmptyText(point.id().to_owned()));
    }

    let entities = suite
        .extractor
        .extract_entities(&[point.text()])?
        .pop()
        .unwrap_or_default();
    let mut surfaces: Vec<String> = Vec::new();
    for entity in entities {
        if !surfaces.contains(&entity.surface) {
            surfaces.push(entity.surface);
        }
    }

    let all = candidate_triples(&surfaces, schema)?;
    let candidates = all.len();
    let annotated: TripleSet = point.triples().iter().map(Triple::normalized).collect();
    let open: Vec<Triple> = all
        .into_iter()
        .filter(|t| !annotated.contains(&t.normalized()))
        .collect();

    let mut found_missing = TripleSet::new();
    if !open.is_empty() {
        let hypotheses: Vec<String> = open.iter().map(linearize_triple).collect();
        let pairs: Vec<NliPair<'_>> = hypotheses
            .iter()
            .map(|h| NliPair::new(point.text(), h))
            .collect();
        let verdicts = suite.entailment.judge_entailment(&pairs)?;
        if verdicts.len() != pairs.len() {
            return Err(BackendError::ProtocolError(format!(
                "expected {} verdicts, got {}",
                pairs.len(),
                verdicts.len()
            ))
            .into());
        }
        for (triple, verdict) in open.into_iter().zip(verdicts) {
            if verdict.is_entailment() {
                found_missing.insert(triple);
            }
        }
    }

    Ok(PointQuant {
        candidates,
        found_missing,
        id: point.id().to_owned(),
    })
}

/// Runs [`ener`] on every point, in parallel, and aggregates the counts.
pub fn quantify_dataset(ds: &Dataset, schema: &RelationSchema, suite: &BackendSuite) -> Result<QuantReport, QuantifyError> {
    if schema.iter().len() == 0 {
        return Err(QuantifyError::EmptySchema);
    }
    let points: Vec<PointQuant> = ds
        .points()
        .par_iter()
        .map(|p| ener(p, schema, suite))
        .collect::<Result<_, _>>()?;
    let absolute_missing = points.iter().map(|p| p.found_missing.len()).sum();
    let total = ds.total_triples();
    let relative_missing = if total == 0 {
        0.0
    } else {
        absolute_missing as f64 / total as f64
    };
    Ok(QuantReport {
        absolute_missing,
        points,
        relative_missing,
    })
}

pub fn write_quant_report(path: &Path, report: &QuantReport) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, report).map_err(|e| IngestError::MalformedJson(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_quant_report(path: &Path) -> Result<QuantReport, IngestError> {
    serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(|e| IngestError::MalformedJson(e.to_string()))
}
